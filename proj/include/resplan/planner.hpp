#pragma once

// Plan synthesis over the deterministic model. Preferences are tracked by one
// progression automaton each; the search runs best-first branch-and-bound over
// the product of joint states and automaton states, maximizing
//
//   goal_reward * |goals| + sum(satisfied preference weights)
//     + sum(preserved ordering weights) - action_cost * actions
//
// Mission goals are hard, preferences soft. Waits cost nothing.

#include <climits>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "resplan/domain.hpp"
#include "resplan/ltl.hpp"
#include "resplan/prefs.hpp"

namespace resplan::planner {

enum class Provenance { baseline, constrained };

struct SearchConfig {
  int horizon = 0;  // 0: the world's horizon
  std::size_t node_budget = 3'000'000;
  double goal_reward = 20.0;
  double action_cost = 1.0;
  // Joint actions are tried in lexicographic order over (UAV declaration
  // order, action order Move N,S,E,W < TakePhoto < PickUp < Drop < Wait);
  // frontier ties go to terminal entries, then later timesteps, then earlier
  // generation. This is the only supported tie-break.
  std::string tie_break = "lexicographic";

  int effective_horizon(const domain::World& w) const { return horizon > 0 ? horizon : w.horizon(); }
};

/// Preference automata bound to a world: atoms resolved to propositions.
class CompiledPreferences {
 public:
  static constexpr int unreachable = INT_MAX;

  CompiledPreferences() = default;
  CompiledPreferences(const domain::World& world, const prefs::PreferenceSet& set);

  std::size_t size() const { return entries_.size(); }
  const prefs::PreferenceSet& set() const { return set_; }

  /// Automaton state after consuming the label of the initial state.
  std::uint32_t start(std::size_t pref, const domain::JointState& s0) const;
  /// Automaton state after consuming the label of `next`.
  std::uint32_t advance(std::size_t pref, std::uint32_t q, const domain::JointState& next) const;
  bool accepting(std::size_t pref, std::uint32_t q) const { return entries_[pref].automaton.accepting(q); }
  /// Fewest further labels needed to reach an accepting state.
  int distance_to_accept(std::size_t pref, std::uint32_t q) const { return entries_[pref].distance[q]; }
  const ltl::Automaton& automaton(std::size_t pref) const { return entries_[pref].automaton; }
  const ltl::Formula& formula(std::size_t pref) const { return entries_[pref].formula; }
  bool in_ordering(std::size_t pref) const { return entries_[pref].in_ordering; }

  struct IndexedOrdering {
    std::size_t earlier;
    std::size_t later;
    double weight;
  };
  const std::vector<IndexedOrdering>& orderings() const { return orderings_; }

 private:
  struct Entry {
    ltl::Formula formula;
    ltl::Automaton automaton;
    std::vector<domain::ResolvedProposition> atoms;
    std::vector<int> distance;
    bool in_ordering = false;
  };
  std::uint64_t label_bits(const Entry& e, const domain::JointState& s) const;

  const domain::World* world_ = nullptr;
  prefs::PreferenceSet set_;
  std::vector<Entry> entries_;
  std::vector<IndexedOrdering> orderings_;
};

/// A search node: joint state plus one automaton state and first
/// satisfaction time (-1 when not yet accepted) per preference.
struct ProductNode {
  domain::JointState state;
  std::vector<std::uint32_t> automaton_states;
  std::vector<int> first_sat;
  int actions = 0;

  bool operator==(const ProductNode&) const = default;
};

class ProductModel {
 public:
  ProductModel(const domain::World& world, const prefs::PreferenceSet& set, const SearchConfig& config);

  const domain::World& world() const { return world_; }
  const CompiledPreferences& preferences() const { return prefs_; }
  int horizon() const { return horizon_; }

  ProductNode root() const;
  ProductNode advance(const ProductNode& n, const domain::JointAction& a) const;

  bool goals_complete(const ProductNode& n) const;
  /// Net score if the plan stopped at this node (goals counted as achieved).
  double terminal_score(const ProductNode& n) const;
  /// False when some unachieved mission goal can no longer be reached.
  bool goals_reachable(const ProductNode& n) const;
  /// Optimistic bound on the score of any completion of `n`. Unreachable
  /// goals contribute no reward.
  double upper_bound(const ProductNode& n) const;

  /// Byte key identifying everything that decides future scores.
  std::string key(const ProductNode& n) const;

 private:
  struct GoalEstimate {
    bool achieved = false;
    bool reachable = false;
    int moves = 0;     // fewest moves any UAV needs
    int discrete = 0;  // photo / pickup / drop actions it needs
  };
  GoalEstimate estimate(const domain::Goal& g, const ProductNode& n) const;

  const domain::World& world_;
  SearchConfig config_;
  int horizon_;
  CompiledPreferences prefs_;
};

struct Plan {
  std::vector<domain::JointAction> actions;
  std::vector<domain::JointState> trace;
  Provenance provenance = Provenance::baseline;
  double score = 0.0;
  bool budget_exhausted = false;
  std::size_t expanded = 0;

  int action_count() const;
  bool operator==(const Plan& o) const { return actions == o.actions && trace == o.trace && score == o.score; }
};

/// Replays `actions` from the initial state; throws PreconditionError.
Plan make_plan(const domain::World& world, std::vector<domain::JointAction> actions,
               Provenance provenance = Provenance::baseline);

/// Throws UnsolvableError when no plan reaches every mission goal within the
/// horizon, BudgetExceededError when the budget ran out before any did. A
/// plan returned after the budget ran out has budget_exhausted set.
Plan plan_baseline(const domain::World& world, const SearchConfig& config = {});
Plan plan_with_preferences(const domain::World& world, const prefs::PreferenceSet& set,
                           const SearchConfig& config = {});

/// Score of a fixed plan through the automaton route (no goal requirement:
/// only achieved goals are rewarded).
double deterministic_score(const Plan& plan, const domain::World& world, const prefs::PreferenceSet& set,
                           const SearchConfig& config = {});

struct PreferenceOutcome {
  std::string name;
  bool satisfied = false;
  std::optional<int> first_satisfied;
  double reward = 0.0;
  prefs::ConstraintKind kind = prefs::ConstraintKind::declarative;
};

struct OrderingOutcome {
  std::string earlier;
  std::string later;
  bool preserved = false;
  double reward = 0.0;
};

struct ExplainReport {
  std::vector<std::string> goals_achieved;
  std::vector<std::string> goals_missed;
  std::vector<PreferenceOutcome> preferences;
  std::vector<OrderingOutcome> orderings;
  int actions = 0;
  double goal_reward = 0.0;
  double preference_reward = 0.0;
  double ordering_reward = 0.0;
  double action_cost = 0.0;
  double total = 0.0;
};

/// Satisfaction report computed by direct LTLf evaluation of each lowered
/// preference over the plan's trace.
ExplainReport explain(const Plan& plan, const domain::World& world, const prefs::PreferenceSet& set,
                      const SearchConfig& config = {});

/// Trace labels: rendered propositions per state.
ltl::Trace trace_labels(const std::vector<domain::JointState>& trace, const domain::World& world);

/// Line format: `t=<k> <uav>:<action> ...` per step, then `score=<value>`.
std::string render_plan(const Plan& plan, const domain::World& world);
/// Parses render_plan output; unlisted UAVs wait. The score footer, when
/// present, is ignored in favour of replay. Throws ParseError.
Plan parse_plan(const std::string& text, const domain::World& world);

}  // namespace resplan::planner
