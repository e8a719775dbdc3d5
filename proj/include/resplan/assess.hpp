#pragma once

// Stochastic assessment of plans. The planner works on the deterministic
// world; execution outcomes (fog, hostiles, headwinds, fuel, uncertain
// supplies) live here as outcome rules over actions.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "resplan/domain.hpp"
#include "resplan/planner.hpp"
#include "resplan/prefs.hpp"

namespace resplan::assess {

enum class ActionPattern { any, move, photo, pickup, drop };
enum class FailureMode { no_effect, action_wasted, uav_lost };

std::string pattern_name(ActionPattern p);
std::string failure_name(FailureMode m);

/// Uncertain fact with a prior over its values, drawn once per execution the
/// first time a rule consults it.
struct Hypothesis {
  std::string name;
  std::vector<std::pair<std::string, double>> values;

  bool operator==(const Hypothesis&) const = default;
};

/// Applies to one UAV's action when every given filter holds; the first
/// matching rule in model order wins. Positions are the acting UAV's cell
/// before the action.
struct OutcomeRule {
  ActionPattern action = ActionPattern::any;
  std::optional<std::string> uav;
  std::optional<std::string> target;  // photo subject
  std::optional<std::string> pallet;  // picked up, or carried when dropping
  std::optional<std::string> asset;   // drop destination
  std::vector<domain::Cell> cells;    // empty: anywhere
  std::optional<std::string> near_target;
  int near_radius = 0;
  int moves_from = -1;  // matches moves once the UAV has attempted this many
  int moves_every = 0;  // matches every n-th attempted move
  std::optional<int> from_t;
  std::optional<int> until_t;
  // Success is either a probability (model default when absent) or the
  // condition that a hypothesis holds a given value.
  std::optional<double> probability;
  std::optional<std::pair<std::string, std::string>> when;
  FailureMode on_failure = FailureMode::action_wasted;

  bool operator==(const OutcomeRule&) const = default;
};

struct AssessmentModel {
  domain::World world;
  std::vector<OutcomeRule> rules;
  std::vector<Hypothesis> hypotheses;
  double goal_reward = 20.0;
  double action_cost = 1.0;
  double ordering_reward = 10.0;  // default weight for orderings parsed against this model
  double default_probability = 0.5;
  double discount = 1.0;
  std::size_t leaf_bound = std::size_t{1} << 20;
  std::size_t state_bound = 3'000'000;

  /// Throws ValidationError on out-of-range constants, probabilities,
  /// unknown entities or hypotheses, and priors not summing to 1.
  void validate() const;
};

struct Outcome {
  double probability = 0.0;
  std::vector<std::string> goals;
  std::vector<std::string> preferences;
  int orderings_preserved = 0;
  int actions = 0;  // actions charged
  std::vector<std::string> lost;
  double score = 0.0;
};

struct ReturnReport {
  double expected_return = 0.0;
  std::vector<Outcome> outcomes;
  // Expected value of each score component; they sum to expected_return.
  double goal_total = 0.0;
  double preference_total = 0.0;
  double ordering_total = 0.0;
  double cost_total = 0.0;

  double probability_mass() const;
};

/// Open-loop: the plan runs as written. An action whose preconditions fail
/// in the realized state has no effect but is still charged; actions of a
/// lost UAV are skipped. Identical outcomes are merged. Throws
/// BoundExceededError past model.leaf_bound outcomes.
ReturnReport expected_return(const planner::Plan& plan, const AssessmentModel& model,
                             const prefs::PreferenceSet& prefs);

struct OptimalResult {
  double value = 0.0;        // closed-loop expectimax value
  planner::Plan witness;     // policy's actions along the most probable branch
  double witness_return = 0.0;  // open-loop expected return of the witness
  std::size_t states = 0;
};

/// Finite-horizon expectimax over joint actions and outcomes, with the
/// option to stop at any step. Horizon 0 uses the world's. Throws
/// BoundExceededError past model.state_bound states.
OptimalResult optimal_return(const AssessmentModel& model, const prefs::PreferenceSet& prefs, int horizon = 0);

/// (candidate - baseline) / baseline * 100. Throws PreconditionError on a
/// zero baseline.
double improvement(double baseline, double candidate);
double improvement(const ReturnReport& baseline, const ReturnReport& candidate);
/// (candidate - optimal) / optimal * 100.
double optimality(double optimal, double candidate);

/// Half away from zero, one decimal.
double round1(double v);

}  // namespace resplan::assess
