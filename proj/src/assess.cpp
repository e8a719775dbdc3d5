#include "resplan/assess.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <unordered_map>

#include "resplan/error.hpp"

namespace resplan::assess {

using domain::ActionKind;
using domain::JointAction;
using domain::JointState;
using domain::UavAction;
using domain::World;

std::string pattern_name(ActionPattern p) {
  switch (p) {
    case ActionPattern::any:
      return "any";
    case ActionPattern::move:
      return "move";
    case ActionPattern::photo:
      return "photo";
    case ActionPattern::pickup:
      return "pickup";
    case ActionPattern::drop:
      return "drop";
  }
  return "?";
}

std::string failure_name(FailureMode m) {
  switch (m) {
    case FailureMode::no_effect:
      return "no-effect";
    case FailureMode::action_wasted:
      return "action-wasted";
    case FailureMode::uav_lost:
      return "uav-lost";
  }
  return "?";
}

namespace {

const Hypothesis* find_hypothesis(const AssessmentModel& m, const std::string& name) {
  for (const auto& h : m.hypotheses) {
    if (h.name == name) return &h;
  }
  return nullptr;
}

}  // namespace

void AssessmentModel::validate() const {
  if (goal_reward < 0 || action_cost < 0 || ordering_reward < 0) {
    throw ValidationError("assessment constants must be nonnegative");
  }
  if (!(discount > 0.0 && discount <= 1.0)) throw ValidationError("discount must be in (0, 1]");
  if (!(default_probability >= 0.0 && default_probability <= 1.0)) {
    throw ValidationError("default probability must be in [0, 1]");
  }
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto& h = hypotheses[i];
    for (std::size_t j = 0; j < i; ++j) {
      if (hypotheses[j].name == h.name) throw ValidationError("duplicate hypothesis '" + h.name + "'");
    }
    if (h.values.empty()) throw ValidationError("hypothesis '" + h.name + "' has no values");
    double total = 0.0;
    for (const auto& [value, p] : h.values) {
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("hypothesis '" + h.name + "': prior out of [0, 1]");
      total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw ValidationError("hypothesis '" + h.name + "': priors must sum to 1");
  }
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    const std::string where = "rule " + std::to_string(i + 1) + ": ";
    if (r.probability && !(*r.probability >= 0.0 && *r.probability <= 1.0)) {
      throw ValidationError(where + "probability must be in [0, 1]");
    }
    if (r.probability && r.when) throw ValidationError(where + "give either a probability or a condition");
    if (r.uav && !world.uav_index(*r.uav)) throw ValidationError(where + "unknown uav '" + *r.uav + "'");
    if (r.target && !world.target_index(*r.target)) throw ValidationError(where + "unknown target '" + *r.target + "'");
    if (r.pallet && !world.pallet_index(*r.pallet)) throw ValidationError(where + "unknown pallet '" + *r.pallet + "'");
    if (r.asset && !world.asset_index(*r.asset)) throw ValidationError(where + "unknown asset '" + *r.asset + "'");
    if (r.near_target && !world.target_index(*r.near_target)) {
      throw ValidationError(where + "unknown target '" + *r.near_target + "'");
    }
    if (r.near_radius < 0) throw ValidationError(where + "radius must be nonnegative");
    if (r.moves_every < 0) throw ValidationError(where + "moves-every must be nonnegative");
    for (const auto& c : r.cells) {
      if (!world.grid().contains(c)) {
        throw ValidationError(where + "cell (" + std::to_string(c.x) + "," + std::to_string(c.y) + ") is off the grid");
      }
    }
    if (r.when) {
      const auto* h = find_hypothesis(*this, r.when->first);
      if (!h) throw ValidationError(where + "unknown hypothesis '" + r.when->first + "'");
      bool known = false;
      for (const auto& v : h->values) known = known || v.first == r.when->second;
      if (!known) throw ValidationError(where + "hypothesis '" + h->name + "' has no value '" + r.when->second + "'");
    }
  }
}

double ReturnReport::probability_mass() const {
  double total = 0.0;
  for (const auto& o : outcomes) total += o.probability;
  return total;
}

namespace {

struct Sim {
  JointState s;
  std::vector<bool> operational;
  std::vector<int> hyp;    // drawn value index, -1 until first consulted
  std::vector<int> moves;  // attempted moves per UAV
  std::vector<std::uint32_t> q;
  std::vector<int> first_sat;
};

struct Branch {
  double p;
  Sim next;
  int charged;
  double goal_reward;  // discounted
  double cost;         // discounted
};

struct ResolvedRule {
  const OutcomeRule* rule;
  int uav = -1, target = -1, pallet = -1, asset = -1, near = -1;
  int hyp = -1, hyp_value = -1;
};

void put(std::string& out, std::uint64_t v, int bytes) {
  for (int b = 0; b < bytes; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

class Engine {
 public:
  Engine(const AssessmentModel& m, const prefs::PreferenceSet& p) : m_(m), w_(m.world), prefs_(m.world, p) {
    m.validate();
    for (const auto& r : m.rules) {
      ResolvedRule rr{&r};
      if (r.uav) rr.uav = *w_.uav_index(*r.uav);
      if (r.target) rr.target = *w_.target_index(*r.target);
      if (r.pallet) rr.pallet = *w_.pallet_index(*r.pallet);
      if (r.asset) rr.asset = *w_.asset_index(*r.asset);
      if (r.near_target) rr.near = *w_.target_index(*r.near_target);
      if (r.when) {
        for (std::size_t h = 0; h < m.hypotheses.size(); ++h) {
          if (m.hypotheses[h].name != r.when->first) continue;
          rr.hyp = static_cast<int>(h);
          for (std::size_t v = 0; v < m.hypotheses[h].values.size(); ++v) {
            if (m.hypotheses[h].values[v].first == r.when->second) rr.hyp_value = static_cast<int>(v);
          }
        }
      }
      track_moves_ = track_moves_ || r.moves_from >= 0 || r.moves_every > 0;
      move_floor_ = std::max(move_floor_, r.moves_from);
      if (r.moves_every > 0) move_period_ = std::lcm(move_period_, r.moves_every);
      rules_.push_back(rr);
    }
  }

  // Move counts that no rule can tell apart share one representative:
  // counts past the largest moves-from threshold reduce modulo the
  // moves-every period.
  int canonical_moves(int count) const {
    if (count <= move_floor_) return count;
    return count - move_period_ * ((count - move_floor_) / move_period_);
  }

  const World& world() const { return w_; }
  const planner::CompiledPreferences& prefs() const { return prefs_; }

  Sim initial() const {
    Sim sim;
    sim.s = w_.initial_state();
    for (const auto& u : w_.uavs()) sim.operational.push_back(u.operational);
    sim.hyp.assign(m_.hypotheses.size(), -1);
    sim.moves.assign(w_.uavs().size(), 0);
    for (std::size_t i = 0; i < prefs_.size(); ++i) {
      auto q = prefs_.start(i, sim.s);
      sim.q.push_back(q);
      sim.first_sat.push_back(prefs_.accepting(i, q) ? 0 : -1);
    }
    return sim;
  }

  int goals_met(const JointState& s) const {
    int n = 0;
    for (const auto& g : w_.goals()) n += domain::goal_satisfied(g, s, w_) ? 1 : 0;
    return n;
  }

  double initial_goal_reward(const Sim& sim) const { return m_.goal_reward * goals_met(sim.s); }

  double preference_reward(const Sim& sim) const {
    double r = 0.0;
    for (std::size_t i = 0; i < prefs_.size(); ++i) {
      if (prefs_.accepting(i, sim.q[i])) r += prefs_.set().preferences[i].weight;
    }
    return r * std::pow(m_.discount, sim.s.t);
  }

  double ordering_reward(const Sim& sim, int* preserved = nullptr) const {
    double r = 0.0;
    int count = 0;
    for (const auto& o : prefs_.orderings()) {
      if (!prefs_.accepting(o.earlier, sim.q[o.earlier]) || !prefs_.accepting(o.later, sim.q[o.later])) continue;
      if (sim.first_sat[o.earlier] <= sim.first_sat[o.later]) {
        r += o.weight;
        ++count;
      }
    }
    if (preserved) *preserved = count;
    return r * std::pow(m_.discount, sim.s.t);
  }

  double terminal(const Sim& sim) const { return preference_reward(sim) + ordering_reward(sim); }

  bool matches(const ResolvedRule& rr, const Sim& sim, int u, const UavAction& a) const {
    const OutcomeRule& r = *rr.rule;
    switch (r.action) {
      case ActionPattern::any:
        break;
      case ActionPattern::move:
        if (a.kind != ActionKind::move) return false;
        break;
      case ActionPattern::photo:
        if (a.kind != ActionKind::photo) return false;
        break;
      case ActionPattern::pickup:
        if (a.kind != ActionKind::pickup) return false;
        break;
      case ActionPattern::drop:
        if (a.kind != ActionKind::drop) return false;
        break;
    }
    const auto uu = static_cast<std::size_t>(u);
    const int t = sim.s.t;
    if (rr.uav >= 0 && rr.uav != u) return false;
    if (rr.target >= 0 && !(a.kind == ActionKind::photo && a.arg == rr.target)) return false;
    if (rr.pallet >= 0) {
      const bool hit = (a.kind == ActionKind::pickup && a.arg == rr.pallet) ||
                       (a.kind == ActionKind::drop && sim.s.carrying[uu] == rr.pallet);
      if (!hit) return false;
    }
    if (rr.asset >= 0 && !(a.kind == ActionKind::drop && a.arg == rr.asset)) return false;
    const domain::Cell at = sim.s.uav_at[uu];
    if (!r.cells.empty() && std::find(r.cells.begin(), r.cells.end(), at) == r.cells.end()) return false;
    if (rr.near >= 0 &&
        domain::manhattan(at, w_.targets()[static_cast<std::size_t>(rr.near)].at(t)) > r.near_radius) {
      return false;
    }
    if (r.moves_from >= 0 && !(a.kind == ActionKind::move && sim.moves[uu] >= r.moves_from)) return false;
    if (r.moves_every > 0 && !(a.kind == ActionKind::move && (sim.moves[uu] + 1) % r.moves_every == 0)) return false;
    if (r.from_t && t < *r.from_t) return false;
    if (r.until_t && t > *r.until_t) return false;
    return true;
  }

  /// Outcome branches of `a` in `sim`. Open-loop execution voids actions
  /// that became inapplicable; closed-loop callers only pass applicable ones.
  std::vector<Branch> transitions(const Sim& sim, const JointAction& a) const {
    const std::size_t n = w_.uavs().size();
    JointAction intended(n, UavAction::wait());
    std::vector<char> charged(n, 0);
    std::vector<int> rule_of(n, -1);
    std::vector<char> picked(w_.pallets().size(), 0);
    Sim base = sim;
    for (std::size_t u = 0; u < n; ++u) {
      const UavAction& act = a[u];
      if (!sim.operational[u] || act.is_wait()) continue;
      bool ok = domain::precondition_failure(sim.s, w_, static_cast<int>(u), act).empty();
      if (ok && act.kind == ActionKind::pickup) {
        auto& slot = picked[static_cast<std::size_t>(act.arg)];
        ok = !slot;
        slot = 1;
      }
      charged[u] = 1;
      if (!ok) continue;
      intended[u] = act;
      for (std::size_t r = 0; r < rules_.size(); ++r) {
        if (matches(rules_[r], sim, static_cast<int>(u), act)) {
          rule_of[u] = static_cast<int>(r);
          break;
        }
      }
      if (act.kind == ActionKind::move && track_moves_) base.moves[u] = canonical_moves(base.moves[u] + 1);
    }

    // Hypotheses consulted for the first time are drawn now.
    std::vector<int> draws;
    for (std::size_t u = 0; u < n; ++u) {
      if (rule_of[u] < 0) continue;
      const int h = rules_[static_cast<std::size_t>(rule_of[u])].hyp;
      if (h >= 0 && sim.hyp[static_cast<std::size_t>(h)] < 0 && std::find(draws.begin(), draws.end(), h) == draws.end()) {
        draws.push_back(h);
      }
    }
    std::sort(draws.begin(), draws.end());

    std::vector<Branch> out;
    std::vector<std::size_t> pick(draws.size(), 0);
    while (true) {
      double p_draw = 1.0;
      Sim drawn = base;
      for (std::size_t d = 0; d < draws.size(); ++d) {
        const auto& values = m_.hypotheses[static_cast<std::size_t>(draws[d])].values;
        p_draw *= values[pick[d]].second;
        drawn.hyp[static_cast<std::size_t>(draws[d])] = static_cast<int>(pick[d]);
      }
      if (p_draw > 0.0) expand_outcomes(sim, drawn, intended, charged, rule_of, p_draw, out);
      std::size_t d = draws.size();
      bool done = true;
      while (d > 0) {
        --d;
        if (++pick[d] < m_.hypotheses[static_cast<std::size_t>(draws[d])].values.size()) {
          done = false;
          break;
        }
        pick[d] = 0;
      }
      if (done) break;
    }
    return out;
  }

  std::string key(const Sim& sim) const {
    std::string out;
    const auto& s = sim.s;
    put(out, static_cast<std::uint64_t>(s.t), 1);
    for (std::size_t u = 0; u < s.uav_at.size(); ++u) {
      put(out, static_cast<std::uint64_t>(s.uav_at[u].x), 1);
      put(out, static_cast<std::uint64_t>(s.uav_at[u].y), 1);
      put(out, static_cast<std::uint64_t>(s.carrying[u] + 1), 1);
      put(out, sim.operational[u] ? 1 : 0, 1);
      if (track_moves_) put(out, static_cast<std::uint64_t>(sim.moves[u]), 1);
    }
    for (const auto& c : s.pallet_at) {
      put(out, static_cast<std::uint64_t>(c.x), 1);
      put(out, static_cast<std::uint64_t>(c.y), 1);
    }
    put(out, s.photos, 8);
    put(out, s.visited, 8);
    put(out, s.delivered, 8);
    for (int h : sim.hyp) put(out, static_cast<std::uint64_t>(h + 1), 1);
    for (std::size_t i = 0; i < sim.q.size(); ++i) {
      put(out, sim.q[i], 2);
      if (prefs_.in_ordering(i)) put(out, static_cast<std::uint64_t>(sim.first_sat[i] + 1), 1);
    }
    return out;
  }

 private:
  void expand_outcomes(const Sim& sim, const Sim& drawn, const JointAction& intended, const std::vector<char>& charged,
                       const std::vector<int>& rule_of, double p_draw, std::vector<Branch>& out) const {
    const std::size_t n = intended.size();
    std::vector<double> success(n, 1.0);
    std::vector<std::size_t> uncertain;
    for (std::size_t u = 0; u < n; ++u) {
      if (rule_of[u] < 0) continue;
      const auto& rr = rules_[static_cast<std::size_t>(rule_of[u])];
      if (rr.hyp >= 0) {
        success[u] = drawn.hyp[static_cast<std::size_t>(rr.hyp)] == rr.hyp_value ? 1.0 : 0.0;
      } else {
        success[u] = rr.rule->probability.value_or(m_.default_probability);
      }
      uncertain.push_back(u);
    }
    // Success before failure, first UAV varying slowest.
    const std::size_t k = uncertain.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
      double p = p_draw;
      JointAction effective = intended;
      std::vector<bool> lost_now(n, false);
      int paid = 0;
      for (std::size_t u = 0; u < n; ++u) paid += charged[u];
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t u = uncertain[j];
        const bool fails = (mask >> (k - 1 - j)) & 1u;
        p *= fails ? 1.0 - success[u] : success[u];
        if (!fails) continue;
        effective[u] = UavAction::wait();
        switch (rules_[static_cast<std::size_t>(rule_of[u])].rule->on_failure) {
          case FailureMode::no_effect:
            --paid;
            break;
          case FailureMode::action_wasted:
            break;
          case FailureMode::uav_lost:
            lost_now[u] = true;
            break;
        }
      }
      if (p <= 0.0) continue;
      Branch b;
      b.p = p;
      b.next = drawn;
      b.next.s = domain::step(sim.s, effective, w_, &sim.operational);
      for (std::size_t u = 0; u < n; ++u) {
        if (lost_now[u]) b.next.operational[u] = false;
      }
      for (std::size_t i = 0; i < prefs_.size(); ++i) {
        auto q = prefs_.advance(i, sim.q[i], b.next.s);
        b.next.q[i] = q;
        if (b.next.first_sat[i] < 0 && prefs_.accepting(i, q)) b.next.first_sat[i] = b.next.s.t;
      }
      b.charged = paid;
      b.cost = m_.action_cost * paid * std::pow(m_.discount, sim.s.t);
      b.goal_reward = m_.goal_reward * (goals_met(b.next.s) - goals_met(sim.s)) * std::pow(m_.discount, b.next.s.t);
      out.push_back(std::move(b));
    }
  }

  const AssessmentModel& m_;
  const World& w_;
  planner::CompiledPreferences prefs_;
  std::vector<ResolvedRule> rules_;
  bool track_moves_ = false;
  int move_floor_ = 0;
  int move_period_ = 1;
};

std::string bits(double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof u);
  std::string out;
  put(out, u, 8);
  return out;
}

}  // namespace

ReturnReport expected_return(const planner::Plan& plan, const AssessmentModel& model, const prefs::PreferenceSet& prefs) {
  Engine engine(model, prefs);
  const World& w = engine.world();
  for (const auto& a : plan.actions) {
    if (a.size() != w.uavs().size()) throw PreconditionError("plan step has the wrong number of UAV actions");
  }

  struct Path {
    double p;
    Sim sim;
    int actions;
    double goal;
    double cost;
  };
  auto path_key = [&](const Path& path) {
    std::string k = engine.key(path.sim);
    put(k, static_cast<std::uint64_t>(path.actions), 2);
    return k + bits(path.goal) + bits(path.cost);
  };

  std::map<std::string, Path> current;
  {
    Path root{1.0, engine.initial(), 0, 0.0, 0.0};
    root.goal = engine.initial_goal_reward(root.sim);
    current.emplace(path_key(root), std::move(root));
  }
  for (const auto& a : plan.actions) {
    std::map<std::string, Path> next;
    for (const auto& [k, path] : current) {
      for (auto& b : engine.transitions(path.sim, a)) {
        Path child{path.p * b.p, std::move(b.next), path.actions + b.charged, path.goal + b.goal_reward,
                   path.cost + b.cost};
        auto ck = path_key(child);
        auto it = next.find(ck);
        if (it == next.end()) {
          next.emplace(std::move(ck), std::move(child));
        } else {
          it->second.p += child.p;
        }
      }
      if (next.size() > model.leaf_bound) {
        throw BoundExceededError("outcome tree exceeds " + std::to_string(model.leaf_bound) +
                                 " leaves; consolidate overlapping rules");
      }
    }
    current = std::move(next);
  }

  ReturnReport report;
  for (const auto& [k, path] : current) {
    Outcome o;
    o.probability = path.p;
    o.actions = path.actions;
    for (const auto& g : w.goals()) {
      if (domain::goal_satisfied(g, path.sim.s, w)) o.goals.push_back(g.id());
    }
    const auto& cp = engine.prefs();
    for (std::size_t i = 0; i < cp.size(); ++i) {
      if (cp.accepting(i, path.sim.q[i])) o.preferences.push_back(cp.set().preferences[i].name);
    }
    for (std::size_t u = 0; u < w.uavs().size(); ++u) {
      if (w.uavs()[u].operational && !path.sim.operational[u]) o.lost.push_back(w.uavs()[u].id);
    }
    const double pref = engine.preference_reward(path.sim);
    const double ord = engine.ordering_reward(path.sim, &o.orderings_preserved);
    o.score = path.goal + pref + ord - path.cost;
    report.goal_total += path.p * path.goal;
    report.preference_total += path.p * pref;
    report.ordering_total += path.p * ord;
    report.cost_total += path.p * path.cost;
    report.expected_return += path.p * o.score;
    report.outcomes.push_back(std::move(o));
  }
  return report;
}

namespace {

class Solver {
 public:
  Solver(const Engine& e, const AssessmentModel& m, int horizon) : e_(e), m_(m), horizon_(horizon) {}

  struct Entry {
    double value;
    int choice;  // index into applicable(), -1 to stop
  };

  double value(const Sim& sim) {
    auto k = e_.key(sim);
    if (auto it = memo_.find(k); it != memo_.end()) return it->second.value;
    double best = e_.terminal(sim);
    int choice = -1;
    if (sim.s.t < horizon_) {
      const auto options = domain::applicable(sim.s, e_.world(), &sim.operational);
      for (std::size_t i = 0; i < options.size(); ++i) {
        double v = 0.0;
        for (const auto& b : e_.transitions(sim, options[i])) v += b.p * (b.goal_reward - b.cost + value(b.next));
        if (v > best + 1e-12) {
          best = v;
          choice = static_cast<int>(i);
        }
      }
    }
    if (memo_.size() >= m_.state_bound) {
      throw BoundExceededError("expectimax exceeds " + std::to_string(m_.state_bound) + " states");
    }
    memo_.emplace(std::move(k), Entry{best, choice});
    return best;
  }

  const Entry& entry(const Sim& sim) const { return memo_.at(e_.key(sim)); }
  std::size_t size() const { return memo_.size(); }

 private:
  const Engine& e_;
  const AssessmentModel& m_;
  int horizon_;
  std::unordered_map<std::string, Entry> memo_;
};

}  // namespace

OptimalResult optimal_return(const AssessmentModel& model, const prefs::PreferenceSet& prefs, int horizon) {
  Engine engine(model, prefs);
  const World& w = engine.world();
  const int h = horizon > 0 ? horizon : w.horizon();
  Solver solver(engine, model, h);
  Sim sim = engine.initial();
  const double start_reward = engine.initial_goal_reward(sim);

  OptimalResult result;
  result.value = start_reward + solver.value(sim);
  result.states = solver.size();

  planner::Plan witness;
  witness.trace.push_back(sim.s);
  while (true) {
    const auto& entry = solver.entry(sim);
    if (entry.choice < 0) break;
    const auto options = domain::applicable(sim.s, w, &sim.operational);
    const auto& a = options[static_cast<std::size_t>(entry.choice)];
    auto branches = engine.transitions(sim, a);
    std::size_t pick = 0;
    for (std::size_t i = 1; i < branches.size(); ++i) {
      if (branches[i].p > branches[pick].p) pick = i;
    }
    witness.actions.push_back(a);
    sim = std::move(branches[pick].next);
    witness.trace.push_back(sim.s);
  }
  witness.provenance = planner::Provenance::constrained;
  result.witness_return = expected_return(witness, model, prefs).expected_return;
  witness.score = result.witness_return;
  result.witness = std::move(witness);
  return result;
}

double improvement(double baseline, double candidate) {
  if (baseline == 0.0) throw PreconditionError("improvement is undefined for a zero baseline return");
  return (candidate - baseline) / baseline * 100.0;
}

double improvement(const ReturnReport& baseline, const ReturnReport& candidate) {
  return improvement(baseline.expected_return, candidate.expected_return);
}

double optimality(double optimal, double candidate) {
  if (optimal == 0.0) throw PreconditionError("optimality is undefined for a zero optimal return");
  return (candidate - optimal) / optimal * 100.0;
}

double round1(double v) { return std::round(v * 10.0) / 10.0; }

}  // namespace resplan::assess
