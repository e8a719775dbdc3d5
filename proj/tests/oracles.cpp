#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace oracle {

using namespace resplan;
using domain::ActionKind;
using domain::Cell;
using domain::JointAction;
using domain::JointState;
using domain::UavAction;
using domain::World;
using ltl::Op;

bool holds(const Formula& f, const Trace& trace, std::size_t i) {
  const std::size_t n = trace.size();
  const auto args = f.args();
  switch (f.op()) {
    case Op::truth:
      return true;
    case Op::falsity:
      return false;
    case Op::atom:
      return i < n && trace[i].count(f.name()) > 0;
    case Op::negation:
      return !holds(args[0], trace, i);
    case Op::conjunction:
      for (const auto& a : args) {
        if (!holds(a, trace, i)) return false;
      }
      return true;
    case Op::disjunction:
      for (const auto& a : args) {
        if (holds(a, trace, i)) return true;
      }
      return false;
    case Op::next:
      return i + 1 < n && holds(args[0], trace, i + 1);
    case Op::weak_next:
      return i + 1 >= n || holds(args[0], trace, i + 1);
    case Op::until:
      for (std::size_t j = i; j < n; ++j) {
        if (holds(args[1], trace, j)) return true;
        if (!holds(args[0], trace, j)) return false;
      }
      return false;
    case Op::release:
      for (std::size_t j = i; j < n; ++j) {
        if (!holds(args[1], trace, j)) return false;
        if (holds(args[0], trace, j)) return true;
      }
      return true;
    case Op::eventually:
      for (std::size_t j = i; j < n; ++j) {
        if (holds(args[0], trace, j)) return true;
      }
      return false;
    case Op::always:
      for (std::size_t j = i; j < n; ++j) {
        if (!holds(args[0], trace, j)) return false;
      }
      return true;
  }
  throw std::logic_error("unknown operator");
}

Formula random_formula(std::mt19937& rng, int depth, const std::vector<std::string>& atoms) {
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
  if (depth <= 0 || pick(4) == 0) {
    const int r = pick(12);
    if (r == 0) return Formula::top();
    if (r == 1) return Formula::bottom();
    return Formula::atom(atoms[static_cast<std::size_t>(pick(static_cast<int>(atoms.size())))]);
  }
  auto sub = [&] { return random_formula(rng, depth - 1, atoms); };
  switch (pick(9)) {
    case 0:
      return Formula::negation(sub());
    case 1:
      return Formula::conjunction({sub(), sub()});
    case 2:
      return Formula::disjunction({sub(), sub()});
    case 3:
      return Formula::next(sub());
    case 4:
      return Formula::weak_next(sub());
    case 5:
      return Formula::until(sub(), sub());
    case 6:
      return Formula::release(sub(), sub());
    case 7:
      return Formula::eventually(sub());
    default:
      return Formula::always(sub());
  }
}

std::vector<Formula> battery() {
  const Formula p = Formula::atom("p");
  const Formula q = Formula::atom("q");
  using F = Formula;
  return {
      p,
      F::negation(p),
      F::next(p),
      F::weak_next(p),
      F::eventually(p),
      F::always(p),
      F::until(p, q),
      F::release(p, q),
      F::conjunction({F::eventually(p), F::eventually(q)}),
      F::disjunction({F::always(p), F::eventually(q)}),
      F::always(F::implies(p, F::eventually(q))),
      F::always(F::implies(p, F::next(q))),
      F::eventually(F::conjunction({p, F::weak_next(F::bottom())})),
      F::eventually(F::always(p)),
      F::always(F::eventually(p)),
      F::until(F::negation(p), F::conjunction({q, F::negation(p)})),
      F::always(F::implies(p, F::disjunction({F::until(p, F::always(F::negation(p))), F::always(p)}))),
      F::next(F::next(F::weak_next(p))),
      F::release(F::negation(q), F::implies(p, F::next(q))),
      F::negation(F::until(F::eventually(p), F::always(q))),
  };
}

std::vector<Trace> all_traces(const std::vector<std::string>& atoms, std::size_t min_len, std::size_t max_len) {
  std::vector<Label> labels;
  for (std::size_t mask = 0; mask < (std::size_t{1} << atoms.size()); ++mask) {
    Label l;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if ((mask >> i) & 1u) l.insert(atoms[i]);
    }
    labels.push_back(l);
  }
  std::vector<Trace> out;
  std::vector<Trace> layer{Trace{}};
  for (std::size_t len = 0; len <= max_len; ++len) {
    if (len >= min_len) out.insert(out.end(), layer.begin(), layer.end());
    std::vector<Trace> grown;
    for (const auto& t : layer) {
      for (const auto& l : labels) {
        grown.push_back(t);
        grown.back().push_back(l);
      }
    }
    layer = std::move(grown);
  }
  return out;
}

Trace random_trace(std::mt19937& rng, const std::vector<std::string>& atoms, std::size_t max_len) {
  const std::size_t len = 1 + rng() % max_len;
  Trace t(len);
  for (auto& l : t) {
    for (const auto& a : atoms) {
      if (rng() % 2) l.insert(a);
    }
  }
  return t;
}

namespace {

bool prop(const Formula& f, const Label& label) {
  switch (f.op()) {
    case Op::truth:
      return true;
    case Op::falsity:
      return false;
    case Op::atom:
      return label.count(f.name()) > 0;
    case Op::negation:
      return !prop(f.args()[0], label);
    case Op::conjunction:
      for (const auto& a : f.args()) {
        if (!prop(a, label)) return false;
      }
      return true;
    case Op::disjunction:
      for (const auto& a : f.args()) {
        if (prop(a, label)) return true;
      }
      return false;
    default:
      throw std::invalid_argument("condition is not propositional");
  }
}

}  // namespace

bool satisfied(const prefs::Template& t, const Trace& trace) {
  const std::size_t n = trace.size();
  auto a = [&](std::size_t i) { return prop(t.first, trace[i]); };
  auto b = [&](std::size_t i) { return prop(*t.second, trace[i]); };
  switch (t.kind) {
    case prefs::TemplateKind::sometime:
      for (std::size_t i = 0; i < n; ++i) {
        if (a(i)) return true;
      }
      return false;
    case prefs::TemplateKind::always:
      for (std::size_t i = 0; i < n; ++i) {
        if (!a(i)) return false;
      }
      return true;
    case prefs::TemplateKind::sometime_after:
      for (std::size_t i = 0; i < n; ++i) {
        if (!a(i)) continue;
        bool later = false;
        for (std::size_t j = i; j < n && !later; ++j) later = b(j);
        if (!later) return false;
      }
      return true;
    case prefs::TemplateKind::sometime_before:
      for (std::size_t i = 0; i < n; ++i) {
        if (!a(i)) continue;
        bool earlier = false;
        for (std::size_t j = 0; j < i && !earlier; ++j) earlier = b(j);
        if (!earlier) return false;
      }
      return true;
    case prefs::TemplateKind::at_most_once: {
      int runs = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (a(i) && (i == 0 || !a(i - 1))) ++runs;
      }
      return runs <= 1;
    }
    case prefs::TemplateKind::at_end:
      return n > 0 && a(n - 1);
  }
  return false;
}

std::optional<int> first_satisfied(const prefs::Template& t, const Trace& trace) {
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (satisfied(t, Trace(trace.begin(), trace.begin() + static_cast<long>(k) + 1))) return static_cast<int>(k);
  }
  return std::nullopt;
}

Trace labels(const std::vector<JointState>& states, const World& w) {
  Trace out;
  for (const auto& s : states) {
    Label l;
    for (const auto& p : domain::propositions(s, w)) l.insert(p.render());
    out.push_back(std::move(l));
  }
  return out;
}

namespace {

double preference_part(const Trace& trace, const prefs::PreferenceSet& set) {
  double total = 0.0;
  for (const auto& p : set.preferences) {
    if (satisfied(p.body, trace)) total += p.weight;
  }
  for (const auto& o : set.orderings) {
    const auto* e = set.find(o.earlier);
    const auto* l = set.find(o.later);
    if (!satisfied(e->body, trace) || !satisfied(l->body, trace)) continue;
    if (*first_satisfied(e->body, trace) <= *first_satisfied(l->body, trace)) total += o.weight;
  }
  return total;
}

int goal_count(const JointState& s, const World& w) {
  int n = 0;
  for (const auto& g : w.goals()) n += domain::goal_satisfied(g, s, w) ? 1 : 0;
  return n;
}

}  // namespace

double plan_score(const std::vector<JointState>& states, int actions, const World& w,
                  const prefs::PreferenceSet& set, double goal_reward, double action_cost) {
  return goal_reward * goal_count(states.back(), w) + preference_part(labels(states, w), set) - action_cost * actions;
}

Enumeration enumerate(const World& w, const prefs::PreferenceSet& set, int horizon) {
  Enumeration out;
  std::vector<JointState> states{w.initial_state()};
  const int goals = static_cast<int>(w.goals().size());
  std::function<void(int)> dfs = [&](int actions) {
    ++out.nodes;
    const JointState s = states.back();
    if (goal_count(s, w) == goals) {
      const double v = plan_score(states, actions, w, set);
      if (!out.found || v > out.best) out.best = v;
      out.found = true;
    }
    if (s.t >= horizon) return;
    for (const auto& a : domain::applicable(s, w)) {
      states.push_back(domain::step(s, a, w));
      dfs(actions + domain::count_actions(a));
      states.pop_back();
    }
  };
  dfs(0);
  return out;
}

// --- assessment ---------------------------------------------------------------

namespace {

using assess::ActionPattern;
using assess::AssessmentModel;
using assess::FailureMode;
using assess::OutcomeRule;

struct History {
  std::vector<JointState> states;
  std::vector<bool> operational;
  std::map<std::string, std::string> drawn;  // hypothesis -> value
  std::vector<int> moves;                     // attempted moves, uncapped
};

bool rule_matches(const OutcomeRule& r, const History& h, const World& w, std::size_t u, const UavAction& a) {
  const JointState& s = h.states.back();
  const auto kind_ok = [&] {
    switch (r.action) {
      case ActionPattern::any:
        return true;
      case ActionPattern::move:
        return a.kind == ActionKind::move;
      case ActionPattern::photo:
        return a.kind == ActionKind::photo;
      case ActionPattern::pickup:
        return a.kind == ActionKind::pickup;
      case ActionPattern::drop:
        return a.kind == ActionKind::drop;
    }
    return false;
  };
  if (!kind_ok()) return false;
  if (r.uav && w.uavs()[u].id != *r.uav) return false;
  if (r.target && !(a.kind == ActionKind::photo && w.targets()[static_cast<std::size_t>(a.arg)].id == *r.target)) {
    return false;
  }
  if (r.pallet) {
    const bool pickup = a.kind == ActionKind::pickup && w.pallets()[static_cast<std::size_t>(a.arg)].id == *r.pallet;
    const bool drop = a.kind == ActionKind::drop && s.carrying[u] >= 0 &&
                      w.pallets()[static_cast<std::size_t>(s.carrying[u])].id == *r.pallet;
    if (!pickup && !drop) return false;
  }
  if (r.asset && !(a.kind == ActionKind::drop && w.assets()[static_cast<std::size_t>(a.arg)].id == *r.asset)) {
    return false;
  }
  const Cell at = s.uav_at[u];
  if (!r.cells.empty()) {
    bool inside = false;
    for (const auto& c : r.cells) inside = inside || c == at;
    if (!inside) return false;
  }
  if (r.near_target) {
    const auto& target = w.targets()[static_cast<std::size_t>(*w.target_index(*r.near_target))];
    if (domain::manhattan(at, target.at(s.t)) > r.near_radius) return false;
  }
  if (r.moves_from >= 0 && !(a.kind == ActionKind::move && h.moves[u] >= r.moves_from)) return false;
  if (r.moves_every > 0 && !(a.kind == ActionKind::move && (h.moves[u] + 1) % r.moves_every == 0)) return false;
  if (r.from_t && s.t < *r.from_t) return false;
  if (r.until_t && s.t > *r.until_t) return false;
  return true;
}

const assess::Hypothesis& hypothesis(const AssessmentModel& m, const std::string& name) {
  for (const auto& h : m.hypotheses) {
    if (h.name == name) return h;
  }
  throw std::logic_error("unknown hypothesis");
}

/// Calls back once per outcome path of joint action `a`: probability, next
/// history and the number of actions paid for.
void outcomes(const AssessmentModel& m, const History& h, const JointAction& a,
              const std::function<void(double, History&&, int)>& emit) {
  const World& w = m.world;
  const JointState& s = h.states.back();
  const std::size_t n = w.uavs().size();
  JointAction intended(n, UavAction::wait());
  std::vector<const OutcomeRule*> rule(n, nullptr);
  int paid = 0;
  History base = h;
  std::vector<int> taken;
  for (std::size_t u = 0; u < n; ++u) {
    if (!h.operational[u] || a[u].is_wait()) continue;
    ++paid;
    bool ok = domain::precondition_failure(s, w, static_cast<int>(u), a[u]).empty();
    if (ok && a[u].kind == ActionKind::pickup) {
      for (int p : taken) ok = ok && p != a[u].arg;
      taken.push_back(a[u].arg);
    }
    if (!ok) continue;
    intended[u] = a[u];
    for (const auto& r : m.rules) {
      if (rule_matches(r, h, w, u, a[u])) {
        rule[u] = &r;
        break;
      }
    }
    if (a[u].kind == ActionKind::move) ++base.moves[u];
  }

  std::vector<std::string> pending;
  for (std::size_t u = 0; u < n; ++u) {
    if (!rule[u] || !rule[u]->when) continue;
    const auto& name = rule[u]->when->first;
    if (h.drawn.count(name) == 0 && std::find(pending.begin(), pending.end(), name) == pending.end()) {
      pending.push_back(name);
    }
  }

  std::function<void(std::size_t, double, History&)> draw = [&](std::size_t d, double p, History& cur) {
    if (d < pending.size()) {
      for (const auto& [value, prior] : hypothesis(m, pending[d]).values) {
        if (prior <= 0.0) continue;
        History next = cur;
        next.drawn[pending[d]] = value;
        draw(d + 1, p * prior, next);
      }
      return;
    }
    std::vector<std::size_t> uncertain;
    for (std::size_t u = 0; u < n; ++u) {
      if (rule[u]) uncertain.push_back(u);
    }
    for (std::size_t mask = 0; mask < (std::size_t{1} << uncertain.size()); ++mask) {
      double q = p;
      JointAction effective = intended;
      std::vector<bool> lost(n, false);
      int charged = paid;
      for (std::size_t j = 0; j < uncertain.size(); ++j) {
        const std::size_t u = uncertain[j];
        const OutcomeRule& r = *rule[u];
        const double success = r.when ? (cur.drawn.at(r.when->first) == r.when->second ? 1.0 : 0.0)
                                       : r.probability.value_or(m.default_probability);
        const bool fails = (mask >> j) & 1u;
        q *= fails ? 1.0 - success : success;
        if (!fails) continue;
        effective[u] = UavAction::wait();
        if (r.on_failure == FailureMode::no_effect) --charged;
        if (r.on_failure == FailureMode::uav_lost) lost[u] = true;
      }
      if (q <= 0.0) continue;
      History next = cur;
      next.states.push_back(domain::step(s, effective, w, &h.operational));
      for (std::size_t u = 0; u < n; ++u) {
        if (lost[u]) next.operational[u] = false;
      }
      emit(q, std::move(next), charged);
    }
  };
  draw(0, 1.0, base);
}

double terminal(const AssessmentModel& m, const History& h, const prefs::PreferenceSet& set) {
  const int t = h.states.back().t;
  return std::pow(m.discount, t) * preference_part(labels(h.states, m.world), set);
}

History start(const AssessmentModel& m) {
  History h;
  h.states.push_back(m.world.initial_state());
  for (const auto& u : m.world.uavs()) h.operational.push_back(u.operational);
  h.moves.assign(m.world.uavs().size(), 0);
  return h;
}

}  // namespace

double expected_return(const planner::Plan& plan, const AssessmentModel& m, const prefs::PreferenceSet& set,
                       double* mass) {
  const World& w = m.world;
  double total = 0.0;
  double seen = 0.0;
  std::function<void(std::size_t, const History&, double, double)> walk = [&](std::size_t k, const History& h,
                                                                                 double p, double acc) {
    if (k == plan.actions.size()) {
      total += p * (acc + terminal(m, h, set));
      seen += p;
      return;
    }
    const int t = h.states.back().t;
    outcomes(m, h, plan.actions[k], [&](double q, History&& next, int paid) {
      const double gain = m.goal_reward * (goal_count(next.states.back(), w) - goal_count(h.states.back(), w)) *
                          std::pow(m.discount, t + 1);
      const double cost = m.action_cost * paid * std::pow(m.discount, t);
      walk(k + 1, next, p * q, acc + gain - cost);
    });
  };
  History root = start(m);
  walk(0, root, 1.0, m.goal_reward * goal_count(root.states.back(), w));
  if (mass) *mass = seen;
  return total;
}

double optimal_return(const AssessmentModel& m, const prefs::PreferenceSet& set, int horizon) {
  const World& w = m.world;
  std::function<double(const History&)> value = [&](const History& h) {
    double best = terminal(m, h, set);
    const JointState& s = h.states.back();
    if (s.t >= horizon) return best;
    for (const auto& a : domain::applicable(s, w, &h.operational)) {
      double v = 0.0;
      outcomes(m, h, a, [&](double q, History&& next, int paid) {
        const double gain = m.goal_reward * (goal_count(next.states.back(), w) - goal_count(s, w)) *
                            std::pow(m.discount, s.t + 1);
        const double cost = m.action_cost * paid * std::pow(m.discount, s.t);
        v += q * (gain - cost + value(next));
      });
      best = std::max(best, v);
    }
    return best;
  };
  History root = start(m);
  return m.goal_reward * goal_count(root.states.back(), w) + value(root);
}

// --- generators ---------------------------------------------------------------

namespace {

int uniform(std::mt19937& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Cell random_cell(std::mt19937& rng, int width, int height) {
  return {uniform(rng, 0, width - 1), uniform(rng, 0, height - 1)};
}

}  // namespace

World random_world(std::mt19937& rng, int max_uavs, int width, int height, int horizon, bool pallets) {
  std::vector<domain::Uav> uavs;
  const int n_uavs = uniform(rng, 1, max_uavs);
  for (int i = 0; i < n_uavs; ++i) uavs.push_back({"d" + std::to_string(i + 1), random_cell(rng, width, height)});
  std::vector<domain::Target> targets;
  const int n_targets = uniform(rng, 1, 2);
  for (int i = 0; i < n_targets; ++i) {
    domain::Target t{"t" + std::to_string(i + 1), {random_cell(rng, width, height)}};
    const int steps = uniform(rng, 0, 3);
    for (int k = 0; k < steps; ++k) {
      Cell c = t.trajectory.back();
      const Cell next = domain::moved(c, static_cast<domain::Direction>(uniform(rng, 0, 3)));
      t.trajectory.push_back(domain::Grid{width, height}.contains(next) ? next : c);
    }
    targets.push_back(t);
  }
  std::vector<domain::Asset> assets;
  std::vector<domain::Pallet> pallet_list;
  std::vector<domain::Goal> goals{{domain::GoalKind::photo, "t1"}};
  if (n_targets > 1 && uniform(rng, 0, 1)) goals.push_back({domain::GoalKind::photo, "t2"});
  if (pallets || uniform(rng, 0, 1)) {
    assets.push_back({"a1", random_cell(rng, width, height), {}});
    if (pallets) {
      pallet_list.push_back({"r1", random_cell(rng, width, height)});
      assets[0].needs = {"r1"};
      goals.push_back({domain::GoalKind::supply, "a1"});
    } else if (uniform(rng, 0, 1)) {
      goals.push_back({domain::GoalKind::visit, "a1"});
    }
  }
  return World({width, height}, uavs, targets, assets, pallet_list, horizon, goals);
}

namespace {

std::string random_atom(std::mt19937& rng, const World& w) {
  const auto& u = w.uavs()[static_cast<std::size_t>(uniform(rng, 0, w.num_uavs() - 1))];
  switch (uniform(rng, 0, w.assets().empty() ? 1 : 2)) {
    case 0: {
      const Cell c = random_cell(rng, w.grid().width, w.grid().height);
      return "(agentloc " + u.id + " " + std::to_string(c.x) + " " + std::to_string(c.y) + ")";
    }
    case 1: {
      const auto& t = w.targets()[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(w.targets().size()) - 1))];
      return "(have-photo " + t.id + " " + u.id + ")";
    }
    default:
      return "(visited " + w.assets()[0].id + " " + u.id + ")";
  }
}

std::string random_condition(std::mt19937& rng, const World& w) {
  switch (uniform(rng, 0, 5)) {
    case 0:
      return "(not " + random_atom(rng, w) + ")";
    case 1:
      return "(and " + random_atom(rng, w) + " " + random_atom(rng, w) + ")";
    case 2:
      return "(or " + random_atom(rng, w) + " " + random_atom(rng, w) + ")";
    default:
      return random_atom(rng, w);
  }
}

}  // namespace

std::string random_preferences(std::mt19937& rng, const World& w, int count, bool orderings) {
  static const char* templates[] = {"sometime", "always", "sometime-after", "sometime-before", "at-most-once", "at-end"};
  static const int weights[] = {5, 10, 20, 30};
  std::ostringstream out;
  for (int i = 0; i < count; ++i) {
    const int k = uniform(rng, 0, 5);
    out << "(preference p" << i + 1 << " (" << templates[k] << " " << random_condition(rng, w);
    if (k == 2 || k == 3) out << " " << random_condition(rng, w);
    out << ")";
    if (uniform(rng, 0, 1)) out << " " << weights[uniform(rng, 0, 3)];
    out << ")\n";
  }
  if (orderings && count >= 2) out << "(ordering p1 p2 " << weights[uniform(rng, 0, 3)] << ")\n";
  return out.str();
}

AssessmentModel random_model(std::mt19937& rng, const World& w, int max_rules) {
  static const double probabilities[] = {0.0, 0.25, 0.5, 0.8, 1.0};
  AssessmentModel m;
  m.world = w;
  const int n_rules = uniform(rng, 1, max_rules);
  for (int i = 0; i < n_rules; ++i) {
    OutcomeRule r;
    r.action = static_cast<ActionPattern>(uniform(rng, 0, 2));
    if (uniform(rng, 0, 2) == 0) r.uav = w.uavs()[static_cast<std::size_t>(uniform(rng, 0, w.num_uavs() - 1))].id;
    if (uniform(rng, 0, 1)) {
      const int cells = uniform(rng, 1, 3);
      for (int c = 0; c < cells; ++c) r.cells.push_back(random_cell(rng, w.grid().width, w.grid().height));
    }
    if (r.action == ActionPattern::move && uniform(rng, 0, 2) == 0) {
      if (uniform(rng, 0, 1)) {
        r.moves_every = 2;
      } else {
        r.moves_from = uniform(rng, 1, 2);
      }
    }
    if (uniform(rng, 0, 3) == 0) r.from_t = uniform(rng, 1, 2);
    if (uniform(rng, 0, 3) == 0) r.near_target = w.targets()[0].id, r.near_radius = uniform(rng, 0, 1);
    r.on_failure = static_cast<FailureMode>(uniform(rng, 0, 2));
    if (uniform(rng, 0, 4) == 0) {
      if (m.hypotheses.empty()) m.hypotheses.push_back({"h", {{"x", 0.4}, {"y", 0.6}}});
      r.when = std::make_pair(std::string("h"), std::string(uniform(rng, 0, 1) ? "x" : "y"));
    } else if (uniform(rng, 0, 3) != 0) {
      r.probability = probabilities[uniform(rng, 0, 4)];
    }
    m.rules.push_back(r);
  }
  return m;
}

}  // namespace oracle
