#include "resplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "resplan/error.hpp"

namespace resplan::planner {

using domain::ActionKind;
using domain::Cell;
using domain::GoalKind;
using domain::JointAction;
using domain::JointState;
using domain::UavAction;
using domain::World;

// ---------------------------------------------------------------------------
// CompiledPreferences

CompiledPreferences::CompiledPreferences(const World& world, const prefs::PreferenceSet& set)
    : world_(&world), set_(set) {
  entries_.reserve(set.preferences.size());
  for (const auto& p : set.preferences) {
    Entry e;
    e.formula = prefs::lower(p.body);
    e.automaton = ltl::Automaton::compile(e.formula);
    for (const auto& name : e.automaton.atoms()) e.atoms.push_back(world.resolve(prefs::parse_atom(name)));

    // Reverse breadth-first search from the accepting states.
    const std::size_t n = e.automaton.size();
    const std::size_t labels = std::size_t{1} << e.atoms.size();
    std::vector<std::vector<std::uint32_t>> preds(n);
    for (std::size_t q = 0; q < n; ++q) {
      for (std::size_t l = 0; l < labels; ++l) {
        auto r = e.automaton.transition(q, l);
        if (preds[r].empty() || preds[r].back() != q) preds[r].push_back(static_cast<std::uint32_t>(q));
      }
    }
    e.distance.assign(n, unreachable);
    std::deque<std::size_t> queue;
    for (std::size_t q = 0; q < n; ++q) {
      if (e.automaton.accepting(q)) {
        e.distance[q] = 0;
        queue.push_back(q);
      }
    }
    while (!queue.empty()) {
      auto q = queue.front();
      queue.pop_front();
      for (auto p : preds[q]) {
        if (e.distance[p] == unreachable) {
          e.distance[p] = e.distance[q] + 1;
          queue.push_back(p);
        }
      }
    }
    entries_.push_back(std::move(e));
  }
  auto index_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < set.preferences.size(); ++i) {
      if (set.preferences[i].name == name) return i;
    }
    throw ValidationError("ordering names unknown preference '" + name + "'");
  };
  for (const auto& o : set.orderings) {
    IndexedOrdering io{index_of(o.earlier), index_of(o.later), o.weight};
    entries_[io.earlier].in_ordering = true;
    entries_[io.later].in_ordering = true;
    orderings_.push_back(io);
  }
}

std::uint64_t CompiledPreferences::label_bits(const Entry& e, const JointState& s) const {
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < e.atoms.size(); ++i) {
    if (domain::holds(e.atoms[i], s, *world_)) bits |= std::uint64_t{1} << i;
  }
  return bits;
}

std::uint32_t CompiledPreferences::start(std::size_t pref, const JointState& s0) const {
  const auto& e = entries_[pref];
  return static_cast<std::uint32_t>(e.automaton.transition(e.automaton.initial(), label_bits(e, s0)));
}

std::uint32_t CompiledPreferences::advance(std::size_t pref, std::uint32_t q, const JointState& next) const {
  const auto& e = entries_[pref];
  return static_cast<std::uint32_t>(e.automaton.transition(q, label_bits(e, next)));
}

// ---------------------------------------------------------------------------
// ProductModel

ProductModel::ProductModel(const World& world, const prefs::PreferenceSet& set, const SearchConfig& config)
    : world_(world), config_(config), horizon_(config.effective_horizon(world)), prefs_(world, set) {
  if (horizon_ < 1 || horizon_ > 120) throw ValidationError("horizon must be in 1..120");
}

ProductNode ProductModel::root() const {
  ProductNode n;
  n.state = world_.initial_state();
  for (std::size_t i = 0; i < prefs_.size(); ++i) {
    auto q = prefs_.start(i, n.state);
    n.automaton_states.push_back(q);
    n.first_sat.push_back(prefs_.accepting(i, q) ? 0 : -1);
  }
  return n;
}

ProductNode ProductModel::advance(const ProductNode& n, const JointAction& a) const {
  ProductNode c;
  c.state = domain::step(n.state, a, world_);
  c.actions = n.actions + domain::count_actions(a);
  c.automaton_states.resize(n.automaton_states.size());
  c.first_sat = n.first_sat;
  for (std::size_t i = 0; i < prefs_.size(); ++i) {
    auto q = prefs_.advance(i, n.automaton_states[i], c.state);
    c.automaton_states[i] = q;
    if (c.first_sat[i] < 0 && prefs_.accepting(i, q)) c.first_sat[i] = c.state.t;
  }
  return c;
}

bool ProductModel::goals_complete(const ProductNode& n) const {
  for (const auto& g : world_.goals()) {
    if (!domain::goal_satisfied(g, n.state, world_)) return false;
  }
  return true;
}

double ProductModel::terminal_score(const ProductNode& n) const {
  double score = 0.0;
  for (const auto& g : world_.goals()) {
    if (domain::goal_satisfied(g, n.state, world_)) score += config_.goal_reward;
  }
  for (std::size_t i = 0; i < prefs_.size(); ++i) {
    if (prefs_.accepting(i, n.automaton_states[i])) score += prefs_.set().preferences[i].weight;
  }
  for (const auto& o : prefs_.orderings()) {
    if (!prefs_.accepting(o.earlier, n.automaton_states[o.earlier]) ||
        !prefs_.accepting(o.later, n.automaton_states[o.later])) {
      continue;
    }
    if (n.first_sat[o.earlier] <= n.first_sat[o.later]) score += o.weight;
  }
  return score - config_.action_cost * n.actions;
}

ProductModel::GoalEstimate ProductModel::estimate(const domain::Goal& g, const ProductNode& n) const {
  GoalEstimate est;
  if (domain::goal_satisfied(g, n.state, world_)) {
    est.achieved = est.reachable = true;
    return est;
  }
  const JointState& s = n.state;
  const int t = s.t;
  const int remaining = horizon_ - t;
  const auto& uavs = world_.uavs();
  int best_moves = INT_MAX;
  int best_discrete = INT_MAX;
  auto consider = [&](int moves, int discrete) {
    best_moves = std::min(best_moves, moves);
    best_discrete = std::min(best_discrete, discrete);
  };
  switch (g.kind) {
    case GoalKind::photo: {
      const auto& target = world_.targets()[static_cast<std::size_t>(*world_.target_index(g.subject))];
      for (std::size_t u = 0; u < uavs.size(); ++u) {
        if (!uavs[u].operational) continue;
        // The photo is taken at some step t' in [t, horizon) while co-located.
        for (int tp = t; tp < horizon_; ++tp) {
          int d = domain::manhattan(s.uav_at[u], target.at(tp));
          if (d <= tp - t) consider(d, 1);
        }
      }
      break;
    }
    case GoalKind::visit: {
      const Cell where = world_.assets()[static_cast<std::size_t>(*world_.asset_index(g.subject))].location;
      for (std::size_t u = 0; u < uavs.size(); ++u) {
        if (!uavs[u].operational) continue;
        int d = domain::manhattan(s.uav_at[u], where);
        if (d <= remaining) consider(d, 0);
      }
      break;
    }
    case GoalKind::supply: {
      const int a = *world_.asset_index(g.subject);
      const Cell where = world_.assets()[static_cast<std::size_t>(a)].location;
      for (std::size_t p = 0; p < world_.pallets().size(); ++p) {
        const int pi = static_cast<int>(p);
        if (!world_.asset_needs(a, pi) || domain::pallet_consumed(s, world_, pi)) continue;
        int holder = -1;
        for (std::size_t u = 0; u < uavs.size(); ++u) {
          if (s.carrying[u] == pi) holder = static_cast<int>(u);
        }
        if (holder >= 0) {
          if (!uavs[static_cast<std::size_t>(holder)].operational) continue;
          int d = domain::manhattan(s.uav_at[static_cast<std::size_t>(holder)], where);
          if (d + 1 <= remaining) consider(d, 1);
          continue;
        }
        const Cell at = s.pallet_at[p];
        const int leg = domain::manhattan(at, where);
        for (std::size_t u = 0; u < uavs.size(); ++u) {
          if (!uavs[u].operational || !uavs[u].can_carry) continue;
          int d = domain::manhattan(s.uav_at[u], at) + leg;
          if (d + 2 <= remaining) consider(d, 2);
        }
      }
      break;
    }
  }
  if (best_moves != INT_MAX) {
    est.reachable = true;
    est.moves = best_moves;
    est.discrete = best_discrete;
  }
  return est;
}

bool ProductModel::goals_reachable(const ProductNode& n) const {
  for (const auto& g : world_.goals()) {
    if (!estimate(g, n).reachable) return false;
  }
  return true;
}

double ProductModel::upper_bound(const ProductNode& n) const {
  const int remaining = horizon_ - n.state.t;
  double bound = 0.0;
  int moves = 0;
  int discrete = 0;
  for (const auto& g : world_.goals()) {
    auto est = estimate(g, n);
    if (!est.reachable) continue;
    bound += config_.goal_reward;
    moves = std::max(moves, est.moves);
    discrete += est.discrete;
  }
  std::vector<char> possible(prefs_.size());
  for (std::size_t i = 0; i < prefs_.size(); ++i) {
    possible[i] = prefs_.distance_to_accept(i, n.automaton_states[i]) <= remaining;
    if (possible[i]) bound += prefs_.set().preferences[i].weight;
  }
  for (const auto& o : prefs_.orderings()) {
    if (!possible[o.earlier] || !possible[o.later]) continue;
    // A later preference already satisfied before the earlier one can be
    // fixes the earlier one's time past it.
    if (n.first_sat[o.later] >= 0 && (n.first_sat[o.earlier] < 0 || n.first_sat[o.earlier] > n.first_sat[o.later])) {
      continue;
    }
    bound += o.weight;
  }
  return bound - config_.action_cost * (n.actions + moves + discrete);
}

namespace {

void put(std::string& out, std::uint32_t v, int bytes) {
  for (int b = 0; b < bytes; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

}  // namespace

std::string ProductModel::key(const ProductNode& n) const {
  std::string out;
  const auto& s = n.state;
  out.reserve(32 + 4 * s.uav_at.size() + 2 * s.pallet_at.size() + 3 * n.automaton_states.size());
  put(out, static_cast<std::uint32_t>(s.t), 1);
  for (std::size_t u = 0; u < s.uav_at.size(); ++u) {
    put(out, static_cast<std::uint32_t>(s.uav_at[u].x), 1);
    put(out, static_cast<std::uint32_t>(s.uav_at[u].y), 1);
    put(out, static_cast<std::uint32_t>(s.carrying[u] + 1), 1);
  }
  for (const auto& c : s.pallet_at) {
    put(out, static_cast<std::uint32_t>(c.x), 1);
    put(out, static_cast<std::uint32_t>(c.y), 1);
  }
  put64(out, s.photos);
  put64(out, s.visited);
  put64(out, s.delivered);
  for (std::size_t i = 0; i < n.automaton_states.size(); ++i) {
    put(out, n.automaton_states[i], 2);
    if (prefs_.in_ordering(i)) put(out, static_cast<std::uint32_t>(n.first_sat[i] + 1), 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Search

int Plan::action_count() const {
  int n = 0;
  for (const auto& a : actions) n += domain::count_actions(a);
  return n;
}

Plan make_plan(const World& world, std::vector<JointAction> actions, Provenance provenance) {
  Plan plan;
  plan.provenance = provenance;
  plan.trace.push_back(world.initial_state());
  for (const auto& a : actions) {
    domain::check_applicable(plan.trace.back(), a, world);
    plan.trace.push_back(domain::step(plan.trace.back(), a, world));
  }
  plan.actions = std::move(actions);
  return plan;
}

namespace {

struct Stored {
  ProductNode node;
  std::int32_t parent;
  std::uint32_t action;  // index into applicable(parent state)
};

struct Entry {
  double f;
  bool terminal;
  int t;
  std::uint64_t seq;
  std::uint32_t node;
};

struct EntryOrder {
  bool operator()(const Entry& a, const Entry& b) const {
    // priority_queue pops the greatest; return true when a ranks below b.
    if (a.f != b.f) return a.f < b.f;
    if (a.terminal != b.terminal) return !a.terminal;
    if (a.t != b.t) return a.t < b.t;
    return a.seq > b.seq;
  }
};

Plan search(const World& world, const prefs::PreferenceSet& set, const SearchConfig& config) {
  ProductModel model(world, set, config);
  const int horizon = model.horizon();

  // Nodes keep the full product node; state counts stay small for the
  // bounded horizons this planner targets, and the budget caps them.
  std::vector<Stored> nodes;
  std::unordered_map<std::string, int> best_actions;
  std::priority_queue<Entry, std::vector<Entry>, EntryOrder> frontier;
  std::uint64_t seq = 0;
  double incumbent = -INFINITY;
  std::int32_t incumbent_node = -1;

  auto admit = [&](ProductNode node, std::int32_t parent, std::uint32_t action) {
    if (!model.goals_reachable(node)) return;
    const double ub = model.upper_bound(node);
    if (ub < incumbent) return;
    auto k = model.key(node);
    auto [it, fresh] = best_actions.try_emplace(std::move(k), node.actions);
    if (!fresh) {
      if (it->second <= node.actions) return;
      it->second = node.actions;
    }
    const auto id = static_cast<std::uint32_t>(nodes.size());
    const int t = node.state.t;
    const bool complete = model.goals_complete(node);
    const double exact = complete ? model.terminal_score(node) : 0.0;
    nodes.push_back({std::move(node), parent, action});
    if (complete) {
      frontier.push({exact, true, t, seq++, id});
      if (exact > incumbent) {
        incumbent = exact;
        incumbent_node = static_cast<std::int32_t>(id);
      }
    }
    if (t < horizon) frontier.push({ub, false, t, seq++, id});
  };

  auto rebuild = [&](std::int32_t id, bool exhausted, std::size_t expanded) {
    std::vector<std::uint32_t> picks;
    for (auto at = id; nodes[static_cast<std::size_t>(at)].parent >= 0; at = nodes[static_cast<std::size_t>(at)].parent) {
      picks.push_back(nodes[static_cast<std::size_t>(at)].action);
    }
    std::reverse(picks.begin(), picks.end());
    std::vector<JointAction> actions;
    JointState s = world.initial_state();
    for (auto pick : picks) {
      auto options = domain::applicable(s, world);
      actions.push_back(options[pick]);
      s = domain::step(s, options[pick], world);
    }
    Plan plan = make_plan(world, std::move(actions), set.empty() ? Provenance::baseline : Provenance::constrained);
    plan.score = model.terminal_score(nodes[static_cast<std::size_t>(id)].node);
    plan.budget_exhausted = exhausted;
    plan.expanded = expanded;
    return plan;
  };

  ProductNode root = model.root();
  if (!model.goals_reachable(root)) throw UnsolvableError("mission goals are unreachable within the horizon");
  admit(std::move(root), -1, 0);

  std::size_t expanded = 0;
  while (!frontier.empty()) {
    const Entry e = frontier.top();
    frontier.pop();
    if (e.terminal) return rebuild(static_cast<std::int32_t>(e.node), false, expanded);
    if (e.f < incumbent) continue;
    {
      const auto& n = nodes[e.node].node;
      auto it = best_actions.find(model.key(n));
      if (it != best_actions.end() && it->second < n.actions) continue;  // superseded
    }
    if (expanded >= config.node_budget) {
      if (incumbent_node >= 0) return rebuild(incumbent_node, true, expanded);
      throw BudgetExceededError("node budget of " + std::to_string(config.node_budget) +
                                " expansions exhausted before any plan reached every goal");
    }
    ++expanded;
    const ProductNode parent = nodes[e.node].node;
    const auto options = domain::applicable(parent.state, world);
    for (std::size_t i = 0; i < options.size(); ++i) {
      admit(model.advance(parent, options[i]), static_cast<std::int32_t>(e.node), static_cast<std::uint32_t>(i));
    }
  }
  throw UnsolvableError("no plan reaches every mission goal within the horizon");
}

}  // namespace

Plan plan_baseline(const World& world, const SearchConfig& config) { return search(world, {}, config); }

Plan plan_with_preferences(const World& world, const prefs::PreferenceSet& set, const SearchConfig& config) {
  return search(world, set, config);
}

double deterministic_score(const Plan& plan, const World& world, const prefs::PreferenceSet& set,
                           const SearchConfig& config) {
  ProductModel model(world, set, config);
  ProductNode n = model.root();
  for (const auto& a : plan.actions) n = model.advance(n, a);
  return model.terminal_score(n);
}

// ---------------------------------------------------------------------------
// Explanation

ltl::Trace trace_labels(const std::vector<JointState>& trace, const World& world) {
  ltl::Trace out;
  out.reserve(trace.size());
  for (const auto& s : trace) {
    ltl::Label label;
    for (const auto& p : domain::propositions(s, world)) label.insert(p.render());
    out.push_back(std::move(label));
  }
  return out;
}

ExplainReport explain(const Plan& plan, const World& world, const prefs::PreferenceSet& set,
                      const SearchConfig& config) {
  ExplainReport r;
  const auto achieved = domain::goals_satisfied(plan.trace, world);
  for (const auto& g : world.goals()) {
    (achieved.count(g.id()) ? r.goals_achieved : r.goals_missed).push_back(g.id());
  }
  r.goal_reward = config.goal_reward * static_cast<double>(r.goals_achieved.size());

  const auto labels = trace_labels(plan.trace, world);
  std::map<std::string, std::optional<int>> first;
  for (const auto& p : set.preferences) {
    const auto f = prefs::lower(p.body);
    PreferenceOutcome o;
    o.name = p.name;
    o.kind = prefs::classify(p);
    o.satisfied = ltl::evaluate(f, labels, 0);
    if (o.satisfied) {
      for (std::size_t t = 0; t < labels.size(); ++t) {
        ltl::Trace prefix(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(t) + 1);
        if (ltl::evaluate(f, prefix, 0)) {
          o.first_satisfied = static_cast<int>(t);
          break;
        }
      }
      o.reward = p.weight;
    }
    first[p.name] = o.first_satisfied;
    r.preference_reward += o.reward;
    r.preferences.push_back(std::move(o));
  }
  for (const auto& ord : set.orderings) {
    OrderingOutcome o;
    o.earlier = ord.earlier;
    o.later = ord.later;
    const auto& a = first.at(ord.earlier);
    const auto& b = first.at(ord.later);
    o.preserved = a && b && *a <= *b;
    o.reward = o.preserved ? ord.weight : 0.0;
    r.ordering_reward += o.reward;
    r.orderings.push_back(std::move(o));
  }
  r.actions = plan.action_count();
  r.action_cost = config.action_cost * r.actions;
  r.total = r.goal_reward + r.preference_reward + r.ordering_reward - r.action_cost;
  return r;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::string format_number(double v) {
  if (v == std::floor(v) && std::fabs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  std::ostringstream out;
  out.precision(10);
  out << v;
  return out.str();
}

UavAction parse_uav_action(const std::string& text, const World& world, SourceLocation where) {
  if (text == "wait") return UavAction::wait();
  auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') throw ParseError(where, "malformed action '" + text + "'");
  const std::string verb = text.substr(0, open);
  const std::string arg = text.substr(open + 1, text.size() - open - 2);
  auto need = [&](std::optional<int> ix, const char* what) {
    if (!ix) throw ParseError(where, std::string("unknown ") + what + " '" + arg + "'");
    return *ix;
  };
  if (verb == "move") {
    if (arg == "N") return UavAction::move(domain::Direction::north);
    if (arg == "S") return UavAction::move(domain::Direction::south);
    if (arg == "E") return UavAction::move(domain::Direction::east);
    if (arg == "W") return UavAction::move(domain::Direction::west);
    throw ParseError(where, "unknown direction '" + arg + "'");
  }
  if (verb == "photo") return UavAction::photo(need(world.target_index(arg), "target"));
  if (verb == "pickup") return UavAction::pickup(need(world.pallet_index(arg), "pallet"));
  if (verb == "drop") return UavAction::drop(need(world.asset_index(arg), "asset"));
  throw ParseError(where, "unknown action '" + verb + "'");
}

}  // namespace

std::string render_plan(const Plan& plan, const World& world) {
  std::string out;
  for (std::size_t t = 0; t < plan.actions.size(); ++t) {
    out += "t=" + std::to_string(t);
    for (std::size_t u = 0; u < plan.actions[t].size(); ++u) {
      out += ' ' + world.uavs()[u].id + ':' + domain::render_action(plan.actions[t][u], world);
    }
    out += '\n';
  }
  out += "score=" + format_number(plan.score) + '\n';
  return out;
}

Plan parse_plan(const std::string& text, const World& world) {
  std::vector<JointAction> actions;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream words(line);
    std::string word;
    if (!(words >> word)) continue;
    const SourceLocation where{line_no, 1};
    if (word.rfind("score=", 0) == 0) continue;
    if (word.rfind("t=", 0) != 0) throw ParseError(where, "expected 't=<k>'");
    int k = -1;
    try {
      std::size_t used = 0;
      k = std::stoi(word.substr(2), &used);
      if (used != word.size() - 2) k = -1;
    } catch (const std::exception&) {
      k = -1;
    }
    if (k != static_cast<int>(actions.size())) {
      throw ParseError(where, "expected t=" + std::to_string(actions.size()) + ", got '" + word + "'");
    }
    JointAction joint(world.uavs().size(), UavAction::wait());
    while (words >> word) {
      auto colon = word.find(':');
      if (colon == std::string::npos) throw ParseError(where, "expected '<uav>:<action>', got '" + word + "'");
      auto u = world.uav_index(word.substr(0, colon));
      if (!u) throw ParseError(where, "unknown uav '" + word.substr(0, colon) + "'");
      joint[static_cast<std::size_t>(*u)] = parse_uav_action(word.substr(colon + 1), world, where);
    }
    actions.push_back(std::move(joint));
  }
  return make_plan(world, std::move(actions));
}

}  // namespace resplan::planner
