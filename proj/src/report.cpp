#include "resplan/report.hpp"

#include <cmath>
#include <cstdio>

#include "resplan/error.hpp"

namespace resplan::report {

using nlohmann::json;

Comparison compare(const scenarios::Scenario& s, const prefs::PreferenceSet& constraints,
                   const planner::SearchConfig& config) {
  return compare(s, constraints, assess::optimal_return(s.model, s.operator_preferences), config);
}

Comparison compare(const scenarios::Scenario& s, const prefs::PreferenceSet& constraints,
                   const assess::OptimalResult& optimal, const planner::SearchConfig& config) {
  Comparison c;
  c.scenario = s.name;
  const auto combined = prefs::merge(s.operator_preferences, constraints);
  c.baseline = planner::plan_with_preferences(s.world(), s.operator_preferences, config);
  c.baseline.provenance = planner::Provenance::baseline;
  c.constrained = planner::plan_with_preferences(s.world(), combined, config);
  c.constrained.provenance = planner::Provenance::constrained;
  c.constrained_explain = planner::explain(c.constrained, s.world(), combined, config);
  c.base_return = assess::expected_return(c.baseline, s.model, s.operator_preferences);
  c.constrained_return = assess::expected_return(c.constrained, s.model, s.operator_preferences);
  c.optimal = optimal;
  c.improvement = assess::improvement(c.base_return, c.constrained_return);
  c.optimality = assess::optimality(c.optimal.value, c.constrained_return.expected_return);
  return c;
}

std::string fixed1(double v) {
  double r = assess::round1(v);
  if (r == 0.0) r = 0.0;  // drops the sign of -0.0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", r);
  return buf;
}

std::string table(const std::vector<Comparison>& rows, bool average) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %8s %8s %8s %12s %11s\n", "Task", "Base", "Opt", "Auto", "Improvement",
                "Optimality");
  out += line;
  double imp = 0.0;
  double opt = 0.0;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-6s %8s %8s %8s %12s %11s\n", r.scenario.c_str(),
                  fixed1(r.base_return.expected_return).c_str(), fixed1(r.optimal.value).c_str(),
                  fixed1(r.constrained_return.expected_return).c_str(), (fixed1(r.improvement) + "%").c_str(),
                  (fixed1(r.optimality) + "%").c_str());
    out += line;
    imp += r.improvement;
    opt += r.optimality;
  }
  if (average && !rows.empty()) {
    const double n = static_cast<double>(rows.size());
    std::snprintf(line, sizeof line, "%-6s %8s %8s %8s %12s %11s\n", "Ave.", "", "", "", (fixed1(imp / n) + "%").c_str(),
                  (fixed1(opt / n) + "%").c_str());
    out += line;
  }
  return out;
}

namespace {

json cell(domain::Cell c) { return json::array({c.x, c.y}); }

std::string status_name(domain::TargetStatus s) {
  switch (s) {
    case domain::TargetStatus::unknown:
      return "unknown";
    case domain::TargetStatus::friendly:
      return "friendly";
    case domain::TargetStatus::hostile:
      return "hostile";
  }
  return "unknown";
}

json preferences_json(const prefs::PreferenceSet& set) {
  json prefs = json::array();
  for (const auto& p : set.preferences) {
    prefs.push_back({{"name", p.name},
                     {"template", prefs::template_name(p.body.kind)},
                     {"text", prefs::render(p.body)},
                     {"weight", p.weight},
                     {"kind", prefs::kind_name(prefs::classify(p))}});
  }
  json orderings = json::array();
  for (const auto& o : set.orderings) {
    orderings.push_back({{"earlier", o.earlier}, {"later", o.later}, {"weight", o.weight}});
  }
  return {{"preferences", prefs}, {"orderings", orderings}, {"text", prefs::render(set)}};
}

}  // namespace

json to_json(const scenarios::Scenario& s) {
  const auto& w = s.world();
  json uavs = json::array();
  for (const auto& u : w.uavs()) {
    uavs.push_back({{"id", u.id}, {"start", cell(u.start)}, {"can_carry", u.can_carry}, {"operational", u.operational}});
  }
  json targets = json::array();
  for (const auto& t : w.targets()) {
    json path = json::array();
    for (const auto& c : t.trajectory) path.push_back(cell(c));
    targets.push_back({{"id", t.id}, {"path", path}, {"status", status_name(t.status)}});
  }
  json assets = json::array();
  for (const auto& a : w.assets()) assets.push_back({{"id", a.id}, {"at", cell(a.location)}, {"needs", a.needs}});
  json pallets = json::array();
  for (const auto& p : w.pallets()) pallets.push_back({{"id", p.id}, {"at", cell(p.location)}});
  json goals = json::array();
  for (const auto& g : w.goals()) goals.push_back(g.id());
  json rules = json::array();
  for (const auto& r : s.model.rules) {
    json j = {{"action", assess::pattern_name(r.action)}, {"on_failure", assess::failure_name(r.on_failure)}};
    if (r.uav) j["uav"] = *r.uav;
    if (r.target) j["target"] = *r.target;
    if (r.pallet) j["pallet"] = *r.pallet;
    if (r.asset) j["asset"] = *r.asset;
    if (!r.cells.empty()) {
      json cells = json::array();
      for (const auto& c : r.cells) cells.push_back(cell(c));
      j["cells"] = cells;
    }
    if (r.near_target) j["near"] = {{"target", *r.near_target}, {"radius", r.near_radius}};
    if (r.moves_from >= 0) j["moves_from"] = r.moves_from;
    if (r.moves_every > 0) j["moves_every"] = r.moves_every;
    if (r.from_t) j["from"] = *r.from_t;
    if (r.until_t) j["until"] = *r.until_t;
    if (r.when) {
      j["when"] = {{"hypothesis", r.when->first}, {"value", r.when->second}};
    } else {
      j["probability"] = r.probability.value_or(s.model.default_probability);
    }
    rules.push_back(j);
  }
  json hypotheses = json::array();
  for (const auto& h : s.model.hypotheses) {
    json values = json::object();
    for (const auto& [v, p] : h.values) values[v] = p;
    hypotheses.push_back({{"name", h.name}, {"values", values}});
  }
  return {{"name", s.name},
          {"title", s.title},
          {"update", s.update},
          {"grid", {{"width", w.grid().width}, {"height", w.grid().height}}},
          {"horizon", w.horizon()},
          {"uavs", uavs},
          {"targets", targets},
          {"assets", assets},
          {"pallets", pallets},
          {"goals", goals},
          {"rules", rules},
          {"hypotheses", hypotheses},
          {"constants",
           {{"goal_reward", s.model.goal_reward},
            {"action_cost", s.model.action_cost},
            {"ordering_reward", s.model.ordering_reward},
            {"default_probability", s.model.default_probability},
            {"discount", s.model.discount}}},
          {"operator_preferences", preferences_json(s.operator_preferences)},
          {"reference_constraints", preferences_json(s.reference_constraints)}};
}

json to_json(const planner::Plan& p, const domain::World& w) {
  json steps = json::array();
  for (std::size_t t = 0; t < p.actions.size(); ++t) {
    json actions = json::object();
    for (std::size_t u = 0; u < p.actions[t].size(); ++u) {
      actions[w.uavs()[u].id] = domain::render_action(p.actions[t][u], w);
    }
    steps.push_back({{"t", t}, {"actions", actions}});
  }
  json positions = json::array();
  for (const auto& s : p.trace) {
    json at = json::object();
    for (std::size_t u = 0; u < s.uav_at.size(); ++u) at[w.uavs()[u].id] = cell(s.uav_at[u]);
    positions.push_back(at);
  }
  return {{"provenance", p.provenance == planner::Provenance::baseline ? "baseline" : "constrained"},
          {"score", p.score},
          {"actions", p.action_count()},
          {"steps", steps},
          {"positions", positions},
          {"budget_exhausted", p.budget_exhausted},
          {"text", planner::render_plan(p, w)}};
}

json to_json(const assess::ReturnReport& r) {
  json outcomes = json::array();
  for (const auto& o : r.outcomes) {
    outcomes.push_back({{"probability", o.probability},
                        {"goals", o.goals},
                        {"preferences", o.preferences},
                        {"orderings_preserved", o.orderings_preserved},
                        {"actions", o.actions},
                        {"lost", o.lost},
                        {"score", o.score}});
  }
  return {{"expected_return", r.expected_return},
          {"expected_return_rounded", assess::round1(r.expected_return)},
          {"goal_total", r.goal_total},
          {"preference_total", r.preference_total},
          {"ordering_total", r.ordering_total},
          {"cost_total", r.cost_total},
          {"outcomes", outcomes}};
}

json to_json(const planner::ExplainReport& r) {
  json prefs = json::array();
  for (const auto& p : r.preferences) {
    json j = {{"name", p.name}, {"satisfied", p.satisfied}, {"reward", p.reward}, {"kind", prefs::kind_name(p.kind)}};
    j["first_satisfied"] = p.first_satisfied ? json(*p.first_satisfied) : json(nullptr);
    prefs.push_back(j);
  }
  json orderings = json::array();
  for (const auto& o : r.orderings) {
    orderings.push_back({{"earlier", o.earlier}, {"later", o.later}, {"preserved", o.preserved}, {"reward", o.reward}});
  }
  return {{"goals_achieved", r.goals_achieved},
          {"goals_missed", r.goals_missed},
          {"preferences", prefs},
          {"orderings", orderings},
          {"actions", r.actions},
          {"goal_reward", r.goal_reward},
          {"preference_reward", r.preference_reward},
          {"ordering_reward", r.ordering_reward},
          {"action_cost", r.action_cost},
          {"total", r.total}};
}

json to_json(const Comparison& c, const scenarios::Scenario& s) {
  return {{"scenario", c.scenario},
          {"baseline", {{"plan", to_json(c.baseline, s.world())}, {"return", to_json(c.base_return)}}},
          {"constrained",
           {{"plan", to_json(c.constrained, s.world())},
            {"return", to_json(c.constrained_return)},
            {"explain", to_json(c.constrained_explain)}}},
          {"optimal",
           {{"value", c.optimal.value},
            {"value_rounded", assess::round1(c.optimal.value)},
            {"witness", to_json(c.optimal.witness, s.world())},
            {"witness_return", c.optimal.witness_return},
            {"states", c.optimal.states}}},
          {"improvement", c.improvement},
          {"improvement_rounded", assess::round1(c.improvement)},
          {"optimality", c.optimality},
          {"optimality_rounded", assess::round1(c.optimality)},
          {"table", table({c}, false)}};
}

}  // namespace resplan::report
