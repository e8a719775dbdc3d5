#include "resplan/scenarios.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "resplan/error.hpp"
#include "resplan/sexpr.hpp"

namespace resplan::scenarios {

using domain::Cell;
using sexpr::Node;

bool Scenario::operator==(const Scenario& o) const {
  const auto& a = model;
  const auto& b = o.model;
  return name == o.name && title == o.title && update == o.update && a.world == b.world && a.rules == b.rules &&
         a.hypotheses == b.hypotheses && a.goal_reward == b.goal_reward && a.action_cost == b.action_cost &&
         a.ordering_reward == b.ordering_reward && a.default_probability == b.default_probability &&
         a.discount == b.discount && operator_preferences == o.operator_preferences &&
         reference_constraints == o.reference_constraints;
}

namespace {

const Node& arg(const Node& form, std::size_t i, const char* what) {
  if (i >= form.items.size()) sexpr::fail(form, std::string("missing ") + what);
  return form.items[i];
}

void arity(const Node& form, std::size_t n) {
  if (form.items.size() != n) {
    sexpr::fail(form, "'" + form.head() + "' takes " + std::to_string(n - 1) + " argument(s)");
  }
}

Cell cell(const Node& n) {
  if (!n.is_list() || n.items.size() != 2) sexpr::fail(n, "expected a cell '(x y)'");
  return {n.items[0].as_int(), n.items[1].as_int()};
}

bool boolean(const Node& n) {
  if (n.is_symbol("true")) return true;
  if (n.is_symbol("false")) return false;
  sexpr::fail(n, "expected true or false");
}

double probability(const Node& n) {
  const double p = n.as_double();
  if (p < 0.0 || p > 1.0) throw ValidationError(n.where, "probability must be in [0, 1]");
  return p;
}

std::string text_of(const Node& n) {
  if (!n.is_string() && !n.is_symbol()) sexpr::fail(n, "expected text");
  return n.text;
}

/// Attribute lists `(key value...)` following a leading id.
std::map<std::string, const Node*> attributes(const Node& form, std::size_t from,
                                              std::initializer_list<const char*> allowed) {
  std::map<std::string, const Node*> out;
  for (std::size_t i = from; i < form.items.size(); ++i) {
    const Node& a = form.items[i];
    const std::string key = a.head();
    if (key.empty()) sexpr::fail(a, "expected an attribute list");
    bool ok = false;
    for (const char* k : allowed) ok = ok || key == k;
    if (!ok) sexpr::fail(a, "unknown attribute '" + key + "' in " + form.head());
    if (!out.emplace(key, &a).second) sexpr::fail(a, "duplicate attribute '" + key + "'");
  }
  return out;
}

assess::ActionPattern pattern(const Node& n) {
  const auto& s = n.as_symbol();
  for (auto p : {assess::ActionPattern::any, assess::ActionPattern::move, assess::ActionPattern::photo,
                 assess::ActionPattern::pickup, assess::ActionPattern::drop}) {
    if (assess::pattern_name(p) == s) return p;
  }
  sexpr::fail(n, "unknown action pattern '" + s + "'");
}

assess::FailureMode failure(const Node& n) {
  const auto& s = n.as_symbol();
  for (auto m : {assess::FailureMode::no_effect, assess::FailureMode::action_wasted, assess::FailureMode::uav_lost}) {
    if (assess::failure_name(m) == s) return m;
  }
  sexpr::fail(n, "unknown failure mode '" + s + "'");
}

assess::OutcomeRule rule(const Node& form) {
  assess::OutcomeRule r;
  auto attrs = attributes(form, 1,
                          {"action", "uav", "target", "pallet", "asset", "cells", "near", "moves-from", "moves-every",
                           "from", "until", "probability", "when", "on-failure"});
  auto single = [&](const char* key) -> const Node* {
    auto it = attrs.find(key);
    if (it == attrs.end()) return nullptr;
    arity(*it->second, 2);
    return &it->second->items[1];
  };
  if (auto* n = single("action")) r.action = pattern(*n);
  if (auto* n = single("uav")) r.uav = n->as_symbol();
  if (auto* n = single("target")) r.target = n->as_symbol();
  if (auto* n = single("pallet")) r.pallet = n->as_symbol();
  if (auto* n = single("asset")) r.asset = n->as_symbol();
  if (auto it = attrs.find("cells"); it != attrs.end()) {
    for (std::size_t i = 1; i < it->second->items.size(); ++i) r.cells.push_back(cell(it->second->items[i]));
  }
  if (auto it = attrs.find("near"); it != attrs.end()) {
    arity(*it->second, 3);
    r.near_target = it->second->items[1].as_symbol();
    r.near_radius = it->second->items[2].as_int();
  }
  if (auto* n = single("moves-from")) r.moves_from = n->as_int();
  if (auto* n = single("moves-every")) r.moves_every = n->as_int();
  if (auto* n = single("from")) r.from_t = n->as_int();
  if (auto* n = single("until")) r.until_t = n->as_int();
  if (auto* n = single("probability")) r.probability = probability(*n);
  if (auto it = attrs.find("when"); it != attrs.end()) {
    arity(*it->second, 3);
    r.when = std::make_pair(it->second->items[1].as_symbol(), it->second->items[2].as_symbol());
  }
  if (auto* n = single("on-failure")) r.on_failure = failure(*n);
  return r;
}

std::string number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string cell_text(Cell c) { return "(" + std::to_string(c.x) + " " + std::to_string(c.y) + ")"; }

std::string quoted(const std::string& s) { return sexpr::render(sexpr::string(s)); }

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

std::string goal_kind_name(domain::GoalKind k) {
  switch (k) {
    case domain::GoalKind::photo:
      return "photo";
    case domain::GoalKind::visit:
      return "visit";
    case domain::GoalKind::supply:
      return "supply";
  }
  return "?";
}

}  // namespace

Scenario parse(const std::string& text, const std::string& fallback_name) {
  // Header line, then s-expressions.
  std::size_t pos = 0;
  int line = 1;
  std::string first;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    std::string l = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    if (!l.empty() && l.back() == '\r') l.pop_back();
    pos = eol == std::string::npos ? text.size() : eol + 1;
    if (l.find_first_not_of(" \t") == std::string::npos) {
      ++line;
      continue;
    }
    first = l;
    break;
  }
  if (first != format_header) {
    throw ParseError({line, 1}, std::string("expected header line '") + format_header + "'");
  }
  const auto forms = sexpr::parse_all(std::string_view(text).substr(pos), {line + 1, 1});

  Scenario s;
  s.name = fallback_name;
  std::optional<domain::Grid> grid;
  std::optional<int> horizon;
  std::vector<domain::Uav> uavs;
  std::vector<domain::Target> targets;
  std::vector<domain::Asset> assets;
  std::vector<domain::Pallet> pallets;
  std::vector<domain::Goal> goals;
  const Node* operator_section = nullptr;
  const Node* reference_section = nullptr;
  std::map<std::string, const Node*> seen;

  for (const auto& form : forms) {
    const std::string head = form.head();
    if (head.empty()) sexpr::fail(form, "expected a section");
    auto once = [&] {
      if (!seen.emplace(head, &form).second) sexpr::fail(form, "duplicate section '" + head + "'");
    };
    if (head == "name") {
      once();
      arity(form, 2);
      s.name = form.items[1].as_symbol();
    } else if (head == "title") {
      once();
      arity(form, 2);
      s.title = text_of(form.items[1]);
    } else if (head == "update") {
      once();
      arity(form, 2);
      s.update = text_of(form.items[1]);
    } else if (head == "grid") {
      once();
      arity(form, 3);
      grid = domain::Grid{form.items[1].as_int(), form.items[2].as_int()};
    } else if (head == "horizon") {
      once();
      arity(form, 2);
      horizon = form.items[1].as_int();
    } else if (head == "uav") {
      domain::Uav u;
      u.id = arg(form, 1, "uav id").as_symbol();
      auto attrs = attributes(form, 2, {"at", "can-carry", "operational"});
      if (!attrs.count("at")) sexpr::fail(form, "uav needs (at x y)");
      arity(*attrs["at"], 3);
      u.start = {attrs["at"]->items[1].as_int(), attrs["at"]->items[2].as_int()};
      if (attrs.count("can-carry")) {
        arity(*attrs["can-carry"], 2);
        u.can_carry = boolean(attrs["can-carry"]->items[1]);
      }
      if (attrs.count("operational")) {
        arity(*attrs["operational"], 2);
        u.operational = boolean(attrs["operational"]->items[1]);
      }
      uavs.push_back(u);
    } else if (head == "target") {
      domain::Target t;
      t.id = arg(form, 1, "target id").as_symbol();
      auto attrs = attributes(form, 2, {"path", "status"});
      if (!attrs.count("path")) sexpr::fail(form, "target needs (path (x y) ...)");
      for (std::size_t i = 1; i < attrs["path"]->items.size(); ++i) t.trajectory.push_back(cell(attrs["path"]->items[i]));
      if (attrs.count("status")) {
        arity(*attrs["status"], 2);
        const Node& st = attrs["status"]->items[1];
        if (st.is_symbol("unknown")) {
          t.status = domain::TargetStatus::unknown;
        } else if (st.is_symbol("friendly")) {
          t.status = domain::TargetStatus::friendly;
        } else if (st.is_symbol("hostile")) {
          t.status = domain::TargetStatus::hostile;
        } else {
          sexpr::fail(st, "status must be unknown, friendly or hostile");
        }
      }
      targets.push_back(t);
    } else if (head == "asset") {
      domain::Asset a;
      a.id = arg(form, 1, "asset id").as_symbol();
      auto attrs = attributes(form, 2, {"at", "needs"});
      if (!attrs.count("at")) sexpr::fail(form, "asset needs (at x y)");
      arity(*attrs["at"], 3);
      a.location = {attrs["at"]->items[1].as_int(), attrs["at"]->items[2].as_int()};
      if (attrs.count("needs")) {
        for (std::size_t i = 1; i < attrs["needs"]->items.size(); ++i) {
          a.needs.push_back(attrs["needs"]->items[i].as_symbol());
        }
      }
      assets.push_back(a);
    } else if (head == "pallet") {
      domain::Pallet p;
      p.id = arg(form, 1, "pallet id").as_symbol();
      auto attrs = attributes(form, 2, {"at"});
      if (!attrs.count("at")) sexpr::fail(form, "pallet needs (at x y)");
      arity(*attrs["at"], 3);
      p.location = {attrs["at"]->items[1].as_int(), attrs["at"]->items[2].as_int()};
      pallets.push_back(p);
    } else if (head == "goal") {
      arity(form, 3);
      domain::Goal g;
      const Node& kind = form.items[1];
      if (kind.is_symbol("photo")) {
        g.kind = domain::GoalKind::photo;
      } else if (kind.is_symbol("visit")) {
        g.kind = domain::GoalKind::visit;
      } else if (kind.is_symbol("supply")) {
        g.kind = domain::GoalKind::supply;
      } else {
        sexpr::fail(kind, "goal kind must be photo, visit or supply");
      }
      g.subject = form.items[2].as_symbol();
      goals.push_back(g);
    } else if (head == "constants") {
      once();
      auto attrs = attributes(form, 1, {"goal-reward", "action-cost", "ordering-reward", "default-probability", "discount"});
      auto value = [&](const char* key, double& slot) {
        if (!attrs.count(key)) return;
        arity(*attrs[key], 2);
        slot = attrs[key]->items[1].as_double();
      };
      value("goal-reward", s.model.goal_reward);
      value("action-cost", s.model.action_cost);
      value("ordering-reward", s.model.ordering_reward);
      value("default-probability", s.model.default_probability);
      value("discount", s.model.discount);
    } else if (head == "hypothesis") {
      assess::Hypothesis h;
      h.name = arg(form, 1, "hypothesis name").as_symbol();
      for (std::size_t i = 2; i < form.items.size(); ++i) {
        const Node& v = form.items[i];
        if (!v.is_list() || v.items.size() != 2) sexpr::fail(v, "expected '(<value> <prior>)'");
        h.values.emplace_back(v.items[0].as_symbol(), probability(v.items[1]));
      }
      s.model.hypotheses.push_back(h);
    } else if (head == "rule") {
      s.model.rules.push_back(rule(form));
    } else if (head == "operator-preferences") {
      once();
      operator_section = &form;
    } else if (head == "reference-constraints") {
      once();
      reference_section = &form;
    } else {
      sexpr::fail(form, "unknown section '" + head + "'");
    }
  }
  if (!grid) throw ValidationError("grid: missing section");
  if (!horizon) throw ValidationError("horizon: missing section");

  s.model.world = domain::World(*grid, std::move(uavs), std::move(targets), std::move(assets), std::move(pallets),
                                *horizon, std::move(goals));
  s.model.validate();
  auto section = [&](const Node* n) {
    if (!n) return prefs::PreferenceSet{};
    std::vector<Node> body(n->items.begin() + 1, n->items.end());
    return prefs::parse(body, s.model.world, s.parse_options());
  };
  s.operator_preferences = section(operator_section);
  s.reference_constraints = section(reference_section);
  return s;
}

std::string render(const Scenario& s) {
  const auto& w = s.world();
  std::ostringstream out;
  out << format_header << "\n";
  out << "(name " << s.name << ")\n";
  if (!s.title.empty()) out << "(title " << quoted(s.title) << ")\n";
  if (!s.update.empty()) out << "(update " << quoted(s.update) << ")\n";
  out << "(grid " << w.grid().width << " " << w.grid().height << ")\n";
  out << "(horizon " << w.horizon() << ")\n";
  for (const auto& u : w.uavs()) {
    out << "(uav " << u.id << " (at " << u.start.x << " " << u.start.y << ")";
    if (!u.can_carry) out << " (can-carry false)";
    if (!u.operational) out << " (operational false)";
    out << ")\n";
  }
  for (const auto& t : w.targets()) {
    out << "(target " << t.id << " (path";
    for (const auto& c : t.trajectory) out << " " << cell_text(c);
    out << ")";
    if (t.status != domain::TargetStatus::unknown) out << " (status " << status_name(t.status) << ")";
    out << ")\n";
  }
  for (const auto& a : w.assets()) {
    out << "(asset " << a.id << " (at " << a.location.x << " " << a.location.y << ")";
    if (!a.needs.empty()) {
      out << " (needs";
      for (const auto& n : a.needs) out << " " << n;
      out << ")";
    }
    out << ")\n";
  }
  for (const auto& p : w.pallets()) out << "(pallet " << p.id << " (at " << p.location.x << " " << p.location.y << "))\n";
  for (const auto& g : w.goals()) out << "(goal " << goal_kind_name(g.kind) << " " << g.subject << ")\n";

  const assess::AssessmentModel defaults;
  const auto& m = s.model;
  std::string constants;
  auto constant = [&](const char* key, double v, double d) {
    if (v != d) constants += std::string(" (") + key + " " + number(v) + ")";
  };
  constant("goal-reward", m.goal_reward, defaults.goal_reward);
  constant("action-cost", m.action_cost, defaults.action_cost);
  constant("ordering-reward", m.ordering_reward, defaults.ordering_reward);
  constant("default-probability", m.default_probability, defaults.default_probability);
  constant("discount", m.discount, defaults.discount);
  if (!constants.empty()) out << "(constants" << constants << ")\n";

  for (const auto& h : m.hypotheses) {
    out << "(hypothesis " << h.name;
    for (const auto& [v, p] : h.values) out << " (" << v << " " << number(p) << ")";
    out << ")\n";
  }
  for (const auto& r : m.rules) {
    out << "(rule (action " << assess::pattern_name(r.action) << ")";
    if (r.uav) out << " (uav " << *r.uav << ")";
    if (r.target) out << " (target " << *r.target << ")";
    if (r.pallet) out << " (pallet " << *r.pallet << ")";
    if (r.asset) out << " (asset " << *r.asset << ")";
    if (!r.cells.empty()) {
      out << " (cells";
      for (const auto& c : r.cells) out << " " << cell_text(c);
      out << ")";
    }
    if (r.near_target) out << " (near " << *r.near_target << " " << r.near_radius << ")";
    if (r.moves_from >= 0) out << " (moves-from " << r.moves_from << ")";
    if (r.moves_every > 0) out << " (moves-every " << r.moves_every << ")";
    if (r.from_t) out << " (from " << *r.from_t << ")";
    if (r.until_t) out << " (until " << *r.until_t << ")";
    if (r.probability) out << " (probability " << number(*r.probability) << ")";
    if (r.when) out << " (when " << r.when->first << " " << r.when->second << ")";
    if (r.on_failure != assess::FailureMode::action_wasted) out << " (on-failure " << assess::failure_name(r.on_failure) << ")";
    out << ")\n";
  }
  auto section = [&](const char* head, const prefs::PreferenceSet& set) {
    if (set.empty()) return;
    out << "(" << head << "\n";
    std::istringstream lines(prefs::render(set, s.parse_options()));
    std::string l;
    while (std::getline(lines, l)) out << "  " << l << "\n";
    out << ")\n";
  };
  section("operator-preferences", s.operator_preferences);
  section("reference-constraints", s.reference_constraints);
  return out.str();
}

Scenario load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read scenario file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), std::filesystem::path(path).stem().string());
}

const std::vector<Scenario>& bundled() {
  static const std::vector<Scenario> all = [] {
    std::vector<Scenario> out;
    for (const auto& [name, text] : detail::bundled_sources()) out.push_back(parse(text, name));
    return out;
  }();
  return all;
}

const Scenario& bundled(const std::string& name) {
  for (const auto& s : bundled()) {
    if (s.name == name) return s;
  }
  throw ValidationError("unknown scenario '" + name + "'");
}

std::vector<std::string> bundled_names() {
  std::vector<std::string> out;
  for (const auto& s : bundled()) out.push_back(s.name);
  return out;
}

}  // namespace resplan::scenarios
