#include "resplan/prefs.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "resplan/error.hpp"
#include "resplan/sexpr.hpp"

namespace resplan::prefs {

using domain::Predicate;
using domain::Proposition;
using ltl::Formula;
using sexpr::Node;

std::string template_name(TemplateKind k) {
  switch (k) {
    case TemplateKind::sometime:
      return "sometime";
    case TemplateKind::always:
      return "always";
    case TemplateKind::sometime_after:
      return "sometime-after";
    case TemplateKind::sometime_before:
      return "sometime-before";
    case TemplateKind::at_most_once:
      return "at-most-once";
    case TemplateKind::at_end:
      return "at-end";
  }
  return "?";
}

std::string kind_name(ConstraintKind k) { return k == ConstraintKind::control ? "control" : "declarative"; }

const Preference* PreferenceSet::find(const std::string& name) const {
  for (const auto& p : preferences) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

namespace {

enum class EntityType { uav, target, asset, pallet };

const char* type_name(EntityType t) {
  switch (t) {
    case EntityType::uav:
      return "uav";
    case EntityType::target:
      return "target";
    case EntityType::asset:
      return "asset";
    case EntityType::pallet:
      return "pallet";
  }
  return "?";
}

std::optional<EntityType> type_from_name(const std::string& s) {
  if (s == "uav" || s == "uavs") return EntityType::uav;
  if (s == "target" || s == "targets") return EntityType::target;
  if (s == "asset" || s == "assets") return EntityType::asset;
  if (s == "pallet" || s == "pallets") return EntityType::pallet;
  return std::nullopt;
}

struct Binding {
  std::string variable;
  EntityType type;
  std::string value;
};

using Env = std::vector<Binding>;

[[noreturn]] void invalid(const Node& at, const std::string& message) { throw ValidationError(at.where, message); }

std::optional<EntityType> entity_type(const domain::World& w, const std::string& id) {
  if (w.uav_index(id)) return EntityType::uav;
  if (w.target_index(id)) return EntityType::target;
  if (w.asset_index(id)) return EntityType::asset;
  if (w.pallet_index(id)) return EntityType::pallet;
  return std::nullopt;
}

class Grounder {
 public:
  Grounder(const domain::World& w, const ParseOptions& o) : world_(w), options_(o) {}

  PreferenceSet run(const std::vector<Node>& forms) {
    PreferenceSet set;
    std::vector<std::pair<Ordering, const Node*>> pending;
    std::set<std::string> names;
    for (const auto& form : forms) {
      const auto head = form.head();
      if (head == "preference" || head == "forall") {
        expand(form, {}, set, names);
      } else if (head == "ordering") {
        if (form.items.size() != 3 && form.items.size() != 4) {
          sexpr::fail(form, "ordering takes two preference names and an optional weight");
        }
        Ordering o;
        o.earlier = form.items[1].as_symbol();
        o.later = form.items[2].as_symbol();
        o.weight = form.items.size() == 4 ? weight(form.items[3]) : options_.ordering_weight;
        pending.emplace_back(o, &form);
      } else {
        sexpr::fail(form, "expected preference, forall or ordering");
      }
    }
    for (const auto& [o, form] : pending) {
      if (!names.count(o.earlier)) invalid(form->items[1], "ordering refers to unknown preference '" + o.earlier + "'");
      if (!names.count(o.later)) invalid(form->items[2], "ordering refers to unknown preference '" + o.later + "'");
      if (o.earlier == o.later) invalid(*form, "ordering pairs preference '" + o.earlier + "' with itself");
      set.orderings.push_back(o);
    }
    return set;
  }

 private:
  double weight(const Node& n) const {
    const double w = n.as_double();
    if (w < 0) invalid(n, "weight must be non-negative");
    return w;
  }

  void expand(const Node& form, Env env, PreferenceSet& set, std::set<std::string>& names) {
    if (form.head() == "preference") {
      if (form.items.size() != 3 && form.items.size() != 4) {
        sexpr::fail(form, "preference takes a name, a template and an optional weight");
      }
      Preference p;
      p.name = form.items[1].as_symbol();
      for (const auto& b : env) p.name += "-" + b.value;
      p.body = parse_template(form.items[2], env);
      p.weight = form.items.size() == 4 ? weight(form.items[3]) : options_.preference_weight;
      if (!names.insert(p.name).second) invalid(form.items[1], "duplicate preference name '" + p.name + "'");
      set.preferences.push_back(std::move(p));
      return;
    }
    // (forall (?a - type ?b - type) body)
    if (form.items.size() != 3 || !form.items[1].is_list()) {
      sexpr::fail(form, "forall takes a parameter list and a body");
    }
    const auto& params = form.items[1].items;
    std::vector<std::pair<std::string, EntityType>> vars;
    for (std::size_t i = 0; i < params.size();) {
      const auto& var = params[i];
      if (!var.is_symbol() || var.text.size() < 2 || var.text[0] != '?') sexpr::fail(var, "expected a ?variable");
      if (i + 2 >= params.size()) sexpr::fail(var, "expected '- <type>' after variable");
      if (!params[i + 1].is_symbol("-")) sexpr::fail(params[i + 1], "expected '-'");
      const auto& tnode = params[i + 2];
      auto type = type_from_name(tnode.is_symbol() ? tnode.text : std::string{});
      if (!type) invalid(tnode, "type mismatch in forall: unknown type '" + tnode.text + "'");
      for (const auto& [name, _] : vars) {
        if (name == var.text) invalid(var, "variable " + var.text + " declared twice");
      }
      vars.emplace_back(var.text, *type);
      i += 3;
    }
    if (vars.empty()) sexpr::fail(form.items[1], "forall needs at least one variable");
    const auto& body = form.items[2];
    if (body.head() != "preference" && body.head() != "forall") sexpr::fail(body, "forall body must be a preference");
    ground(vars, 0, env, body, set, names);
  }

  void ground(const std::vector<std::pair<std::string, EntityType>>& vars, std::size_t i, Env& env,
              const Node& body, PreferenceSet& set, std::set<std::string>& names) {
    if (i == vars.size()) {
      expand(body, env, set, names);
      return;
    }
    for (const auto& id : entities(vars[i].second)) {
      env.push_back({vars[i].first, vars[i].second, id});
      ground(vars, i + 1, env, body, set, names);
      env.pop_back();
    }
  }

  std::vector<std::string> entities(EntityType t) const {
    std::vector<std::string> out;
    auto collect = [&](const auto& items) {
      for (const auto& e : items) out.push_back(e.id);
    };
    switch (t) {
      case EntityType::uav:
        collect(world_.uavs());
        break;
      case EntityType::target:
        collect(world_.targets());
        break;
      case EntityType::asset:
        collect(world_.assets());
        break;
      case EntityType::pallet:
        collect(world_.pallets());
        break;
    }
    return out;
  }

  Template parse_template(const Node& n, const Env& env) {
    const auto head = n.head();
    auto arity = [&](std::size_t k) {
      if (n.items.size() != k + 1) sexpr::fail(n, "'" + head + "' takes " + std::to_string(k) + " condition(s)");
    };
    Template t;
    if (head == "sometime") {
      t.kind = TemplateKind::sometime;
    } else if (head == "always") {
      t.kind = TemplateKind::always;
    } else if (head == "sometime-after") {
      t.kind = TemplateKind::sometime_after;
    } else if (head == "sometime-before") {
      t.kind = TemplateKind::sometime_before;
    } else if (head == "at-most-once") {
      t.kind = TemplateKind::at_most_once;
    } else if (head == "at-end") {
      t.kind = TemplateKind::at_end;
    } else if (head.empty()) {
      sexpr::fail(n, "expected a preference template");
    } else {
      invalid(n, "unknown template '" + head + "'");
    }
    const bool binary = t.kind == TemplateKind::sometime_after || t.kind == TemplateKind::sometime_before;
    arity(binary ? 2 : 1);
    t.first = condition(n.items[1], env);
    if (binary) t.second = condition(n.items[2], env);
    return t;
  }

  Formula condition(const Node& n, const Env& env) {
    if (n.is_symbol("true")) return Formula::top();
    if (n.is_symbol("false")) return Formula::bottom();
    if (!n.is_list() || n.items.empty()) sexpr::fail(n, "expected a condition");
    const auto head = n.head();
    if (head == "and" || head == "or") {
      std::vector<Formula> parts;
      for (std::size_t i = 1; i < n.items.size(); ++i) parts.push_back(condition(n.items[i], env));
      return head == "and" ? Formula::conjunction(std::move(parts)) : Formula::disjunction(std::move(parts));
    }
    if (head == "not") {
      if (n.items.size() != 2) sexpr::fail(n, "'not' takes one condition");
      return Formula::negation(condition(n.items[1], env));
    }
    if (head == "imply") {
      if (n.items.size() != 3) sexpr::fail(n, "'imply' takes two conditions");
      return Formula::implies(condition(n.items[1], env), condition(n.items[2], env));
    }
    return Formula::atom(atom(n, env).render());
  }

  std::string entity(const Node& arg, const Env& env, EntityType expected) {
    if (!arg.is_symbol()) sexpr::fail(arg, "expected an entity or ?variable");
    if (!arg.text.empty() && arg.text[0] == '?') {
      for (auto it = env.rbegin(); it != env.rend(); ++it) {
        if (it->variable != arg.text) continue;
        if (it->type != expected) {
          invalid(arg, "type mismatch in forall: " + arg.text + " is a " + type_name(it->type) + ", expected a " +
                           type_name(expected));
        }
        return it->value;
      }
      invalid(arg, "unbound variable " + arg.text);
    }
    auto actual = entity_type(world_, arg.text);
    if (!actual) invalid(arg, std::string("unknown entity '") + arg.text + "'");
    if (*actual != expected) {
      invalid(arg, "type mismatch: '" + arg.text + "' is a " + type_name(*actual) + ", expected a " +
                       type_name(expected));
    }
    return arg.text;
  }

  int coordinate(const Node& arg, int limit, const char* axis) {
    if (!arg.is_symbol()) sexpr::fail(arg, "expected a coordinate");
    std::string text = arg.text;
    if (!text.empty() && text[0] == 'v') text.erase(0, 1);
    Node copy = arg;
    copy.text = text;
    const int v = copy.as_int();
    if (v < 0 || v >= limit) invalid(arg, std::string(axis) + " coordinate " + std::to_string(v) + " outside grid");
    return v;
  }

  Proposition atom(const Node& n, const Env& env) {
    const auto head = n.head();
    auto pred = domain::predicate_from_name(head);
    if (!pred) invalid(n, "unknown predicate '" + (head.empty() ? sexpr::render(n) : head) + "'");
    Proposition p;
    p.pred = *pred;
    auto arity = [&](std::size_t k) {
      if (n.items.size() != k + 1) sexpr::fail(n, "'" + head + "' takes " + std::to_string(k) + " argument(s)");
    };
    switch (*pred) {
      case Predicate::agentloc:
        arity(3);
        p.first = entity(n.items[1], env, EntityType::uav);
        p.x = coordinate(n.items[2], world_.grid().width, "x");
        p.y = coordinate(n.items[3], world_.grid().height, "y");
        break;
      case Predicate::have_photo:
        arity(2);
        p.first = entity(n.items[1], env, EntityType::target);
        p.second = entity(n.items[2], env, EntityType::uav);
        break;
      case Predicate::visited:
        arity(2);
        p.first = entity(n.items[1], env, EntityType::asset);
        p.second = entity(n.items[2], env, EntityType::uav);
        break;
      case Predicate::carry_pallet:
        arity(2);
        p.first = entity(n.items[1], env, EntityType::pallet);
        p.second = entity(n.items[2], env, EntityType::uav);
        break;
      case Predicate::delivered:
        arity(2);
        p.first = entity(n.items[1], env, EntityType::pallet);
        p.second = entity(n.items[2], env, EntityType::asset);
        break;
      case Predicate::t_eq:
        arity(1);
        p.x = n.items[1].as_int();
        if (p.x < 0) invalid(n.items[1], "t-eq needs a non-negative timestep");
        break;
    }
    return p;
  }

  const domain::World& world_;
  const ParseOptions& options_;
};

std::string number_text(double v) {
  if (std::floor(v) == v && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

void require_propositional(const Formula& f) {
  switch (f.op()) {
    case ltl::Op::truth:
    case ltl::Op::falsity:
    case ltl::Op::atom:
      return;
    case ltl::Op::negation:
    case ltl::Op::conjunction:
    case ltl::Op::disjunction:
      for (const auto& a : f.args()) require_propositional(a);
      return;
    default:
      throw ValidationError("template condition is not propositional: " + ltl::render(f));
  }
}

}  // namespace

PreferenceSet parse(const std::string& text, const domain::World& world, const ParseOptions& options) {
  return parse(sexpr::parse_all(text), world, options);
}

PreferenceSet parse(const std::vector<Node>& forms, const domain::World& world, const ParseOptions& options) {
  return Grounder(world, options).run(forms);
}

std::string render(const Template& t) {
  std::string out = "(" + template_name(t.kind) + " " + ltl::render(t.first);
  if (t.second) out += " " + ltl::render(*t.second);
  return out + ")";
}

std::string render(const PreferenceSet& set, const ParseOptions& defaults) {
  std::string out;
  for (const auto& p : set.preferences) {
    out += "(preference " + p.name + " " + render(p.body);
    if (p.weight != defaults.preference_weight) out += " " + number_text(p.weight);
    out += ")\n";
  }
  for (const auto& o : set.orderings) {
    out += "(ordering " + o.earlier + " " + o.later;
    if (o.weight != defaults.ordering_weight) out += " " + number_text(o.weight);
    out += ")\n";
  }
  return out;
}

Formula lower(const Template& t) {
  require_propositional(t.first);
  const Formula& a = t.first;
  auto b = [&]() -> const Formula& {
    if (!t.second) throw ValidationError(template_name(t.kind) + " needs two conditions");
    require_propositional(*t.second);
    return *t.second;
  };
  switch (t.kind) {
    case TemplateKind::sometime:
      return Formula::eventually(a);
    case TemplateKind::always:
      return Formula::always(a);
    case TemplateKind::sometime_after:
      // whenever a holds, b holds then or later
      return Formula::always(Formula::implies(a, Formula::eventually(b())));
    case TemplateKind::sometime_before: {
      // a may only hold once b has held at a strictly earlier point
      const Formula not_a = Formula::negation(a);
      return Formula::disjunction(
          {Formula::always(not_a), Formula::until(not_a, Formula::conjunction({b(), not_a}))});
    }
    case TemplateKind::at_most_once: {
      // once a holds it stays true until it is false forever (a weak-until G !a)
      const Formula never_again = Formula::always(Formula::negation(a));
      const Formula weak_until = Formula::disjunction({Formula::until(a, never_again), Formula::always(a)});
      return Formula::always(Formula::implies(a, weak_until));
    }
    case TemplateKind::at_end:
      return Formula::eventually(Formula::conjunction({a, Formula::weak_next(Formula::bottom())}));
  }
  return a;
}

ConstraintKind classify(const Preference& p) {
  auto names = ltl::atoms(p.body.first);
  if (p.body.second) {
    auto more = ltl::atoms(*p.body.second);
    names.insert(names.end(), more.begin(), more.end());
  }
  std::size_t locations = 0;
  for (const auto& n : names) {
    if (n.rfind("(agentloc ", 0) == 0) ++locations;
  }
  if (!names.empty() && locations == names.size()) return ConstraintKind::control;
  const bool sequencing =
      p.body.kind == TemplateKind::sometime_after || p.body.kind == TemplateKind::sometime_before;
  if (sequencing && locations > 0) return ConstraintKind::control;
  return ConstraintKind::declarative;
}

double score_orderings(const PreferenceSet& set, const std::map<std::string, std::optional<int>>& first_satisfied) {
  double total = 0.0;
  for (const auto& o : set.orderings) {
    auto a = first_satisfied.find(o.earlier);
    auto b = first_satisfied.find(o.later);
    if (a == first_satisfied.end()) throw ValidationError("no satisfaction time for preference '" + o.earlier + "'");
    if (b == first_satisfied.end()) throw ValidationError("no satisfaction time for preference '" + o.later + "'");
    if (a->second && b->second && *a->second <= *b->second) total += o.weight;
  }
  return total;
}

PreferenceSet merge(const PreferenceSet& a, const PreferenceSet& b) {
  PreferenceSet out = a;
  for (const auto& p : b.preferences) {
    if (out.find(p.name)) throw ValidationError("preference name '" + p.name + "' is already defined");
    out.preferences.push_back(p);
  }
  out.orderings.insert(out.orderings.end(), b.orderings.begin(), b.orderings.end());
  return out;
}

Proposition parse_atom(const std::string& text) {
  const Node n = sexpr::parse_one(text);
  auto pred = domain::predicate_from_name(n.head());
  if (!pred) sexpr::fail(n, "unknown predicate in atom " + text);
  Proposition p;
  p.pred = *pred;
  auto coord = [](const Node& c) {
    Node copy = c;
    if (!copy.text.empty() && copy.text[0] == 'v') copy.text.erase(0, 1);
    return copy.as_int();
  };
  const std::size_t expected = *pred == Predicate::agentloc ? 4 : *pred == Predicate::t_eq ? 2 : 3;
  if (n.items.size() != expected) sexpr::fail(n, "wrong number of arguments in atom " + text);
  switch (*pred) {
    case Predicate::agentloc:
      p.first = n.items[1].as_symbol();
      p.x = coord(n.items[2]);
      p.y = coord(n.items[3]);
      break;
    case Predicate::t_eq:
      p.x = n.items[1].as_int();
      break;
    default:
      p.first = n.items[1].as_symbol();
      p.second = n.items[2].as_symbol();
      break;
  }
  return p;
}

}  // namespace resplan::prefs
