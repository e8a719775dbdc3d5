#include "resplan/ltl.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <unordered_map>

#include "resplan/error.hpp"
#include "resplan/sexpr.hpp"

namespace resplan::ltl {

struct Formula::Node {
  Op op;
  std::string name;
  std::vector<Formula> args;
  std::size_t hash;
  std::size_t depth;
};

namespace {

std::size_t mix(std::size_t seed, std::size_t v) { return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)); }

}  // namespace

Formula::Formula() : Formula(top()) {}

Formula::Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Formula Formula::make(Op op, std::string name, std::vector<Formula> args) {
  std::size_t h = mix(std::hash<int>{}(static_cast<int>(op)), std::hash<std::string>{}(name));
  std::size_t depth = 0;
  for (const auto& a : args) {
    h = mix(h, a.hash());
    depth = std::max(depth, a.depth() + 1);
  }
  return Formula(std::make_shared<const Node>(Node{op, std::move(name), std::move(args), h, depth}));
}

Formula Formula::top() {
  static const Formula f = make(Op::truth, {}, {});
  return f;
}
Formula Formula::bottom() {
  static const Formula f = make(Op::falsity, {}, {});
  return f;
}
Formula Formula::atom(std::string name) { return make(Op::atom, std::move(name), {}); }
Formula Formula::negation(Formula f) { return make(Op::negation, {}, {std::move(f)}); }
Formula Formula::conjunction(std::vector<Formula> args) { return make(Op::conjunction, {}, std::move(args)); }
Formula Formula::disjunction(std::vector<Formula> args) { return make(Op::disjunction, {}, std::move(args)); }
Formula Formula::next(Formula f) { return make(Op::next, {}, {std::move(f)}); }
Formula Formula::weak_next(Formula f) { return make(Op::weak_next, {}, {std::move(f)}); }
Formula Formula::until(Formula lhs, Formula rhs) { return make(Op::until, {}, {std::move(lhs), std::move(rhs)}); }
Formula Formula::release(Formula lhs, Formula rhs) { return make(Op::release, {}, {std::move(lhs), std::move(rhs)}); }
Formula Formula::eventually(Formula f) { return make(Op::eventually, {}, {std::move(f)}); }
Formula Formula::always(Formula f) { return make(Op::always, {}, {std::move(f)}); }
Formula Formula::implies(Formula lhs, Formula rhs) { return disjunction({negation(std::move(lhs)), std::move(rhs)}); }

Op Formula::op() const { return node_->op; }
const std::string& Formula::name() const { return node_->name; }
std::span<const Formula> Formula::args() const { return node_->args; }
std::size_t Formula::hash() const { return node_->hash; }
std::size_t Formula::depth() const { return node_->depth; }

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (a.hash() != b.hash()) return false;
  return (a <=> b) == 0;
}

std::strong_ordering operator<=>(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return std::strong_ordering::equal;
  if (auto c = a.op() <=> b.op(); c != 0) return c;
  if (auto c = a.name() <=> b.name(); c != 0) return c;
  const auto& x = a.node_->args;
  const auto& y = b.node_->args;
  if (auto c = x.size() <=> y.size(); c != 0) return c;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (auto c = x[i] <=> y[i]; c != 0) return c;
  }
  return std::strong_ordering::equal;
}

// ---------------------------------------------------------------------------
// Canonical builders

namespace {

const Formula& nonempty_marker() {
  static const Formula f = Formula::eventually(Formula::top());
  return f;
}

const Formula& empty_marker() {
  static const Formula f = Formula::always(Formula::bottom());
  return f;
}

bool is(const Formula& f, Op op) { return f.op() == op; }

Formula mk_not(const Formula& f) {
  if (is(f, Op::truth)) return Formula::bottom();
  if (is(f, Op::falsity)) return Formula::top();
  if (is(f, Op::negation)) return f.args()[0];
  return Formula::negation(f);
}

// Shared body of mk_and / mk_or. `unit` is dropped, `zero` absorbs.
Formula mk_junction(Op op, const std::vector<Formula>& input) {
  const bool conj = op == Op::conjunction;
  const Op unit = conj ? Op::truth : Op::falsity;
  const Op zero = conj ? Op::falsity : Op::truth;
  std::vector<Formula> flat;
  flat.reserve(input.size());
  for (const auto& a : input) {
    if (is(a, unit)) continue;
    if (is(a, zero)) return a;
    if (is(a, op)) {
      for (const auto& b : a.args()) flat.push_back(b);
    } else {
      flat.push_back(a);
    }
  }
  std::sort(flat.begin(), flat.end());
  flat.erase(std::unique(flat.begin(), flat.end()), flat.end());

  const Formula absorbing = conj ? Formula::bottom() : Formula::top();
  for (const auto& a : flat) {
    if (is(a, Op::negation) && std::binary_search(flat.begin(), flat.end(), a.args()[0])) return absorbing;
  }

  const bool has_nonempty = std::binary_search(flat.begin(), flat.end(), nonempty_marker());
  const bool has_empty = std::binary_search(flat.begin(), flat.end(), empty_marker());
  if (has_nonempty && has_empty) return absorbing;

  // In a conjunction the non-empty marker is redundant next to any conjunct
  // that already fails on the empty trace; dually for the empty marker in a
  // disjunction next to a disjunct that holds on the empty trace.
  const Formula& marker = conj ? nonempty_marker() : empty_marker();
  if (conj ? has_nonempty : has_empty) {
    const bool redundant = std::any_of(flat.begin(), flat.end(), [&](const Formula& a) {
      return !(a == marker) && end_check(a) != conj;
    });
    if (redundant) flat.erase(std::find(flat.begin(), flat.end(), marker));
  }

  if (flat.empty()) return conj ? Formula::top() : Formula::bottom();
  if (flat.size() == 1) return flat.front();
  return conj ? Formula::conjunction(std::move(flat)) : Formula::disjunction(std::move(flat));
}

Formula mk_and(const std::vector<Formula>& args) { return mk_junction(Op::conjunction, args); }
Formula mk_or(const std::vector<Formula>& args) { return mk_junction(Op::disjunction, args); }

Formula mk_next(const Formula& f) {
  if (is(f, Op::falsity)) return f;
  return Formula::next(f);
}

Formula mk_weak_next(const Formula& f) {
  if (is(f, Op::truth)) return f;
  return Formula::weak_next(f);
}

Formula mk_eventually(const Formula& f) {
  if (is(f, Op::falsity)) return f;
  if (is(f, Op::eventually)) return f;
  return Formula::eventually(f);
}

Formula mk_always(const Formula& f) {
  if (is(f, Op::truth)) return f;
  if (is(f, Op::always)) return f;
  return Formula::always(f);
}

Formula mk_until(const Formula& a, const Formula& b) {
  if (is(b, Op::falsity)) return b;
  if (is(b, Op::truth)) return nonempty_marker();
  if (is(a, Op::falsity)) return mk_and({b, nonempty_marker()});
  if (is(a, Op::truth)) return mk_eventually(b);
  return Formula::until(a, b);
}

Formula mk_release(const Formula& a, const Formula& b) {
  if (is(b, Op::truth)) return b;
  if (is(b, Op::falsity)) return empty_marker();
  if (is(a, Op::truth)) return mk_or({b, empty_marker()});
  if (is(a, Op::falsity)) return mk_always(b);
  return Formula::release(a, b);
}

Formula progress_canonical(const Formula& f, const AtomTruth& truth) {
  switch (f.op()) {
    case Op::truth:
    case Op::falsity:
      return f;
    case Op::atom:
      return truth(f.name()) ? Formula::top() : Formula::bottom();
    case Op::negation:
      return mk_not(progress_canonical(f.args()[0], truth));
    case Op::conjunction:
    case Op::disjunction: {
      std::vector<Formula> parts;
      parts.reserve(f.args().size());
      for (const auto& a : f.args()) parts.push_back(progress_canonical(a, truth));
      return f.op() == Op::conjunction ? mk_and(parts) : mk_or(parts);
    }
    case Op::next:
      return mk_and({f.args()[0], nonempty_marker()});
    case Op::weak_next:
      return mk_or({f.args()[0], empty_marker()});
    case Op::until: {
      auto rest = mk_and({progress_canonical(f.args()[0], truth), f, nonempty_marker()});
      return mk_or({progress_canonical(f.args()[1], truth), rest});
    }
    case Op::release: {
      auto rest = mk_or({progress_canonical(f.args()[0], truth), f, empty_marker()});
      return mk_and({progress_canonical(f.args()[1], truth), rest});
    }
    case Op::eventually:
      return mk_or({progress_canonical(f.args()[0], truth), mk_and({f, nonempty_marker()})});
    case Op::always:
      return mk_and({progress_canonical(f.args()[0], truth), mk_or({f, empty_marker()})});
  }
  return f;
}

// Boolean normal form over temporal and atomic subformulas: a disjunction of
// clauses, each a conjunction of literals. Clauses that contain another
// clause are dropped. Progression only ever produces Boolean combinations of
// a finite set of such subformulas, so this keeps the closure finite.
using Clause = std::vector<Formula>;

constexpr std::size_t max_clauses = 512;

bool contradictory(const Clause& c) {
  for (const auto& l : c) {
    if (is(l, Op::negation) && std::binary_search(c.begin(), c.end(), l.args()[0])) return true;
  }
  return std::binary_search(c.begin(), c.end(), nonempty_marker()) &&
         std::binary_search(c.begin(), c.end(), empty_marker());
}

std::optional<std::vector<Clause>> reduce(std::vector<Clause> clauses) {
  for (auto& c : clauses) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
  std::erase_if(clauses, contradictory);
  std::sort(clauses.begin(), clauses.end(), [](const Clause& a, const Clause& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  clauses.erase(std::unique(clauses.begin(), clauses.end()), clauses.end());
  std::vector<Clause> kept;
  for (auto& c : clauses) {
    const bool absorbed = std::any_of(kept.begin(), kept.end(), [&](const Clause& k) {
      return std::includes(c.begin(), c.end(), k.begin(), k.end());
    });
    if (!absorbed) kept.push_back(std::move(c));
  }
  if (kept.size() > max_clauses) return std::nullopt;
  return kept;
}

std::optional<std::vector<Clause>> clauses_of(const Formula& f, bool negated) {
  switch (f.op()) {
    case Op::truth:
    case Op::falsity:
      if ((f.op() == Op::truth) != negated) return std::vector<Clause>{Clause{}};
      return std::vector<Clause>{};
    case Op::negation:
      return clauses_of(f.args()[0], !negated);
    case Op::conjunction:
    case Op::disjunction: {
      const bool product = (f.op() == Op::conjunction) != negated;
      std::vector<Clause> acc;
      if (product) acc.push_back({});
      for (const auto& a : f.args()) {
        auto part = clauses_of(a, negated);
        if (!part) return std::nullopt;
        if (!product) {
          acc.insert(acc.end(), part->begin(), part->end());
        } else {
          std::vector<Clause> next;
          if (acc.size() * part->size() > max_clauses * 4) return std::nullopt;
          for (const auto& x : acc) {
            for (const auto& y : *part) {
              Clause c = x;
              c.insert(c.end(), y.begin(), y.end());
              next.push_back(std::move(c));
            }
          }
          acc = std::move(next);
        }
        auto reduced = reduce(std::move(acc));
        if (!reduced) return std::nullopt;
        acc = std::move(*reduced);
      }
      return acc;
    }
    default:
      return std::vector<Clause>{Clause{negated ? mk_not(f) : f}};
  }
}

/// Falls back to `f` unchanged when the normal form grows too large.
Formula boolean_normal(const Formula& f) {
  auto clauses = clauses_of(f, false);
  if (!clauses) return f;
  std::vector<Formula> disjuncts;
  disjuncts.reserve(clauses->size());
  for (const auto& c : *clauses) disjuncts.push_back(mk_and(c));
  return mk_or(disjuncts);
}

}  // namespace

Formula simplify(const Formula& f) {
  switch (f.op()) {
    case Op::truth:
    case Op::falsity:
    case Op::atom:
      return f;
    case Op::negation:
      return mk_not(simplify(f.args()[0]));
    case Op::conjunction:
    case Op::disjunction: {
      std::vector<Formula> parts;
      for (const auto& a : f.args()) parts.push_back(simplify(a));
      return f.op() == Op::conjunction ? mk_and(parts) : mk_or(parts);
    }
    case Op::next:
      return mk_next(simplify(f.args()[0]));
    case Op::weak_next:
      return mk_weak_next(simplify(f.args()[0]));
    case Op::until:
      return mk_until(simplify(f.args()[0]), simplify(f.args()[1]));
    case Op::release:
      return mk_release(simplify(f.args()[0]), simplify(f.args()[1]));
    case Op::eventually:
      return mk_eventually(simplify(f.args()[0]));
    case Op::always:
      return mk_always(simplify(f.args()[0]));
  }
  return f;
}

bool end_check(const Formula& f) {
  switch (f.op()) {
    case Op::truth:
      return true;
    case Op::falsity:
    case Op::atom:
    case Op::next:
    case Op::until:
    case Op::eventually:
      return false;
    case Op::weak_next:
    case Op::release:
    case Op::always:
      return true;
    case Op::negation:
      return !end_check(f.args()[0]);
    case Op::conjunction:
      return std::all_of(f.args().begin(), f.args().end(), [](const Formula& a) { return end_check(a); });
    case Op::disjunction:
      return std::any_of(f.args().begin(), f.args().end(), [](const Formula& a) { return end_check(a); });
  }
  return false;
}

bool evaluate(const Formula& f, const Trace& trace, std::size_t i) {
  const std::size_t n = trace.size();
  if (i >= n) throw std::out_of_range("evaluate: position " + std::to_string(i) + " outside trace of length " +
                                      std::to_string(n));
  switch (f.op()) {
    case Op::truth:
      return true;
    case Op::falsity:
      return false;
    case Op::atom:
      return trace[i].count(f.name()) != 0;
    case Op::negation:
      return !evaluate(f.args()[0], trace, i);
    case Op::conjunction:
      for (const auto& a : f.args()) {
        if (!evaluate(a, trace, i)) return false;
      }
      return true;
    case Op::disjunction:
      for (const auto& a : f.args()) {
        if (evaluate(a, trace, i)) return true;
      }
      return false;
    case Op::next:
      return i + 1 < n && evaluate(f.args()[0], trace, i + 1);
    case Op::weak_next:
      return i + 1 >= n || evaluate(f.args()[0], trace, i + 1);
    case Op::until:
      for (std::size_t k = i; k < n; ++k) {
        if (evaluate(f.args()[1], trace, k)) return true;
        if (!evaluate(f.args()[0], trace, k)) return false;
      }
      return false;
    case Op::release:
      for (std::size_t k = i; k < n; ++k) {
        if (!evaluate(f.args()[1], trace, k)) return false;
        if (evaluate(f.args()[0], trace, k)) return true;
      }
      return true;
    case Op::eventually:
      for (std::size_t k = i; k < n; ++k) {
        if (evaluate(f.args()[0], trace, k)) return true;
      }
      return false;
    case Op::always:
      for (std::size_t k = i; k < n; ++k) {
        if (!evaluate(f.args()[0], trace, k)) return false;
      }
      return true;
  }
  return false;
}

Formula progress(const Formula& f, const Label& label) {
  return progress(f, [&](const std::string& a) { return label.count(a) != 0; });
}

Formula progress(const Formula& f, const AtomTruth& truth) {
  return boolean_normal(progress_canonical(simplify(f), truth));
}

bool accepts_by_progression(const Formula& f, const Trace& trace) {
  Formula current = simplify(f);
  for (const auto& label : trace) {
    current = boolean_normal(progress_canonical(current, [&](const std::string& a) { return label.count(a) != 0; }));
  }
  return end_check(current);
}

namespace {

void collect_atoms(const Formula& f, std::set<std::string>& out) {
  if (f.op() == Op::atom) out.insert(f.name());
  for (const auto& a : f.args()) collect_atoms(a, out);
}

}  // namespace

std::vector<std::string> atoms(const Formula& f) {
  std::set<std::string> out;
  collect_atoms(f, out);
  return {out.begin(), out.end()};
}

Automaton Automaton::compile(const Formula& f, std::size_t state_bound) {
  Automaton a;
  a.atoms_ = ltl::atoms(f);
  if (a.atoms_.size() > 16) {
    throw BoundExceededError("automaton: formula has " + std::to_string(a.atoms_.size()) +
                             " atoms, at most 16 are supported");
  }
  a.labels_ = std::size_t{1} << a.atoms_.size();
  std::unordered_map<Formula, std::uint32_t, FormulaHash> index;
  auto intern = [&](const Formula& s) -> std::uint32_t {
    auto it = index.find(s);
    if (it != index.end()) return it->second;
    if (a.states_.size() >= state_bound) {
      throw BoundExceededError("automaton: progression closure exceeds the state bound of " +
                               std::to_string(state_bound));
    }
    const auto id = static_cast<std::uint32_t>(a.states_.size());
    a.states_.push_back(s);
    a.accepting_.push_back(end_check(s) ? 1 : 0);
    index.emplace(s, id);
    return id;
  };
  intern(boolean_normal(simplify(f)));
  for (std::size_t s = 0; s < a.states_.size(); ++s) {
    for (std::size_t bits = 0; bits < a.labels_; ++bits) {
      const Formula current = a.states_[s];
      auto truth = [&](const std::string& name) {
        auto it = std::lower_bound(a.atoms_.begin(), a.atoms_.end(), name);
        return (bits >> static_cast<std::size_t>(it - a.atoms_.begin())) & 1u;
      };
      const auto target = intern(boolean_normal(progress_canonical(current, truth)));
      a.table_.push_back(target);
    }
  }
  return a;
}

std::size_t Automaton::transition(std::size_t s, const Label& label) const {
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (label.count(atoms_[i])) bits |= std::uint64_t{1} << i;
  }
  return transition(s, bits);
}

std::size_t Automaton::find(const Formula& f) const {
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i] == f) return i;
  }
  return states_.size();
}

bool Automaton::accepts(const Trace& trace) const {
  std::size_t s = initial();
  for (const auto& label : trace) s = transition(s, label);
  return accepting(s);
}

// ---------------------------------------------------------------------------
// Text form

namespace {

const char* op_name(Op op) {
  switch (op) {
    case Op::negation:
      return "not";
    case Op::conjunction:
      return "and";
    case Op::disjunction:
      return "or";
    case Op::next:
      return "next";
    case Op::weak_next:
      return "weak-next";
    case Op::until:
      return "until";
    case Op::release:
      return "release";
    case Op::eventually:
      return "eventually";
    case Op::always:
      return "always";
    default:
      return "";
  }
}

Formula from_node(const sexpr::Node& n) {
  if (n.is_symbol("true")) return Formula::top();
  if (n.is_symbol("false")) return Formula::bottom();
  if (!n.is_list()) return Formula::atom(n.text);
  const std::string head = n.head();
  auto arity = [&](std::size_t k) {
    if (n.items.size() != k + 1) sexpr::fail(n, "'" + head + "' takes " + std::to_string(k) + " operand(s)");
  };
  auto sub = [&](std::size_t i) { return from_node(n.items[i]); };
  if (head == "not") return arity(1), Formula::negation(sub(1));
  if (head == "next") return arity(1), Formula::next(sub(1));
  if (head == "weak-next") return arity(1), Formula::weak_next(sub(1));
  if (head == "eventually") return arity(1), Formula::eventually(sub(1));
  if (head == "always") return arity(1), Formula::always(sub(1));
  if (head == "until") return arity(2), Formula::until(sub(1), sub(2));
  if (head == "release") return arity(2), Formula::release(sub(1), sub(2));
  if (head == "and" || head == "or") {
    std::vector<Formula> parts;
    for (std::size_t i = 1; i < n.items.size(); ++i) parts.push_back(sub(i));
    return head == "and" ? Formula::conjunction(std::move(parts)) : Formula::disjunction(std::move(parts));
  }
  return Formula::atom(sexpr::render(n));
}

}  // namespace

std::string render(const Formula& f) {
  switch (f.op()) {
    case Op::truth:
      return "true";
    case Op::falsity:
      return "false";
    case Op::atom:
      return f.name();
    default: {
      std::string out = "(";
      out += op_name(f.op());
      for (const auto& a : f.args()) out += " " + render(a);
      return out + ")";
    }
  }
}

Formula parse_formula(const std::string& text) { return from_node(sexpr::parse_one(text)); }

}  // namespace resplan::ltl
