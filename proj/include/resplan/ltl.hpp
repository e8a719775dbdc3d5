#pragma once

// Finite-trace linear temporal logic (LTLf) with strong Next.
//
// Three independent routes decide satisfaction of a formula on a trace:
//   evaluate()          direct recursion over trace positions,
//   progress() + end_check()  formula progression one label at a time,
//   Automaton           the progression closure tabulated over all labels.
//
// Progression treats a residual formula as a statement about the rest of the
// trace, which may be empty. On the empty trace atoms, Next, Until and
// Eventually are false; WeakNext, Release and Always are true. Two marker
// formulas carry the "more positions follow" obligation: `Eventually(True)`
// (non-empty) and `Always(False)` (empty).

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace resplan::ltl {

enum class Op : std::uint8_t {
  truth,
  falsity,
  atom,
  negation,
  conjunction,
  disjunction,
  next,
  weak_next,
  until,
  release,
  eventually,
  always,
};

class Formula {
 public:
  Formula();  // True

  // Raw constructors: build exactly the node requested, no rewriting.
  static Formula top();
  static Formula bottom();
  static Formula atom(std::string name);
  static Formula negation(Formula f);
  static Formula conjunction(std::vector<Formula> args);
  static Formula disjunction(std::vector<Formula> args);
  static Formula next(Formula f);
  static Formula weak_next(Formula f);
  static Formula until(Formula lhs, Formula rhs);
  static Formula release(Formula lhs, Formula rhs);
  static Formula eventually(Formula f);
  static Formula always(Formula f);
  static Formula implies(Formula lhs, Formula rhs);  // Or(Not lhs, rhs)

  Op op() const;
  const std::string& name() const;  // atom name, empty otherwise
  std::span<const Formula> args() const;
  std::size_t hash() const;
  std::size_t depth() const;

  friend bool operator==(const Formula& a, const Formula& b);
  friend std::strong_ordering operator<=>(const Formula& a, const Formula& b);

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node);
  static Formula make(Op op, std::string name, std::vector<Formula> args);
  std::shared_ptr<const Node> node_;
};

struct FormulaHash {
  std::size_t operator()(const Formula& f) const { return f.hash(); }
};

using Label = std::set<std::string>;
using Trace = std::vector<Label>;
using AtomTruth = std::function<bool(const std::string&)>;

/// Canonical form: n-ary And/Or flattened, sorted and deduplicated, constants
/// folded, double negation removed, end markers dropped where redundant.
/// Structural equality of simplified formulas is the automaton state identity.
Formula simplify(const Formula& f);

/// Satisfaction at `position`; throws std::out_of_range when the position is
/// outside the trace.
bool evaluate(const Formula& f, const Trace& trace, std::size_t position = 0);

/// Residual obligation on the suffix after consuming `label`. The result is
/// simplified.
Formula progress(const Formula& f, const Label& label);
Formula progress(const Formula& f, const AtomTruth& truth);

/// True iff the residual formula holds on the empty suffix, i.e. the trace
/// ended right after the last consumed label.
bool end_check(const Formula& f);

/// Progression fold over the whole trace followed by end_check.
bool accepts_by_progression(const Formula& f, const Trace& trace);

/// Distinct atom names, sorted.
std::vector<std::string> atoms(const Formula& f);

/// Deterministic acceptor whose states are the simplified progressions of a
/// formula. Labels are bitmasks over atoms() (bit i set = atoms()[i] true).
class Automaton {
 public:
  static constexpr std::size_t default_state_bound = 10000;

  /// Throws BoundExceededError when the closure grows past `state_bound`.
  static Automaton compile(const Formula& f, std::size_t state_bound = default_state_bound);

  std::size_t initial() const { return 0; }
  std::size_t size() const { return states_.size(); }
  const Formula& state(std::size_t s) const { return states_[s]; }
  bool accepting(std::size_t s) const { return accepting_[s] != 0; }
  const std::vector<std::string>& atoms() const { return atoms_; }

  std::size_t transition(std::size_t s, std::uint64_t label_bits) const {
    return table_[s * labels_ + static_cast<std::size_t>(label_bits)];
  }
  std::size_t transition(std::size_t s, const Label& label) const;

  /// Index of the state equal to `f`, or size() when absent.
  std::size_t find(const Formula& f) const;

  bool accepts(const Trace& trace) const;

 private:
  std::vector<std::string> atoms_;
  std::size_t labels_ = 1;
  std::vector<Formula> states_;
  std::vector<char> accepting_;
  std::vector<std::uint32_t> table_;
};

/// Canonical s-expression text, e.g. `(until p (not q))`. Atoms render by
/// name; atom names that are themselves s-expressions render verbatim.
std::string render(const Formula& f);

/// Parses the rendering produced by render(). Bare symbols and
/// parenthesized forms whose head is not an operator become atoms.
Formula parse_formula(const std::string& text);

}  // namespace resplan::ltl
