#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "resplan/error.hpp"
#include "resplan/ltl.hpp"

using namespace resplan::ltl;

namespace {

const Formula p = Formula::atom("p");
const Formula q = Formula::atom("q");

Trace trace(std::initializer_list<Label> labels) { return Trace(labels); }

/// Evaluate, progression and automaton against the reference semantics.
/// Returns the number of disagreements.
int disagreements(const Formula& f, const Automaton& a, const Trace& t) {
  const bool expected = oracle::holds(f, t, 0);
  int bad = 0;
  if (!t.empty() && evaluate(f, t) != expected) ++bad;
  if (accepts_by_progression(f, t) != expected) ++bad;
  if (a.accepts(t) != expected) ++bad;
  return bad;
}

}  // namespace

TEST_SUITE("ltl") {
  TEST_CASE("evaluate on small traces") {
    const Trace t = trace({{"p"}, {"p", "q"}, {}});
    CHECK(evaluate(p, t));
    CHECK_FALSE(evaluate(q, t));
    CHECK(evaluate(Formula::next(q), t));
    CHECK(evaluate(Formula::eventually(q), t));
    CHECK_FALSE(evaluate(Formula::always(p), t));
    CHECK(evaluate(Formula::until(p, q), t));
    CHECK_FALSE(evaluate(Formula::next(p), t, 2));
    CHECK(evaluate(Formula::weak_next(p), t, 2));
    CHECK_THROWS_AS(evaluate(p, t, 3), std::out_of_range);
  }

  TEST_CASE("progression end markers") {
    // X p after one label obliges a non-empty rest whose first label has p.
    const Formula residual = progress(Formula::next(p), Label{});
    CHECK_FALSE(end_check(residual));
    CHECK(end_check(progress(Formula::weak_next(p), Label{})));
    CHECK(end_check(progress(residual, Label{"p"})));
    CHECK_FALSE(end_check(progress(residual, Label{})));
    // Until and Eventually are false on the empty suffix; Always and Release true.
    CHECK_FALSE(end_check(Formula::eventually(p)));
    CHECK(end_check(Formula::always(p)));
    CHECK_FALSE(end_check(Formula::until(p, q)));
    CHECK(end_check(Formula::release(p, q)));
  }

  TEST_CASE("simplify canonicalizes boolean structure") {
    CHECK(simplify(Formula::conjunction({q, p, p})) == simplify(Formula::conjunction({p, q})));
    CHECK(simplify(Formula::disjunction({p, Formula::top()})) == Formula::top());
    CHECK(simplify(Formula::conjunction({p, Formula::bottom()})) == Formula::bottom());
    CHECK(simplify(Formula::negation(Formula::negation(p))) == p);
    CHECK(simplify(Formula::conjunction({p, Formula::conjunction({q, p})})) == simplify(Formula::conjunction({p, q})));
  }

  TEST_CASE("render and parse") {
    CHECK(render(Formula::until(p, Formula::negation(q))) == "(until p (not q))");
    std::mt19937 rng(11);
    const std::vector<std::string> atoms{"p", "q", "(agentloc d1 v2 v3)"};
    for (int i = 0; i < 500; ++i) {
      const Formula f = oracle::random_formula(rng, 4, atoms);
      CHECK(parse_formula(render(f)) == f);
    }
  }

  TEST_CASE("triple equivalence on the exhaustive battery") {
    const auto traces = oracle::all_traces({"p", "q"}, 0, 5);
    CHECK(traces.size() == 1 + 4 + 16 + 64 + 256 + 1024);
    const auto formulas = oracle::battery();
    REQUIRE(formulas.size() == 20);
    int bad = 0;
    for (const auto& f : formulas) {
      const auto a = Automaton::compile(f);
      for (const auto& t : traces) bad += disagreements(f, a, t);
    }
    CHECK(bad == 0);
  }

  TEST_CASE("triple equivalence on random formulas and traces") {
    std::mt19937 rng(20240611);
    const std::vector<std::string> atoms{"a", "b", "c"};
    int bad = 0;
    for (int i = 0; i < 10000; ++i) {
      const Formula f = oracle::random_formula(rng, 4, atoms);
      const auto a = Automaton::compile(f);
      bad += disagreements(f, a, oracle::random_trace(rng, atoms, 6));
    }
    CHECK(bad == 0);
  }

  TEST_CASE("dualities hold on every short trace") {
    const auto traces = oracle::all_traces({"p", "q"}, 1, 4);
    const Formula np = Formula::negation(p);
    const Formula nq = Formula::negation(q);
    for (const auto& t : traces) {
      CHECK(evaluate(Formula::negation(Formula::eventually(p)), t) == evaluate(Formula::always(np), t));
      CHECK(evaluate(Formula::negation(Formula::until(p, q)), t) == evaluate(Formula::release(np, nq), t));
      CHECK(evaluate(Formula::negation(Formula::next(p)), t) == evaluate(Formula::weak_next(np), t));
      CHECK(evaluate(Formula::eventually(p), t) == evaluate(Formula::until(Formula::top(), p), t));
    }
  }

  TEST_CASE("simplify is idempotent and progression output is canonical") {
    std::mt19937 rng(5);
    const std::vector<std::string> atoms{"a", "b"};
    for (int i = 0; i < 2000; ++i) {
      const Formula f = oracle::random_formula(rng, 4, atoms);
      const Formula s = simplify(f);
      CHECK(simplify(s) == s);
      const Formula r = progress(f, Label{"a"});
      CHECK(simplify(r) == r);
    }
  }

  TEST_CASE("automaton states are distinct progressions") {
    const auto a = Automaton::compile(Formula::always(Formula::implies(p, Formula::eventually(q))));
    CHECK(a.atoms() == std::vector<std::string>{"p", "q"});
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.find(a.state(i)) == i);
      for (std::uint64_t l = 0; l < 4; ++l) CHECK(a.transition(i, l) < a.size());
    }
    CHECK(a.size() <= 4);
  }

  TEST_CASE("automaton bounds") {
    CHECK_THROWS_AS(Automaton::compile(Formula::until(p, Formula::next(q)), 1), resplan::BoundExceededError);
    std::vector<Formula> many;
    for (int i = 0; i < 17; ++i) many.push_back(Formula::atom("x" + std::to_string(i)));
    CHECK_THROWS_AS(Automaton::compile(Formula::eventually(Formula::conjunction(many))), resplan::BoundExceededError);
  }
}
