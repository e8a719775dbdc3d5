#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "resplan/assess.hpp"
#include "resplan/error.hpp"
#include "resplan/scenarios.hpp"

using namespace resplan;
using namespace resplan::domain;
using assess::AssessmentModel;
using assess::FailureMode;
using assess::OutcomeRule;

namespace {

constexpr double tolerance = 1e-9;

planner::Plan plan_of(const World& w, const std::string& text) { return planner::parse_plan(text, w); }

/// Random walk through the deterministic model.
planner::Plan random_plan(std::mt19937& rng, const World& w) {
  std::vector<JointAction> actions;
  auto s = w.initial_state();
  const int len = static_cast<int>(rng() % static_cast<unsigned>(w.horizon() + 1));
  for (int t = 0; t < len; ++t) {
    const auto options = applicable(s, w);
    actions.push_back(options[rng() % options.size()]);
    s = step(s, actions.back(), w);
  }
  return planner::make_plan(w, actions);
}

struct Stochastic {
  AssessmentModel model;
  prefs::PreferenceSet set;
};

/// Small enough for the history-tree oracle: at most two rules, horizon <= 6.
Stochastic random_stochastic(std::mt19937& rng, int i) {
  World w;
  switch (i % 3) {
    case 0:
      w = oracle::random_world(rng, 1, 3, 3, 4, false);
      break;
    case 1:
      w = oracle::random_world(rng, 1, 2, 2 + i % 2, 6, false);
      break;
    default:
      w = oracle::random_world(rng, 2, 2, 2, 3, i % 4 == 2);
      break;
  }
  auto model = oracle::random_model(rng, w, 2);
  if (i % 4 == 3) model.discount = 0.9;
  auto set = prefs::parse(oracle::random_preferences(rng, w, i % 3, i % 2 == 0), w);
  return {model, set};
}

}  // namespace

TEST_SUITE("assess") {
  TEST_CASE("scoring constants") {
    // Two goals reached with five actions, no uncertainty.
    const World w({4, 1}, {{"d1", {0, 0}}}, {{"t1", {{3, 0}}}}, {{"a1", {1, 0}, {}}}, {}, 8,
                  {{GoalKind::photo, "t1"}, {GoalKind::visit, "a1"}});
    AssessmentModel m;
    m.world = w;
    const auto plan = plan_of(w, "t=0 d1:move(E)\nt=1 d1:move(E)\nt=2 d1:move(E)\nt=3 d1:photo(t1)\nt=4 d1:move(W)\n");
    CHECK(plan.action_count() == 5);
    CHECK(assess::expected_return(plan, m, {}).expected_return == 35.0);

    // One goal, the photo inside fog succeeds half the time; five actions.
    const World one({4, 1}, {{"d1", {0, 0}}}, {{"t1", {{3, 0}}}}, {}, {}, 8, {{GoalKind::photo, "t1"}});
    AssessmentModel fog;
    fog.world = one;
    OutcomeRule r;
    r.action = assess::ActionPattern::photo;
    r.cells = {{3, 0}};
    fog.rules = {r};
    const auto shot = plan_of(one, "t=0 d1:move(E)\nt=1 d1:move(E)\nt=2 d1:move(E)\nt=3 d1:photo(t1)\nt=4 d1:move(W)\n");
    const auto report = assess::expected_return(shot, fog, {});
    CHECK(report.expected_return == 5.0);
    CHECK(report.outcomes.size() == 2);
    CHECK(report.probability_mass() == 1.0);

    // A preserved ordering adds its weight on top of both preferences.
    const auto set = prefs::parse(
        "(preference near (sometime (agentloc d1 1 0)) 0)\n(preference far (sometime (agentloc d1 3 0)) 0)\n"
        "(ordering near far)",
        w);
    CHECK(assess::expected_return(plan, m, set).expected_return == 45.0);
    const auto reversed = prefs::parse(
        "(preference near (sometime (agentloc d1 1 0)) 0)\n(preference far (sometime (agentloc d1 3 0)) 0)\n"
        "(ordering far near)",
        w);
    CHECK(assess::expected_return(plan, m, reversed).expected_return == 35.0);
  }

  TEST_CASE("optimal return matches brute-force expectimax") {
    std::mt19937 rng(31337);
    int instances = 0;
    for (int i = 0; i < 16; ++i) {
      const auto inst = random_stochastic(rng, i);
      CAPTURE(i);
      const int h = inst.model.world.horizon();
      const auto opt = assess::optimal_return(inst.model, inst.set);
      const double brute = oracle::optimal_return(inst.model, inst.set, h);
      CHECK(std::fabs(opt.value - brute) <= tolerance);
      const auto witness = assess::expected_return(opt.witness, inst.model, inst.set);
      CHECK(std::fabs(witness.expected_return - opt.witness_return) <= tolerance);
      CHECK(witness.expected_return <= opt.value + tolerance);
      ++instances;
    }
    CHECK(instances >= 10);
  }

  TEST_CASE("expected return matches outcome enumeration and conserves probability") {
    std::mt19937 rng(8080);
    for (int i = 0; i < 60; ++i) {
      const auto inst = random_stochastic(rng, i);
      const auto plan = random_plan(rng, inst.model.world);
      double mass = 0.0;
      const double expected = oracle::expected_return(plan, inst.model, inst.set, &mass);
      const auto report = assess::expected_return(plan, inst.model, inst.set);
      CAPTURE(i);
      CHECK(std::fabs(report.expected_return - expected) <= tolerance);
      CHECK(std::fabs(report.probability_mass() - 1.0) <= tolerance);
      CHECK(std::fabs(mass - 1.0) <= tolerance);
      const double parts = report.goal_total + report.preference_total + report.ordering_total - report.cost_total;
      CHECK(std::fabs(parts - report.expected_return) <= tolerance);
    }
  }

  TEST_CASE("closed-loop optimum dominates every fixed plan") {
    std::mt19937 rng(2718);
    for (int i = 0; i < 12; ++i) {
      const auto inst = random_stochastic(rng, i);
      const double opt = assess::optimal_return(inst.model, inst.set).value;
      for (int k = 0; k < 25; ++k) {
        const auto plan = random_plan(rng, inst.model.world);
        CHECK(assess::expected_return(plan, inst.model, inst.set).expected_return <= opt + tolerance);
      }
    }
  }

  TEST_CASE("returns degrade as the fog thickens") {
    auto s = scenarios::bundled("t1");
    const auto plan = planner::plan_with_preferences(s.world(), s.operator_preferences);
    double previous = INFINITY;
    for (double p = 1.0; p >= -1e-12; p -= 0.125) {
      s.model.default_probability = std::max(p, 0.0);
      const double v = assess::expected_return(plan, s.model, s.operator_preferences).expected_return;
      CHECK(v <= previous + tolerance);
      previous = v;
    }
  }

  TEST_CASE("without rules the return is the deterministic score") {
    for (auto s : scenarios::bundled()) {
      s.model.rules.clear();
      s.model.hypotheses.clear();
      const auto plan = planner::plan_with_preferences(s.world(), s.operator_preferences);
      const auto report = assess::expected_return(plan, s.model, s.operator_preferences);
      CHECK(report.outcomes.size() == 1);
      CHECK(report.expected_return == plan.score);
    }
  }

  TEST_CASE("discounting credits goals when achieved and costs when paid") {
    const World w({2, 1}, {{"d1", {0, 0}}}, {{"t1", {{1, 0}}}}, {}, {}, 4, {{GoalKind::photo, "t1"}});
    AssessmentModel m;
    m.world = w;
    m.discount = 0.5;
    const auto plan = plan_of(w, "t=0 d1:move(E)\nt=1 d1:photo(t1)\n");
    // Photo lands at t=2: 20 * 0.25; costs 1 at t=0 and 0.5 at t=1.
    CHECK(assess::expected_return(plan, m, {}).expected_return == 3.5);
    const auto set = prefs::parse("(preference there (at-end (agentloc d1 1 0)) 8)", w);
    CHECK(assess::expected_return(plan, m, set).expected_return == 3.5 + 8 * 0.25);
    m.discount = 1.0;
    CHECK(assess::expected_return(plan, m, {}).expected_return == 18.0);
  }

  TEST_CASE("failure modes") {
    const World w({3, 1}, {{"d1", {0, 0}}}, {{"t1", {{2, 0}}}}, {}, {}, 6, {{GoalKind::photo, "t1"}});
    const auto plan = plan_of(w, "t=0 d1:move(E)\nt=1 d1:move(E)\nt=2 d1:photo(t1)\n");
    AssessmentModel m;
    m.world = w;
    OutcomeRule first_move;
    first_move.action = assess::ActionPattern::move;
    first_move.cells = {{0, 0}};
    first_move.probability = 0.0;

    first_move.on_failure = FailureMode::action_wasted;
    m.rules = {first_move};
    // Neither move leaves (0,0), so the photo is void but still paid for.
    auto r = assess::expected_return(plan, m, {});
    CHECK(r.expected_return == -3.0);
    CHECK(r.outcomes.front().actions == 3);

    first_move.on_failure = FailureMode::no_effect;
    m.rules = {first_move};
    // Both failed moves are refunded; the void photo is still paid for.
    CHECK(assess::expected_return(plan, m, {}).expected_return == -1.0);

    first_move.on_failure = FailureMode::uav_lost;
    m.rules = {first_move};
    r = assess::expected_return(plan, m, {});
    CHECK(r.expected_return == -1.0);
    CHECK(r.outcomes.front().lost == std::vector<std::string>{"d1"});
  }

  TEST_CASE("hypotheses are drawn once and then stay fixed") {
    const World w({3, 1}, {{"d1", {1, 0}}}, {{"t1", {{0, 0}}}, {"t2", {{2, 0}}}}, {}, {}, 6,
                  {{GoalKind::photo, "t1"}, {GoalKind::photo, "t2"}});
    AssessmentModel m;
    m.world = w;
    m.hypotheses = {{"side", {{"west", 0.25}, {"east", 0.75}}}};
    OutcomeRule west;
    west.action = assess::ActionPattern::photo;
    west.target = "t1";
    west.when = std::make_pair(std::string("side"), std::string("west"));
    OutcomeRule east = west;
    east.target = "t2";
    east.when = std::make_pair(std::string("side"), std::string("east"));
    m.rules = {west, east};
    const auto plan = plan_of(w, "t=0 d1:move(W)\nt=1 d1:photo(t1)\nt=2 d1:move(E)\nt=3 d1:move(E)\nt=4 d1:photo(t2)\n");
    const auto r = assess::expected_return(plan, m, {});
    // Exactly one photo succeeds in every world: 20 - 5.
    CHECK(r.outcomes.size() == 2);
    CHECK(std::fabs(r.expected_return - 15.0) <= tolerance);
    CHECK(std::fabs(oracle::optimal_return(m, {}, 6) - assess::optimal_return(m, {}).value) <= tolerance);
  }

  TEST_CASE("model validation and bounds") {
    const auto& t6 = scenarios::bundled("t6");
    AssessmentModel m = t6.model;
    m.discount = 0.0;
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m = t6.model;
    m.hypotheses[0].values[0].second = 0.9;
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m = t6.model;
    m.rules[0].uav = "d9";
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m = t6.model;
    m.rules[0].probability = 0.5;
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m = t6.model;
    m.state_bound = 100;
    CHECK_THROWS_AS(assess::optimal_return(m, t6.operator_preferences), BoundExceededError);
    auto t1 = scenarios::bundled("t1").model;
    t1.leaf_bound = 1;
    const auto plan = planner::plan_with_preferences(t1.world, {});
    CHECK_THROWS_AS(assess::expected_return(plan, t1, {}), BoundExceededError);
  }

  TEST_CASE("improvement and optimality percentages") {
    CHECK(std::fabs(assess::improvement(72.0, 80.9) - 12.3611111111) < 1e-6);
    CHECK(std::fabs(assess::optimality(83.0, 80.9) - (-2.5301204819)) < 1e-6);
    CHECK(assess::round1(assess::improvement(72.0, 80.9)) == 12.4);
    CHECK(assess::round1(assess::optimality(83.0, 80.9)) == -2.5);
    CHECK(assess::improvement(50.0, 50.0) == 0.0);
    CHECK_THROWS_AS(assess::improvement(0.0, 1.0), PreconditionError);
    CHECK_THROWS_AS(assess::optimality(0.0, 1.0), PreconditionError);
    CHECK(assess::round1(0.25) == 0.3);
    CHECK(assess::round1(-0.25) == -0.3);
    CHECK(assess::round1(16.07) == 16.1);
  }
}
