// One PASS/FAIL line per primary acceptance criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <regex>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "resplan/error.hpp"
#include "resplan/report.hpp"
#include "resplan/scenarios.hpp"

using namespace resplan;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and limits.
constexpr double kValueTolerance = 1e-9;
constexpr double kMassTolerance = 1e-9;
constexpr double kLtlSeconds = 60.0;
constexpr double kPlannerSeconds = 300.0;
constexpr double kScenarioSeconds = 600.0;
constexpr int kPlannerInstances = 25;
constexpr int kAssessInstances = 10;
constexpr int kRandomLtlCases = 10000;
constexpr int kGeneratedSets = 1000;

int failures = 0;

void report_line(const char* name, bool ok, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

void ltl_equivalence() {
  const auto start = Clock::now();
  long cases = 0;
  long bad = 0;
  auto check = [&](const ltl::Formula& f, const ltl::Automaton& a, const ltl::Trace& t) {
    const bool expected = oracle::holds(f, t, 0);
    const bool by_eval = t.empty() ? expected : ltl::evaluate(f, t);
    if (by_eval != expected || ltl::accepts_by_progression(f, t) != expected || a.accepts(t) != expected) ++bad;
    ++cases;
  };
  const auto traces = oracle::all_traces({"p", "q"}, 0, 5);
  for (const auto& f : oracle::battery()) {
    const auto a = ltl::Automaton::compile(f);
    for (const auto& t : traces) check(f, a, t);
  }
  std::mt19937 rng(1);
  const std::vector<std::string> atoms{"a", "b", "c"};
  for (int i = 0; i < kRandomLtlCases; ++i) {
    const auto f = oracle::random_formula(rng, 4, atoms);
    check(f, ltl::Automaton::compile(f), oracle::random_trace(rng, atoms, 6));
  }
  const double secs = seconds_since(start);
  report_line("ltl-triple-equivalence", bad == 0 && secs < kLtlSeconds,
              std::to_string(cases) + " cases, " + std::to_string(bad) + " disagreements, " + fmt("%.1f s", secs));
}

void planner_exactness() {
  const auto start = Clock::now();
  std::mt19937 rng(7);
  int matched = 0;
  int mismatched = 0;
  for (int i = 0; matched + mismatched < kPlannerInstances + 5 && i < 200; ++i) {
    const bool two = i % 3 == 2;
    const int side = two ? 3 : 3 + i % 2;
    const int horizon = two ? 3 + i % 2 : 5 + i % 4;
    const auto w = oracle::random_world(rng, two ? 2 : 1, side, side, horizon, i % 5 == 4);
    const auto set = prefs::parse(oracle::random_preferences(rng, w, i % 4, i % 2 == 1), w);
    const auto best = oracle::enumerate(w, set, w.horizon());
    if (!best.found) continue;
    const auto plan = planner::plan_with_preferences(w, set);
    (plan.score == best.best && !plan.budget_exhausted ? matched : mismatched)++;
  }
  const double secs = seconds_since(start);
  report_line("planner-exactness", mismatched == 0 && matched >= kPlannerInstances && secs < kPlannerSeconds,
              std::to_string(matched) + " instances matched, " + std::to_string(mismatched) + " mismatched, " +
                  fmt("%.1f s", secs));
}

std::vector<double> masses;

assess::ReturnReport tracked(const planner::Plan& p, const assess::AssessmentModel& m, const prefs::PreferenceSet& s) {
  auto r = assess::expected_return(p, m, s);
  masses.push_back(r.probability_mass());
  return r;
}

void assessment_exactness() {
  std::mt19937 rng(11);
  int matched = 0;
  double worst = 0.0;
  for (int i = 0; i < kAssessInstances + 4; ++i) {
    domain::World w = i % 3 == 0   ? oracle::random_world(rng, 1, 3, 3, 4, false)
                      : i % 3 == 1 ? oracle::random_world(rng, 1, 2, 3, 6, false)
                                   : oracle::random_world(rng, 2, 2, 2, 3, i % 4 == 2);
    auto m = oracle::random_model(rng, w, 2);
    if (i % 4 == 3) m.discount = 0.9;
    const auto set = prefs::parse(oracle::random_preferences(rng, w, i % 3, i % 2 == 0), w);
    const auto opt = assess::optimal_return(m, set);
    const double brute = oracle::optimal_return(m, set, w.horizon());
    const double err = std::fabs(opt.value - brute);
    worst = std::max(worst, err);
    if (err <= kValueTolerance) ++matched;
    tracked(opt.witness, m, set);
  }
  for (const auto& s : scenarios::bundled()) {
    tracked(planner::plan_with_preferences(s.world(), s.operator_preferences), s.model, s.operator_preferences);
  }
  double mass_err = 0.0;
  for (double m : masses) mass_err = std::max(mass_err, std::fabs(m - 1.0));
  report_line("assessment-exactness",
              matched == kAssessInstances + 4 && mass_err <= kMassTolerance,
              std::to_string(matched) + " instances within 1e-9 (worst " + fmt("%.1e", worst) + "), " +
                  std::to_string(masses.size()) + " reports, max |mass-1| " + fmt("%.1e", mass_err));
}

void scoring_arithmetic() {
  using namespace domain;
  const World two({4, 1}, {{"d1", {0, 0}}}, {{"t1", {{3, 0}}}}, {{"a1", {1, 0}, {}}}, {}, 8,
                  {{GoalKind::photo, "t1"}, {GoalKind::visit, "a1"}});
  const std::string five = "t=0 d1:move(E)\nt=1 d1:move(E)\nt=2 d1:move(E)\nt=3 d1:photo(t1)\nt=4 d1:move(W)\n";
  assess::AssessmentModel m;
  m.world = two;
  const double deterministic = tracked(planner::parse_plan(five, two), m, {}).expected_return;

  const World one({4, 1}, {{"d1", {0, 0}}}, {{"t1", {{3, 0}}}}, {}, {}, 8, {{GoalKind::photo, "t1"}});
  assess::AssessmentModel fog;
  fog.world = one;
  assess::OutcomeRule r;
  r.action = assess::ActionPattern::photo;
  r.cells = {{3, 0}};
  r.probability = 0.5;
  fog.rules = {r};
  const double foggy = tracked(planner::parse_plan(five, one), fog, {}).expected_return;

  const auto ordered = prefs::parse(
      "(preference near (sometime (agentloc d1 1 0)) 0)\n(preference far (sometime (agentloc d1 3 0)) 0)\n"
      "(ordering near far)",
      two);
  const double with_ordering = tracked(planner::parse_plan(five, two), m, ordered).expected_return;
  report_line("scoring-arithmetic", deterministic == 35.0 && foggy == 5.0 && with_ordering - deterministic == 10.0,
              fmt("deterministic %.1f, fog %.1f, ordering +%.1f", deterministic, foggy, with_ordering - deterministic));
}

void directionality() {
  const auto start = Clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& s : scenarios::bundled()) {
    const auto c = report::compare(s, s.reference_constraints);
    const double base = c.base_return.expected_return;
    const double auto_ = c.constrained_return.expected_return;
    const double opt = c.optimal.value;
    const bool good = auto_ > base && auto_ <= opt + kValueTolerance;
    ok = ok && good;
    detail += s.name + fmt(" %.1f<%.1f<=%.1f ", base, auto_, opt);
  }
  const double secs = seconds_since(start);
  report_line("directionality", ok && secs < kScenarioSeconds, detail + fmt("(%.1f s)", secs));
}

void empty_identity() {
  int identical = 0;
  for (const auto& s : scenarios::bundled()) {
    const auto base = planner::plan_baseline(s.world());
    const auto empty = planner::plan_with_preferences(s.world(), {});
    if (base.actions == empty.actions && base.trace == empty.trace && base.score == empty.score) ++identical;
  }
  report_line("empty-constraints-identity", identical == 6, std::to_string(identical) + "/6 scenarios identical");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void round_trips() {
  int ok = 0;
  int total = 0;
  for (const auto& s : scenarios::bundled()) {
    total += 3;
    const auto text = scenarios::render(s);
    if (scenarios::parse(text) == s && scenarios::render(scenarios::parse(text)) == text) ++ok;
    const auto file = prefs::parse(slurp(std::string(RESPLAN_SCENARIO_DIR) + "/" + s.name + "-ref.prefs"), s.world(),
                                   s.parse_options());
    if (prefs::parse(prefs::render(file), s.world(), s.parse_options()) == file) ++ok;
    if (prefs::parse(prefs::render(s.operator_preferences), s.world(), s.parse_options()) == s.operator_preferences) {
      ++ok;
    }
  }
  std::mt19937 rng(3);
  for (int i = 0; i < kGeneratedSets; ++i) {
    ++total;
    const auto w = oracle::random_world(rng, 2, 4, 4, 6, i % 4 == 0);
    const auto set = prefs::parse(oracle::random_preferences(rng, w, 1 + i % 4, i % 2 == 0), w);
    if (prefs::parse(prefs::render(set), w) == set) ++ok;
  }
  report_line("format-round-trips", ok == total, std::to_string(ok) + "/" + std::to_string(total) + " round-trips");
}

void cli_compare() {
  const std::string command = std::string(RESPLAN_CLI_PATH) + " compare t1 --reference";
  std::string out;
  if (FILE* pipe = popen(command.c_str(), "r")) {
    char buf[512];
    while (std::fgets(buf, sizeof buf, pipe)) out += buf;
    const int status = pclose(pipe);
    if (status != 0) out += "(exit " + std::to_string(status) + ")";
  }
  const std::regex row(R"(^t1\s+(-?\d+\.\d)\s+(-?\d+\.\d)\s+(-?\d+\.\d)\s+(-?\d+\.\d)%\s+(-?\d+\.\d)%\s*$)");
  std::smatch m;
  bool ok = false;
  std::string detail = "no t1 row in: " + out;
  std::istringstream lines(out);
  for (std::string line; std::getline(lines, line);) {
    if (!std::regex_match(line, m, row)) continue;
    const double improvement = std::stod(m[4]);
    const double optimality = std::stod(m[5]);
    ok = improvement > 0.0 && optimality <= 0.0;
    detail = "Improvement " + m[4].str() + "%, Optimality " + m[5].str() + "%";
  }
  report_line("cli-compare-t1", ok, detail);
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> criteria = {
      {"ltl-triple-equivalence", ltl_equivalence},
      {"planner-exactness", planner_exactness},
      {"assessment-exactness", assessment_exactness},
      {"scoring-arithmetic", scoring_arithmetic},
      {"directionality", directionality},
      {"empty-constraints-identity", empty_identity},
      {"format-round-trips", round_trips},
      {"cli-compare-t1", cli_compare},
  };
  for (const auto& [name, run] : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      report_line(name, false, std::string("threw: ") + e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}
