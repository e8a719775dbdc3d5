#pragma once

// Comparison workflow and serializers shared by the CLI, the C API and the
// HTTP service.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "resplan/assess.hpp"
#include "resplan/planner.hpp"
#include "resplan/scenarios.hpp"

namespace resplan::report {

inline constexpr const char* api_format_version = "resplan-api v1";

/// Base, constrained and optimal plans for one scenario. Every return is
/// scored against the operator preferences only.
struct Comparison {
  std::string scenario;
  planner::Plan baseline;     // operator preferences
  planner::Plan constrained;  // operator preferences plus the submitted constraints
  assess::ReturnReport base_return;
  assess::ReturnReport constrained_return;
  planner::ExplainReport constrained_explain;  // against operator preferences plus constraints
  assess::OptimalResult optimal;
  double improvement = 0.0;  // unrounded percentages
  double optimality = 0.0;
};

/// Throws ValidationError when a submitted preference name collides with an
/// operator preference.
Comparison compare(const scenarios::Scenario& s, const prefs::PreferenceSet& constraints,
                   const planner::SearchConfig& config = {});

/// Same, reusing a previously computed optimal result for the scenario.
Comparison compare(const scenarios::Scenario& s, const prefs::PreferenceSet& constraints,
                   const assess::OptimalResult& optimal, const planner::SearchConfig& config = {});

/// Fixed-width table: Task / Base / Opt / Auto / Improvement / Optimality,
/// one decimal everywhere; with `average`, a trailing "Ave." row of mean
/// percentages.
std::string table(const std::vector<Comparison>& rows, bool average);

/// One decimal, never "-0.0".
std::string fixed1(double v);

nlohmann::json to_json(const scenarios::Scenario& s);
nlohmann::json to_json(const planner::Plan& p, const domain::World& w);
nlohmann::json to_json(const assess::ReturnReport& r);
nlohmann::json to_json(const planner::ExplainReport& r);
nlohmann::json to_json(const Comparison& c, const scenarios::Scenario& s);

}  // namespace resplan::report
