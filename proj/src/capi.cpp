#include "resplan/resplan.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "resplan/error.hpp"
#include "resplan/report.hpp"

using namespace resplan;

struct rp_scenario {
  std::shared_ptr<const scenarios::Scenario> scenario;
};

struct rp_prefs {
  std::shared_ptr<const scenarios::Scenario> scenario;
  prefs::PreferenceSet set;
};

struct rp_plan {
  std::shared_ptr<const scenarios::Scenario> scenario;
  prefs::PreferenceSet planned_for;
  planner::Plan plan;
};

struct rp_comparison {
  std::shared_ptr<const scenarios::Scenario> scenario;
  report::Comparison comparison;
};

namespace {

struct LastError {
  std::string message;
  int line = 0;
  int column = 0;
};

thread_local LastError last_error;

rp_status fail(rp_status status, const std::string& message, SourceLocation where = {}) {
  last_error = {message, where.line, where.column};
  return status;
}

template <typename F>
rp_status guard(F&& body) {
  try {
    last_error = {};
    body();
    return RP_OK;
  } catch (const ParseError& e) {
    return fail(RP_ERR_PARSE, e.message(), e.where());
  } catch (const ValidationError& e) {
    return fail(RP_ERR_VALIDATION, e.message(), e.has_location() ? e.where() : SourceLocation{});
  } catch (const UnsolvableError& e) {
    return fail(RP_ERR_UNSOLVABLE, e.what());
  } catch (const BudgetExceededError& e) {
    return fail(RP_ERR_BUDGET, e.what());
  } catch (const BoundExceededError& e) {
    return fail(RP_ERR_BOUND, e.what());
  } catch (const PreconditionError& e) {
    return fail(RP_ERR_PRECONDITION, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(RP_ERR_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(RP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(RP_ERR_INTERNAL, e.what());
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string read_file(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(std::string("cannot read '") + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

planner::SearchConfig config_of(const rp_plan_options* options) {
  planner::SearchConfig config;
  if (options) {
    if (options->horizon < 0 || options->horizon > 120) throw std::invalid_argument("horizon must be in 0..120");
    config.horizon = options->horizon;
    if (options->node_budget) config.node_budget = options->node_budget;
  }
  return config;
}

/// Optimal results keyed by rendered scenario text.
const assess::OptimalResult& optimal_for(const scenarios::Scenario& s) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<std::once_flag>> flags;
  static std::map<std::string, assess::OptimalResult> results;
  const std::string key = scenarios::render(s);
  std::shared_ptr<std::once_flag> flag;
  {
    std::lock_guard lock(mutex);
    auto& slot = flags[key];
    if (!slot) slot = std::make_shared<std::once_flag>();
    flag = slot;
  }
  std::call_once(*flag, [&] {
    auto r = assess::optimal_return(s.model, s.operator_preferences);
    std::lock_guard lock(mutex);
    results.emplace(key, std::move(r));
  });
  std::lock_guard lock(mutex);
  return results.at(key);
}

#define RP_REQUIRE(cond)                                                    \
  do {                                                                      \
    if (!(cond)) return fail(RP_ERR_ARGUMENT, "invalid argument: " #cond); \
  } while (0)

}  // namespace

extern "C" {

const char* rp_format_version(void) { return report::api_format_version; }
const char* rp_last_error(void) { return last_error.message.c_str(); }
int rp_last_error_line(void) { return last_error.line; }
int rp_last_error_column(void) { return last_error.column; }
void rp_string_free(char* s) { std::free(s); }

rp_status rp_scenario_names_json(char** out) {
  RP_REQUIRE(out);
  return guard([&] { *out = duplicate(nlohmann::json(scenarios::bundled_names()).dump()); });
}

rp_status rp_scenario_bundled(const char* name, rp_scenario** out) {
  RP_REQUIRE(name && out);
  return guard([&] {
    *out = new rp_scenario{std::make_shared<const scenarios::Scenario>(scenarios::bundled(name))};
  });
}

rp_status rp_scenario_load(const char* path, rp_scenario** out) {
  RP_REQUIRE(path && out);
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    return fail(RP_ERR_IO, e.what());
  }
  return guard([&] {
    auto s = scenarios::parse(text, std::filesystem::path(path).stem().string());
    *out = new rp_scenario{std::make_shared<const scenarios::Scenario>(std::move(s))};
  });
}

rp_status rp_scenario_parse(const char* text, rp_scenario** out) {
  RP_REQUIRE(text && out);
  return guard([&] { *out = new rp_scenario{std::make_shared<const scenarios::Scenario>(scenarios::parse(text))}; });
}

rp_status rp_scenario_render(const rp_scenario* s, char** out) {
  RP_REQUIRE(s && out);
  return guard([&] { *out = duplicate(scenarios::render(*s->scenario)); });
}

rp_status rp_scenario_json(const rp_scenario* s, char** out) {
  RP_REQUIRE(s && out);
  return guard([&] { *out = duplicate(report::to_json(*s->scenario).dump()); });
}

void rp_scenario_free(rp_scenario* s) { delete s; }

rp_status rp_prefs_parse(const rp_scenario* s, const char* text, rp_prefs** out) {
  RP_REQUIRE(s && text && out);
  return guard([&] {
    auto set = prefs::parse(text, s->scenario->world(), s->scenario->parse_options());
    *out = new rp_prefs{s->scenario, std::move(set)};
  });
}

rp_status rp_prefs_load(const rp_scenario* s, const char* path, rp_prefs** out) {
  RP_REQUIRE(s && path && out);
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    return fail(RP_ERR_IO, e.what());
  }
  return rp_prefs_parse(s, text.c_str(), out);
}

rp_status rp_prefs_reference(const rp_scenario* s, rp_prefs** out) {
  RP_REQUIRE(s && out);
  return guard([&] { *out = new rp_prefs{s->scenario, s->scenario->reference_constraints}; });
}

rp_status rp_prefs_render(const rp_prefs* p, char** out) {
  RP_REQUIRE(p && out);
  return guard([&] { *out = duplicate(prefs::render(p->set, p->scenario->parse_options())); });
}

size_t rp_prefs_count(const rp_prefs* p) { return p ? p->set.preferences.size() : 0; }

void rp_prefs_free(rp_prefs* p) { delete p; }

rp_status rp_plan_baseline(const rp_scenario* s, const rp_plan_options* options, rp_plan** out) {
  RP_REQUIRE(s && out);
  return guard([&] {
    auto config = config_of(options);
    auto plan = planner::plan_baseline(s->scenario->world(), config);
    *out = new rp_plan{s->scenario, {}, std::move(plan)};
  });
}

rp_status rp_plan_with_constraints(const rp_scenario* s, const rp_prefs* constraints, const rp_plan_options* options,
                                   rp_plan** out) {
  RP_REQUIRE(s && out);
  RP_REQUIRE(!constraints || constraints->scenario == s->scenario ||
             constraints->scenario->world() == s->scenario->world());
  return guard([&] {
    auto config = config_of(options);
    auto set = constraints ? prefs::merge(s->scenario->operator_preferences, constraints->set)
                           : s->scenario->operator_preferences;
    auto plan = planner::plan_with_preferences(s->scenario->world(), set, config);
    plan.provenance = constraints && !constraints->set.empty() ? planner::Provenance::constrained
                                                                : planner::Provenance::baseline;
    *out = new rp_plan{s->scenario, std::move(set), std::move(plan)};
  });
}

rp_status rp_plan_parse(const rp_scenario* s, const char* text, rp_plan** out) {
  RP_REQUIRE(s && text && out);
  return guard([&] {
    auto plan = planner::parse_plan(text, s->scenario->world());
    plan.score = planner::deterministic_score(plan, s->scenario->world(), s->scenario->operator_preferences);
    *out = new rp_plan{s->scenario, s->scenario->operator_preferences, std::move(plan)};
  });
}

rp_status rp_plan_text(const rp_plan* p, char** out) {
  RP_REQUIRE(p && out);
  return guard([&] { *out = duplicate(planner::render_plan(p->plan, p->scenario->world())); });
}

rp_status rp_plan_json(const rp_plan* p, char** out) {
  RP_REQUIRE(p && out);
  return guard([&] {
    const auto& s = *p->scenario;
    auto doc = report::to_json(p->plan, s.world());
    doc["explain"] = report::to_json(planner::explain(p->plan, s.world(), p->planned_for));
    doc["return"] = report::to_json(assess::expected_return(p->plan, s.model, s.operator_preferences));
    doc["format_version"] = report::api_format_version;
    *out = duplicate(doc.dump());
  });
}

double rp_plan_score(const rp_plan* p) { return p ? p->plan.score : 0.0; }
int rp_plan_length(const rp_plan* p) { return p ? static_cast<int>(p->plan.actions.size()) : 0; }
void rp_plan_free(rp_plan* p) { delete p; }

rp_status rp_compare(const rp_scenario* s, const rp_prefs* constraints, const rp_plan_options* options,
                     rp_comparison** out) {
  RP_REQUIRE(s && out);
  RP_REQUIRE(!constraints || constraints->scenario == s->scenario ||
             constraints->scenario->world() == s->scenario->world());
  return guard([&] {
    auto config = config_of(options);
    const auto& optimal = optimal_for(*s->scenario);
    auto c = report::compare(*s->scenario, constraints ? constraints->set : prefs::PreferenceSet{}, optimal, config);
    *out = new rp_comparison{s->scenario, std::move(c)};
  });
}

rp_status rp_comparison_json(const rp_comparison* c, char** out) {
  RP_REQUIRE(c && out);
  return guard([&] {
    auto doc = report::to_json(c->comparison, *c->scenario);
    doc["format_version"] = report::api_format_version;
    *out = duplicate(doc.dump());
  });
}

double rp_comparison_improvement(const rp_comparison* c) { return c ? c->comparison.improvement : 0.0; }
double rp_comparison_optimality(const rp_comparison* c) { return c ? c->comparison.optimality : 0.0; }

rp_status rp_comparison_table(const rp_comparison* const* rows, size_t count, int average, char** out) {
  RP_REQUIRE(out && (rows || count == 0));
  return guard([&] {
    std::vector<report::Comparison> list;
    for (size_t i = 0; i < count; ++i) {
      if (!rows[i]) throw std::invalid_argument("null comparison");
      list.push_back(rows[i]->comparison);
    }
    *out = duplicate(report::table(list, average != 0));
  });
}

void rp_comparison_free(rp_comparison* c) { delete c; }

}  // extern "C"
