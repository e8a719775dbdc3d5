// Command-line front end. Talks to the library through the C API only.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "resplan/resplan.h"
#include "server.hpp"

namespace {

using nlohmann::json;

/// Failure already reported by the library; carries the process exit code.
struct Failure {
  int code;
};

int exit_code(rp_status s) {
  switch (s) {
    case RP_OK:
      return 0;
    case RP_ERR_UNSOLVABLE:
      return 2;
    case RP_ERR_BUDGET:
      return 3;
    case RP_ERR_PARSE:
    case RP_ERR_VALIDATION:
    case RP_ERR_IO:
    case RP_ERR_ARGUMENT:
      return 1;
    default:
      return 4;
  }
}

void check(rp_status s, const std::string& context = {}) {
  if (s == RP_OK) return;
  std::string where = context;
  if (rp_last_error_line() > 0) {
    where += (where.empty() ? "" : ":") + std::to_string(rp_last_error_line()) + ":" +
             std::to_string(rp_last_error_column());
  }
  std::cerr << "error: " << (where.empty() ? "" : where + ": ") << rp_last_error() << "\n";
  throw Failure{exit_code(s)};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  rp_string_free(s);
  return out;
}

struct ScenarioDeleter {
  void operator()(rp_scenario* s) const { rp_scenario_free(s); }
};
struct PrefsDeleter {
  void operator()(rp_prefs* p) const { rp_prefs_free(p); }
};
struct PlanDeleter {
  void operator()(rp_plan* p) const { rp_plan_free(p); }
};
struct ComparisonDeleter {
  void operator()(rp_comparison* c) const { rp_comparison_free(c); }
};
using ScenarioPtr = std::unique_ptr<rp_scenario, ScenarioDeleter>;
using PrefsPtr = std::unique_ptr<rp_prefs, PrefsDeleter>;
using PlanPtr = std::unique_ptr<rp_plan, PlanDeleter>;
using ComparisonPtr = std::unique_ptr<rp_comparison, ComparisonDeleter>;

std::vector<std::string> bundled_names() {
  char* raw = nullptr;
  check(rp_scenario_names_json(&raw));
  return json::parse(take(raw)).get<std::vector<std::string>>();
}

/// A bundled scenario name, or else a path to a scenario file.
ScenarioPtr open_scenario(const std::string& arg) {
  rp_scenario* s = nullptr;
  for (const auto& name : bundled_names()) {
    if (name == arg) {
      check(rp_scenario_bundled(arg.c_str(), &s));
      return ScenarioPtr(s);
    }
  }
  if (!std::filesystem::exists(arg)) {
    std::cerr << "error: '" << arg << "' is neither a bundled scenario nor a file\n";
    throw Failure{1};
  }
  check(rp_scenario_load(arg.c_str(), &s), arg);
  return ScenarioPtr(s);
}

PrefsPtr open_constraints(const rp_scenario* s, const std::string& path) {
  rp_prefs* p = nullptr;
  check(rp_prefs_load(s, path.c_str(), &p), path);
  return PrefsPtr(p);
}

rp_plan_options options_of(int horizon, unsigned long long budget) { return {horizon, budget}; }

void print_explain(const json& e, std::ostream& out) {
  out << "goals achieved: " << e["goals_achieved"].size() << " (";
  bool first = true;
  for (const auto& g : e["goals_achieved"]) {
    out << (first ? "" : " ") << g.get<std::string>();
    first = false;
  }
  out << ")\n";
  for (const auto& g : e["goals_missed"]) out << "goal missed: " << g.get<std::string>() << "\n";
  for (const auto& p : e["preferences"]) {
    out << "preference " << p["name"].get<std::string>() << " [" << p["kind"].get<std::string>() << "]: ";
    if (p["satisfied"].get<bool>()) {
      out << "satisfied";
      if (!p["first_satisfied"].is_null()) out << " at t=" << p["first_satisfied"].get<int>();
      out << " (+" << p["reward"].get<double>() << ")\n";
    } else {
      out << "violated\n";
    }
  }
  for (const auto& o : e["orderings"]) {
    out << "ordering " << o["earlier"].get<std::string>() << " < " << o["later"].get<std::string>() << ": "
        << (o["preserved"].get<bool>() ? "preserved" : "broken") << "\n";
  }
  out << "actions: " << e["actions"].get<int>() << "\n";
  out << "deterministic score: " << e["total"].get<double>() << "\n";
}

int cmd_scenarios() {
  for (const auto& name : bundled_names()) {
    ScenarioPtr s = open_scenario(name);
    char* raw = nullptr;
    check(rp_scenario_json(s.get(), &raw));
    const auto doc = json::parse(take(raw));
    std::cout << name << "\t" << doc["title"].get<std::string>() << "\n";
  }
  return 0;
}

int cmd_plan(const std::string& scenario, const std::string& constraints, int horizon, unsigned long long budget,
             const std::string& out_path, bool as_json) {
  ScenarioPtr s = open_scenario(scenario);
  PrefsPtr prefs;
  if (!constraints.empty()) prefs = open_constraints(s.get(), constraints);
  const auto options = options_of(horizon, budget);
  rp_plan* raw_plan = nullptr;
  check(rp_plan_with_constraints(s.get(), prefs.get(), &options, &raw_plan));
  PlanPtr plan(raw_plan);
  char* raw = nullptr;
  check(rp_plan_text(plan.get(), &raw));
  const std::string text = take(raw);
  check(rp_plan_json(plan.get(), &raw));
  const auto doc = json::parse(take(raw));
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return 1;
    }
    out << text;
  }
  if (as_json) {
    std::cout << doc.dump(2) << "\n";
    return 0;
  }
  if (doc["budget_exhausted"].get<bool>()) std::cerr << "warning: node budget exhausted; plan may be suboptimal\n";
  std::cout << text;
  std::cout << "\n";
  print_explain(doc["explain"], std::cout);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", doc["return"]["expected_return_rounded"].get<double>());
  std::cout << "expected return: " << buf << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& scenarios, const std::string& constraints, bool reference, bool all,
                int horizon, unsigned long long budget, bool as_json) {
  std::vector<std::string> names = scenarios;
  if (all) {
    if (!names.empty() || !constraints.empty()) {
      std::cerr << "error: --all takes no scenario or constraint file\n";
      return 1;
    }
    names = bundled_names();
    reference = true;
  }
  if (names.empty()) {
    std::cerr << "error: compare needs a scenario (or --all)\n";
    return 1;
  }
  if (reference && !constraints.empty()) {
    std::cerr << "error: --reference and --constraints are exclusive\n";
    return 1;
  }
  const auto options = options_of(horizon, budget);
  std::vector<ScenarioPtr> keep;
  std::vector<ComparisonPtr> rows;
  for (const auto& name : names) {
    keep.push_back(open_scenario(name));
    rp_scenario* s = keep.back().get();
    PrefsPtr prefs;
    if (reference) {
      rp_prefs* p = nullptr;
      check(rp_prefs_reference(s, &p));
      prefs.reset(p);
    } else if (!constraints.empty()) {
      prefs = open_constraints(s, constraints);
    }
    rp_comparison* c = nullptr;
    check(rp_compare(s, prefs.get(), &options, &c));
    rows.emplace_back(c);
  }
  std::vector<const rp_comparison*> ptrs;
  for (const auto& r : rows) ptrs.push_back(r.get());
  char* raw = nullptr;
  check(rp_comparison_table(ptrs.data(), ptrs.size(), rows.size() > 1 ? 1 : 0, &raw));
  const std::string table = take(raw);
  if (as_json) {
    json doc = {{"format_version", rp_format_version()}, {"comparisons", json::array()}, {"table", table}};
    for (const auto& r : rows) {
      check(rp_comparison_json(r.get(), &raw));
      auto c = json::parse(take(raw));
      c.erase("format_version");
      doc["comparisons"].push_back(c);
    }
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << table;
  }
  return 0;
}

int cmd_serve(const std::string& host, int port, const std::string& root) {
  resplan::service::ServerOptions options;
  options.host = host;
  options.port = port;
  options.root = root.empty() ? resplan::service::session_root_from_env() : std::filesystem::path(root);
  resplan::service::Server server(options);
  const int bound = server.bind();
  if (bound < 0) {
    std::cerr << "error: cannot bind " << host << ":" << port << "\n";
    return 1;
  }
  std::cout << "listening on http://" << host << ":" << bound << " (sessions in " << options.root.string() << ")"
            << std::endl;
  server.listen();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resilient mission planning with operator constraints"};
  app.require_subcommand(1);

  app.add_subcommand("scenarios", "List bundled scenarios");

  std::string scenario;
  std::string constraints;
  std::string out_path;
  int horizon = 0;
  unsigned long long budget = 0;
  bool as_json = false;

  auto* plan = app.add_subcommand("plan", "Plan a scenario, optionally under a constraint file");
  plan->add_option("scenario", scenario, "Bundled scenario name or scenario file")->required();
  plan->add_option("--constraints", constraints, "Constraint file");
  plan->add_option("--horizon", horizon, "Horizon override (0: scenario horizon)")->check(CLI::NonNegativeNumber);
  plan->add_option("--budget", budget, "Search node budget (0: default)");
  plan->add_option("--out", out_path, "Also write the plan text here");
  plan->add_flag("--json", as_json, "Print the structured plan document");

  std::vector<std::string> compare_scenarios;
  bool reference = false;
  bool all = false;
  auto* compare = app.add_subcommand("compare", "Base / optimal / constrained comparison table");
  compare->add_option("scenario", compare_scenarios, "Bundled scenario names or scenario files");
  compare->add_option("--constraints", constraints, "Constraint file");
  compare->add_flag("--reference", reference, "Use the scenario's reference constraints");
  compare->add_flag("--all", all, "Every bundled scenario with its reference constraints");
  compare->add_option("--horizon", horizon, "Horizon override (0: scenario horizon)")->check(CLI::NonNegativeNumber);
  compare->add_option("--budget", budget, "Search node budget (0: default)");
  compare->add_flag("--json", as_json, "Print structured comparison documents");

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string root;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Listen port (0: any free port)")->check(CLI::Range(0, 65535));
  serve->add_option("--root", root, "Session storage root (default: $RESPLAN_SESSION_ROOT or ./sessions)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand("scenarios")) return cmd_scenarios();
    if (app.got_subcommand(plan)) return cmd_plan(scenario, constraints, horizon, budget, out_path, as_json);
    if (app.got_subcommand(compare)) {
      return cmd_compare(compare_scenarios, constraints, reference, all, horizon, budget, as_json);
    }
    if (app.got_subcommand(serve)) return cmd_serve(host, port, root);
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
