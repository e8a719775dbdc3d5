#include "server.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "resplan/resplan.h"

namespace resplan::service {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path session_root_from_env() {
  const char* root = std::getenv("RESPLAN_SESSION_ROOT");
  return root && *root ? fs::path(root) : fs::path("sessions");
}

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  rp_string_free(s);
  return out;
}

std::string now_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* status_kind(rp_status s) {
  switch (s) {
    case RP_OK:
      return "ok";
    case RP_ERR_PARSE:
      return "parse";
    case RP_ERR_VALIDATION:
      return "validation";
    case RP_ERR_UNSOLVABLE:
      return "unsolvable";
    case RP_ERR_BUDGET:
      return "budget";
    case RP_ERR_BOUND:
      return "bound";
    case RP_ERR_IO:
      return "io";
    case RP_ERR_ARGUMENT:
      return "argument";
    case RP_ERR_PRECONDITION:
      return "precondition";
    case RP_ERR_INTERNAL:
      return "internal";
  }
  return "internal";
}

/// Error document for the last failed C API call.
json api_error(rp_status s, int http_status) {
  json e = {{"status", http_status}, {"kind", status_kind(s)}, {"message", rp_last_error()}};
  if (rp_last_error_line() > 0) {
    e["line"] = rp_last_error_line();
    e["column"] = rp_last_error_column();
  }
  return e;
}

void write_file(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

struct ScenarioHandle {
  rp_scenario* handle = nullptr;
  ~ScenarioHandle() { rp_scenario_free(handle); }
};

struct Session {
  std::string id;
  std::string scenario;
  std::string created;
  std::vector<json> submissions;
  std::mutex mutex;  // guards submissions and last_error
  std::atomic<bool> busy{false};
  json last_error;
};

}  // namespace

struct Server::Impl {
  ServerOptions options;
  httplib::Server http;
  std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  int next_id = 1;
  std::map<std::string, std::shared_ptr<ScenarioHandle>> scenarios;
  std::mutex scenarios_mutex;
  std::mutex workers_mutex;
  std::condition_variable workers_done;
  int running = 0;
  std::vector<std::thread> workers;

  explicit Impl(ServerOptions o) : options(std::move(o)) {
    if (options.root.empty()) options.root = session_root_from_env();
    fs::create_directories(options.root);
    load_sessions();
    routes();
  }

  ~Impl() {
    for (auto& w : workers) {
      if (w.joinable()) w.join();
    }
  }

  // --- helpers -----------------------------------------------------------

  static void reply(httplib::Response& res, int status, json body) {
    body["format_version"] = rp_format_version();
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
    reply(res, status, {{"error", {{"status", status}, {"kind", kind}, {"message", message}}}});
  }

  std::shared_ptr<ScenarioHandle> scenario(const std::string& name) {
    std::lock_guard lock(scenarios_mutex);
    if (auto it = scenarios.find(name); it != scenarios.end()) return it->second;
    auto h = std::make_shared<ScenarioHandle>();
    if (rp_scenario_bundled(name.c_str(), &h->handle) != RP_OK) return nullptr;
    scenarios.emplace(name, h);
    return h;
  }

  std::shared_ptr<Session> session(const std::string& id) {
    std::lock_guard lock(sessions_mutex);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  fs::path session_dir(const Session& s) const { return options.root / s.id; }

  static std::string submission_file(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04zu.json", index);
    return buf;
  }

  json session_doc(Session& s) {
    std::lock_guard lock(s.mutex);
    return {{"id", s.id},
            {"scenario", s.scenario},
            {"created", s.created},
            {"state", s.busy ? "running" : "idle"},
            {"submissions", s.submissions}};
  }

  /// Reads sessions written by earlier runs; stored plans must re-validate.
  void load_sessions() {
    if (!fs::exists(options.root)) return;
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(options.root)) {
      if (entry.is_directory() && fs::exists(entry.path() / "session.json")) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
      try {
        auto meta = json::parse(read_file(dir / "session.json"));
        auto s = std::make_shared<Session>();
        s->id = meta.at("id").get<std::string>();
        s->scenario = meta.at("scenario").get<std::string>();
        s->created = meta.at("created").get<std::string>();
        auto handle = scenario(s->scenario);
        if (!handle) throw std::runtime_error("unknown scenario " + s->scenario);
        std::vector<fs::path> files;
        for (const auto& f : fs::directory_iterator(dir)) {
          const auto name = f.path().filename().string();
          if (name != "session.json" && f.path().extension() == ".json") files.push_back(f.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
          auto doc = json::parse(read_file(f));
          const auto text = doc.at("plan_text").get<std::string>();
          rp_plan* plan = nullptr;
          if (rp_plan_parse(handle->handle, text.c_str(), &plan) != RP_OK) {
            throw std::runtime_error(f.string() + ": stored plan no longer validates: " + rp_last_error());
          }
          rp_plan_free(plan);
          s->submissions.push_back(std::move(doc));
        }
        if (s->id.size() > 1 && s->id[0] == 's') next_id = std::max(next_id, std::atoi(s->id.c_str() + 1) + 1);
        sessions.emplace(s->id, s);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "skipping session %s: %s\n", dir.string().c_str(), e.what());
      }
    }
  }

  /// Plans and assesses one submission. Returns the HTTP status and document.
  std::pair<int, json> replan(Session& s, const std::string& text) {
    auto handle = scenario(s.scenario);
    if (!handle) return {500, {{"error", {{"status", 500}, {"kind", "internal"}, {"message", "scenario vanished"}}}}};
    rp_prefs* prefs = nullptr;
    rp_status st = rp_prefs_parse(handle->handle, text.c_str(), &prefs);
    if (st != RP_OK) return {422, {{"error", api_error(st, 422)}}};
    rp_comparison* cmp = nullptr;
    st = rp_compare(handle->handle, prefs, nullptr, &cmp);
    if (st != RP_OK) {
      rp_prefs_free(prefs);
      const int code = st == RP_ERR_INTERNAL ? 500 : 422;
      return {code, {{"error", api_error(st, code)}}};
    }
    char* raw = nullptr;
    rp_comparison_json(cmp, &raw);
    json comparison = json::parse(take(raw));
    rp_prefs_render(prefs, &raw);
    const std::string canonical = take(raw);
    rp_comparison_free(cmp);
    rp_prefs_free(prefs);
    comparison.erase("format_version");

    std::lock_guard lock(s.mutex);
    const std::size_t index = s.submissions.size() + 1;
    json doc = {{"index", index},
                {"submitted_at", now_iso()},
                {"constraints", text},
                {"constraints_canonical", canonical},
                {"plan_text", comparison["constrained"]["plan"]["text"]},
                {"improvement", comparison["improvement_rounded"]},
                {"optimality", comparison["optimality_rounded"]},
                {"comparison", comparison}};
    write_file(session_dir(s) / submission_file(index), doc.dump(2));
    s.submissions.push_back(doc);
    s.last_error = nullptr;
    return {200, {{"session", s.id}, {"submission", doc}}};
  }

  // --- routes ------------------------------------------------------------

  void routes() {
    http.set_payload_max_length(options.max_body);
    http.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

    http.Get("/scenarios", [this](const httplib::Request&, httplib::Response& res) {
      char* raw = nullptr;
      rp_scenario_names_json(&raw);
      json list = json::array();
      for (const auto& name : json::parse(take(raw))) {
        auto h = scenario(name.get<std::string>());
        if (!h) continue;
        rp_scenario_json(h->handle, &raw);
        auto doc = json::parse(take(raw));
        list.push_back({{"name", doc["name"]},
                        {"title", doc["title"]},
                        {"update", doc["update"]},
                        {"grid", doc["grid"]},
                        {"horizon", doc["horizon"]}});
      }
      reply(res, 200, {{"scenarios", list}});
    });

    http.Get(R"(/scenarios/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto h = scenario(req.matches[1]);
      if (!h) return error(res, 404, "not-found", "unknown scenario '" + std::string(req.matches[1]) + "'");
      char* raw = nullptr;
      rp_scenario_json(h->handle, &raw);
      json doc = {{"scenario", json::parse(take(raw))}};
      rp_plan* plan = nullptr;
      rp_status st = rp_plan_with_constraints(h->handle, nullptr, nullptr, &plan);
      if (st != RP_OK) return reply(res, 500, {{"error", api_error(st, 500)}});
      rp_plan_json(plan, &raw);
      rp_plan_free(plan);
      doc["baseline"] = json::parse(take(raw));
      doc["baseline"].erase("format_version");
      reply(res, 200, doc);
    });

    http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception&) {
        return error(res, 400, "bad-request", "expected a JSON body {\"scenario\": <name>}");
      }
      if (!body.is_object() || !body.contains("scenario") || !body["scenario"].is_string()) {
        return error(res, 400, "bad-request", "expected a JSON body {\"scenario\": <name>}");
      }
      const std::string name = body["scenario"];
      if (!scenario(name)) return error(res, 404, "not-found", "unknown scenario '" + name + "'");
      auto s = std::make_shared<Session>();
      s->scenario = name;
      s->created = now_iso();
      {
        std::lock_guard lock(sessions_mutex);
        char buf[32];
        std::snprintf(buf, sizeof buf, "s%04d", next_id++);
        s->id = buf;
        sessions.emplace(s->id, s);
      }
      fs::create_directories(session_dir(*s));
      write_file(session_dir(*s) / "session.json",
                 json{{"id", s->id}, {"scenario", s->scenario}, {"created", s->created}}.dump(2));
      reply(res, 201, session_doc(*s));
    });

    http.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req.matches[1]);
      if (!s) return error(res, 404, "not-found", "unknown session '" + std::string(req.matches[1]) + "'");
      reply(res, 200, session_doc(*s));
    });

    http.Get(R"(/sessions/([^/]+)/status)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req.matches[1]);
      if (!s) return error(res, 404, "not-found", "unknown session '" + std::string(req.matches[1]) + "'");
      std::lock_guard lock(s->mutex);
      reply(res, 200,
            {{"session", s->id},
             {"state", s->busy ? "running" : "idle"},
             {"submissions", s->submissions.size()},
             {"last_error", s->last_error}});
    });

    http.Post(R"(/sessions/([^/]+)/constraints)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req.matches[1]);
      if (!s) return error(res, 404, "not-found", "unknown session '" + std::string(req.matches[1]) + "'");
      std::string text = req.body;
      if (req.get_header_value("Content-Type").rfind("application/json", 0) == 0) {
        try {
          text = json::parse(req.body).at("constraints").get<std::string>();
        } catch (const json::exception&) {
          return error(res, 400, "bad-request", "expected a JSON body {\"constraints\": <text>}");
        }
      }
      bool expected = false;
      if (!s->busy.compare_exchange_strong(expected, true)) {
        return error(res, 409, "busy", "a replan is already running for session " + s->id);
      }
      if (req.has_param("async") && req.get_param_value("async") != "0") {
        std::lock_guard lock(workers_mutex);
        ++running;
        workers.emplace_back([this, s, text] {
          auto [status, doc] = run_guarded(*s, text);
          if (status != 200) {
            std::lock_guard lock(s->mutex);
            s->last_error = doc["error"];
          }
          s->busy = false;
          std::lock_guard done(workers_mutex);
          --running;
          workers_done.notify_all();
        });
        return reply(res, 202,
                     {{"session", s->id}, {"state", "running"}, {"status_url", "/sessions/" + s->id + "/status"}});
      }
      auto [status, doc] = run_guarded(*s, text);
      s->busy = false;
      reply(res, status, doc);
    });
  }

  std::pair<int, json> run_guarded(Session& s, const std::string& text) {
    try {
      return replan(s, text);
    } catch (const std::exception& e) {
      return {500, {{"error", {{"status", 500}, {"kind", "internal"}, {"message", e.what()}}}}};
    }
  }
};

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Server::~Server() {
  stop();
}

int Server::bind() {
  auto& o = impl_->options;
  if (o.port == 0) return o.port = impl_->http.bind_to_any_port(o.host);
  return impl_->http.bind_to_port(o.host, o.port) ? o.port : -1;
}

void Server::listen() { impl_->http.listen_after_bind(); }

void Server::stop() {
  if (impl_->http.is_running()) impl_->http.stop();
  wait_idle();
}

void Server::wait_idle() {
  std::unique_lock lock(impl_->workers_mutex);
  impl_->workers_done.wait(lock, [this] { return impl_->running == 0; });
}

}  // namespace resplan::service
