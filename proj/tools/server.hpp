#pragma once

// HTTP front end over the C API.
//
//   GET  /scenarios                      bundled scenario summaries
//   GET  /scenarios/{name}               scenario, geometry and its baseline plan
//   POST /sessions                       {"scenario": name} -> new session
//   POST /sessions/{id}/constraints      constraint text -> plan, explain, returns, comparison
//                                        (?async=1 answers 202 and runs in the background)
//   GET  /sessions/{id}/status           idle or running, last error
//   GET  /sessions/{id}                  full submission history
//
// Sessions persist under the storage root, one directory per session and one
// document per submission; nothing is rewritten once stored.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

namespace resplan::service {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path root;
  std::size_t max_body = 64 * 1024;
};

/// RESPLAN_SESSION_ROOT, or ./sessions when unset.
std::filesystem::path session_root_from_env();

class Server {
 public:
  explicit Server(ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the socket and returns the port, or -1 on failure.
  int bind();
  /// Serves until stop(); call after bind().
  void listen();
  void stop();
  /// Blocks until no background replan is running.
  void wait_idle();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace resplan::service
