#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchxai/data/sketch.hpp"
#include "sketchxai/model/checkpoint.hpp"
#include "sketchxai/model/network.hpp"
#include "sketchxai/sli/sli.hpp"

namespace httplib {
class Server;
}

namespace sketchxai::app {

struct ServiceOptions {
  std::chrono::milliseconds idle_timeout{15 * 60 * 1000};
  std::chrono::milliseconds sweep_interval{30 * 1000};
  std::chrono::milliseconds max_wait{30 * 1000};  // cap for long-polling frame requests
  std::size_t max_sessions = 64;
};

struct Response {
  int status = 200;
  nlohmann::ordered_json body;
};

enum class SessionStatus { kPending, kRunning, kDone, kFailed };

std::string to_string(SessionStatus status);

// Maps an exception to an error response: validation errors are 400 with the
// offending field path, unknown categories or run ids 404, anything else 500.
Response error_response(const std::exception& e);

// Backend for the workbench. The checkpoint is loaded once and shared
// read-only by every request and every SLI session; each session runs on its
// own worker thread.
class Service {
public:
  Service(model::Checkpoint checkpoint, std::vector<data::Sketch> samples = {}, ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Response categories() const;
  Response samples(const std::string& category, int n) const;
  Response classify(const nlohmann::json& body) const;
  // Body: {"sketch": ..., "moves": [{"stroke": i, "location": [x, y]}, ...]}.
  Response whatif(const nlohmann::json& body) const;
  // Body: {"sketch": ..., "config": {...}}. Replies {"run_id": ...}.
  Response start_sli(const nlohmann::json& body);
  // Frames from index `from` on. Blocks up to `wait` while the run has no
  // frames past `from` and is still going.
  Response frames(const std::string& run_id, std::size_t from, std::chrono::milliseconds wait);
  Response cancel(const std::string& run_id);

  // Cancels and drops sessions not touched for longer than the idle timeout.
  std::size_t expire_idle();
  std::size_t session_count() const;

  // Registers every endpoint on `server`.
  void mount(httplib::Server& server);

private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& run_id) const;
  void run_session(const std::shared_ptr<Session>& session, const data::Sketch& sketch, const sli::SliConfig& config);
  static void stop_session(Session& session);
  void sweeper();

  model::Checkpoint checkpoint_;
  model::Network<double> net_;
  std::vector<data::Sketch> samples_;
  ServiceOptions options_;

  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;

  std::mutex sweep_mu_;
  std::condition_variable sweep_cv_;
  bool stopping_ = false;
  std::thread sweep_thread_;
};

}  // namespace sketchxai::app
