#include "sketchxai/app/service.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>

#include <httplib.h>

#include "sketchxai/app/wire.hpp"
#include "sketchxai/data/decompose.hpp"
#include "sketchxai/sli/trajectory_io.hpp"
#include "sketchxai/util/error.hpp"

namespace sketchxai::app {

using nlohmann::json;
using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

struct Service::Session {
  std::string id;
  std::mutex mu;
  std::condition_variable cv;
  SessionStatus status = SessionStatus::kPending;
  ordered_json header;
  std::vector<sli::Frame> frames;
  std::string error;
  std::atomic<bool> cancel{false};
  Clock::time_point last_access = Clock::now();
  std::thread worker;
};

std::string to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::kPending: return "pending";
    case SessionStatus::kRunning: return "running";
    case SessionStatus::kDone: return "done";
    case SessionStatus::kFailed: return "failed";
  }
  return "unknown";
}

Response error_response(const std::exception& e) {
  Response r;
  r.body["error"]["message"] = e.what();
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    r.status = 400;
    r.body["error"]["code"] = error_code_name(v->code());
    r.body["error"]["field"] = v->field();
  } else if (const auto* err = dynamic_cast<const Error*>(&e)) {
    r.body["error"]["code"] = error_code_name(err->code());
    switch (err->code()) {
      case ErrorCode::kNotFound:
      case ErrorCode::kMissingCategory: r.status = 404; break;
      case ErrorCode::kInvalidArgument:
      case ErrorCode::kFormat:
      case ErrorCode::kEmptyCategory: r.status = 400; break;
      default: r.status = 500;
    }
  } else if (dynamic_cast<const json::exception*>(&e)) {
    r.status = 400;
    r.body["error"]["code"] = "format";
    r.body["error"]["field"] = "body";
  } else {
    r.status = 500;
    r.body["error"]["code"] = "internal";
  }
  return r;
}

namespace {

ordered_json scores_json(const model::ClassScores& scores, const std::vector<std::string>& categories) {
  ordered_json j;
  j["probabilities"] = scores.probabilities;
  j["logits"] = scores.logits;
  const int top = scores.argmax();
  j["predicted"] = top;
  j["predicted_category"] = categories.at(static_cast<std::size_t>(top));
  return j;
}

const json& member(const json& body, const char* key) {
  if (!body.is_object()) throw ValidationError("body", "expected a JSON object");
  const auto it = body.find(key);
  if (it == body.end()) throw ValidationError(key, "missing");
  return *it;
}

}  // namespace

Service::Service(model::Checkpoint checkpoint, std::vector<data::Sketch> samples, ServiceOptions options)
    : checkpoint_(std::move(checkpoint)),
      net_(checkpoint_.network<double>()),
      samples_(std::move(samples)),
      options_(options) {
  sweep_thread_ = std::thread([this] { sweeper(); });
}

Service::~Service() {
  {
    std::lock_guard lock(sweep_mu_);
    stopping_ = true;
  }
  sweep_cv_.notify_all();
  sweep_thread_.join();
  std::map<std::string, std::shared_ptr<Session>> sessions;
  {
    std::lock_guard lock(mu_);
    sessions.swap(sessions_);
  }
  for (auto& [id, s] : sessions) stop_session(*s);
}

Response Service::categories() const {
  Response r;
  r.body["categories"] = checkpoint_.categories;
  r.body["config"] = model::config_to_json(checkpoint_.config);
  return r;
}

Response Service::samples(const std::string& category, int n) const {
  if (n < 0) throw ValidationError("n", "must be >= 0");
  std::optional<int> label;
  if (!category.empty()) label = resolve_category(category, checkpoint_.categories, "category");
  Response r;
  r.body["samples"] = ordered_json::array();
  int taken = 0;
  for (const auto& s : samples_) {
    if (taken >= n) break;
    if (label && s.label != label) continue;
    r.body["samples"].push_back(sketch_to_json(s));
    ++taken;
  }
  return r;
}

Response Service::classify(const json& body) const {
  const auto sketch = sketch_from_json(member(body, "sketch"), checkpoint_.categories);
  const auto scores = net_.forward(model::make_input<double>(data::decompose(sketch), net_.config()));
  return {200, scores_json(scores, checkpoint_.categories)};
}

Response Service::whatif(const json& body) const {
  const auto sketch = sketch_from_json(member(body, "sketch"), checkpoint_.categories);
  auto strokes = data::decompose(sketch);
  if (const auto it = body.find("moves"); it != body.end() && !it->is_null()) {
    if (!it->is_array()) throw ValidationError("moves", "expected an array");
    for (std::size_t k = 0; k < it->size(); ++k) {
      const auto& m = (*it)[k];
      const std::string f = "moves[" + std::to_string(k) + "]";
      if (!m.is_object()) throw ValidationError(f, "expected an object");
      const auto st = m.find("stroke");
      if (st == m.end() || !st->is_number_integer()) throw ValidationError(f + ".stroke", "expected a stroke index");
      const auto idx = st->get<long long>();
      if (idx < 0 || idx >= static_cast<long long>(strokes.size())) {
        throw ValidationError(f + ".stroke", "no stroke " + std::to_string(idx));
      }
      const auto loc = m.find("location");
      if (loc == m.end() || !loc->is_array() || loc->size() != 2 || !(*loc)[0].is_number() || !(*loc)[1].is_number()) {
        throw ValidationError(f + ".location", "expected [x, y]");
      }
      const data::Point p{(*loc)[0].get<double>(), (*loc)[1].get<double>()};
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ValidationError(f + ".location", "non-finite coordinate");
      strokes[static_cast<std::size_t>(idx)].location = p;
    }
  }
  const auto scores = net_.forward(model::make_input<double>(strokes, net_.config()));
  auto out = scores_json(scores, checkpoint_.categories);
  out["locations"] = ordered_json::array();
  for (const auto& s : strokes) out["locations"].push_back({s.location.x, s.location.y});
  return {200, std::move(out)};
}

Response Service::start_sli(const json& body) {
  auto sketch = sketch_from_json(member(body, "sketch"), checkpoint_.categories);
  const auto config = sli_config_from_json(body.contains("config") ? body.at("config") : json(), checkpoint_.categories);
  try {
    sli::resolve_labels(net_, sketch, config);
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInvalidArgument) throw;
    throw ValidationError("config.target", e.what());
  }

  auto session = std::make_shared<Session>();
  {
    std::lock_guard lock(mu_);
    if (sessions_.size() >= options_.max_sessions) {
      throw Error(ErrorCode::kInvalidArgument, "too many sessions; cancel one first");
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "run-%06llu", static_cast<unsigned long long>(next_id_++));
    session->id = buf;
    sessions_[session->id] = session;
  }
  session->worker = std::thread(
      [this, session, sketch = std::move(sketch), config]() { run_session(session, sketch, config); });
  Response r;
  r.body["run_id"] = session->id;
  r.body["status"] = to_string(SessionStatus::kPending);
  return r;
}

void Service::run_session(const std::shared_ptr<Session>& session, const data::Sketch& sketch,
                          const sli::SliConfig& config) {
  {
    std::lock_guard lock(session->mu);
    session->status = SessionStatus::kRunning;
  }
  session->cv.notify_all();
  try {
    sli::run_sli(net_, sketch, config, [&](const sli::Trajectory& traj) {
      {
        std::lock_guard lock(session->mu);
        if (session->frames.empty()) session->header = sli::header_to_json(traj, checkpoint_.categories);
        session->frames.push_back(traj.frames.back());
      }
      session->cv.notify_all();
      return !session->cancel.load();
    });
    std::lock_guard lock(session->mu);
    if (session->cancel.load()) {
      session->status = SessionStatus::kFailed;
      session->error = "cancelled";
    } else {
      session->status = SessionStatus::kDone;
    }
  } catch (const std::exception& e) {
    std::lock_guard lock(session->mu);
    session->status = SessionStatus::kFailed;
    session->error = e.what();
  }
  session->cv.notify_all();
}

std::shared_ptr<Service::Session> Service::find(const std::string& run_id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(run_id);
  if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "unknown run id '" + run_id + "'");
  return it->second;
}

Response Service::frames(const std::string& run_id, std::size_t from, std::chrono::milliseconds wait) {
  auto session = find(run_id);
  wait = std::min(wait, options_.max_wait);
  std::unique_lock lock(session->mu);
  session->last_access = Clock::now();
  session->cv.wait_for(lock, wait, [&] {
    return session->frames.size() > from || session->status == SessionStatus::kDone ||
           session->status == SessionStatus::kFailed;
  });
  Response r;
  r.body["run_id"] = run_id;
  r.body["status"] = to_string(session->status);
  if (!session->error.empty()) r.body["error"] = session->error;
  if (from == 0 && !session->header.is_null()) r.body["header"] = session->header;
  r.body["from"] = from;
  r.body["frames"] = ordered_json::array();
  for (std::size_t i = from; i < session->frames.size(); ++i) {
    r.body["frames"].push_back(sli::frame_to_json(session->frames[i]));
  }
  r.body["next"] = std::max(from, session->frames.size());
  session->last_access = Clock::now();
  return r;
}

void Service::stop_session(Session& session) {
  session.cancel.store(true);
  if (session.worker.joinable()) session.worker.join();
}

Response Service::cancel(const std::string& run_id) {
  std::shared_ptr<Session> session;
  {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(run_id);
    if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "unknown run id '" + run_id + "'");
    session = it->second;
    sessions_.erase(it);
  }
  stop_session(*session);
  Response r;
  r.body["run_id"] = run_id;
  std::lock_guard lock(session->mu);
  r.body["status"] = to_string(session->status);
  r.body["frames"] = session->frames.size();
  return r;
}

std::size_t Service::expire_idle() {
  const auto now = Clock::now();
  std::vector<std::shared_ptr<Session>> expired;
  {
    std::lock_guard lock(mu_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      bool idle = false;
      {
        std::lock_guard slock(it->second->mu);
        idle = now - it->second->last_access > options_.idle_timeout;
      }
      if (idle) {
        expired.push_back(it->second);
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& s : expired) stop_session(*s);
  return expired.size();
}

std::size_t Service::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

void Service::sweeper() {
  std::unique_lock lock(sweep_mu_);
  while (!stopping_) {
    sweep_cv_.wait_for(lock, options_.sweep_interval, [&] { return stopping_; });
    if (stopping_) break;
    lock.unlock();
    expire_idle();
    lock.lock();
  }
}

namespace {

void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      reply(res, f(req));
    } catch (const std::exception& e) {
      reply(res, error_response(e));
    }
  };
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw ValidationError("body", std::string("invalid JSON: ") + e.what());
  }
}

std::size_t query_size(const httplib::Request& req, const char* key, std::size_t fallback) {
  if (!req.has_param(key)) return fallback;
  const auto v = req.get_param_value(key);
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ValidationError(key, "expected a non-negative integer");
  }
  return static_cast<std::size_t>(std::stoull(v));
}

}  // namespace

void Service::mount(httplib::Server& server) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.Get("/categories", guarded([this](const httplib::Request&) { return categories(); }));
  server.Get("/samples", guarded([this](const httplib::Request& req) {
               return samples(req.get_param_value("category"), static_cast<int>(query_size(req, "n", 8)));
             }));
  server.Post("/classify", guarded([this](const httplib::Request& req) { return classify(parse_body(req)); }));
  server.Post("/whatif", guarded([this](const httplib::Request& req) { return whatif(parse_body(req)); }));
  server.Post("/sli", guarded([this](const httplib::Request& req) { return start_sli(parse_body(req)); }));
  server.Get(R"(/sli/([^/]+)/frames)", guarded([this](const httplib::Request& req) {
               return frames(req.matches[1], query_size(req, "from", 0),
                             std::chrono::milliseconds(query_size(req, "wait_ms", 0)));
             }));
  server.Delete(R"(/sli/([^/]+))", guarded([this](const httplib::Request& req) { return cancel(req.matches[1]); }));
}

}  // namespace sketchxai::app
