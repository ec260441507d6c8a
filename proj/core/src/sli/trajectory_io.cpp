#include "sketchxai/sli/trajectory_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "sketchxai/util/error.hpp"

namespace sketchxai::sli {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json config_to_json(const SliConfig& c) {
  ordered_json j;
  j["task"] = to_string(c.task);
  j["target"] = c.target ? json(*c.target) : json(nullptr);
  j["steps"] = c.steps;
  j["eta_max"] = c.eta_max;
  j["eta_min"] = c.eta_min;
  j["cap"] = c.cap;
  j["init"] = to_string(c.init);
  j["sigma"] = c.sigma;
  j["lambda"] = c.lambda;
  j["seed"] = c.seed;
  j["stop_confidence"] = c.stop_confidence ? json(*c.stop_confidence) : json(nullptr);
  return j;
}

SliConfig config_from_json(const json& j) {
  SliConfig c;
  try {
    if (j.contains("task")) c.task = task_from_string(j.at("task").get<std::string>());
    if (j.contains("target") && !j.at("target").is_null()) c.target = j.at("target").get<int>();
    c.steps = j.value("steps", c.steps);
    c.eta_max = j.value("eta_max", c.eta_max);
    c.eta_min = j.value("eta_min", c.eta_min);
    c.cap = j.value("cap", c.cap);
    if (j.contains("init")) c.init = init_from_string(j.at("init").get<std::string>());
    c.sigma = j.value("sigma", c.sigma);
    c.lambda = j.value("lambda", c.lambda);
    c.seed = j.value("seed", c.seed);
    if (j.contains("stop_confidence") && !j.at("stop_confidence").is_null()) {
      c.stop_confidence = j.at("stop_confidence").get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ordered_json header_to_json(const Trajectory& traj, const std::vector<std::string>& categories) {
  ordered_json h;
  h["type"] = "header";
  h["format"] = "sketchxai.trajectory";
  h["version"] = 1;
  h["original_label"] = traj.original_label;
  h["target_label"] = traj.target_label;
  h["categories"] = categories;
  h["config"] = config_to_json(traj.config);
  h["seed"] = traj.config.seed;
  ordered_json strokes = ordered_json::array();
  for (const auto& s : traj.strokes) {
    ordered_json shape = ordered_json::array();
    for (const auto& p : s.shape) shape.push_back(p.as_vector());
    strokes.push_back({{"order", s.order}, {"location", {s.location.x, s.location.y}}, {"shape", shape}});
  }
  h["strokes"] = strokes;
  return h;
}

ordered_json frame_to_json(const Frame& f, int decimals) {
  const double scale = decimals >= 0 ? std::pow(10.0, decimals) : 0.0;
  auto q = [&](double v) { return decimals >= 0 ? std::round(v * scale) / scale : v; };
  ordered_json j;
  j["t"] = f.t;
  ordered_json locs = ordered_json::array();
  for (const auto& p : f.locations) locs.push_back({q(p.x), q(p.y)});
  j["locations"] = locs;
  j["p_orig"] = q(f.p_orig);
  j["p_target"] = q(f.p_target);
  j["loss"] = q(f.loss);
  return j;
}

Frame frame_from_json(const json& j) {
  Frame f;
  f.t = j.at("t").get<int>();
  for (const auto& p : j.at("locations")) f.locations.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  f.p_orig = j.at("p_orig").get<double>();
  f.p_target = j.at("p_target").get<double>();
  f.loss = j.at("loss").get<double>();
  return f;
}

void write_trajectory(std::ostream& out, const Trajectory& traj, const std::vector<std::string>& categories,
                      int decimals) {
  out << header_to_json(traj, categories).dump() << '\n';
  for (const auto& f : traj.frames) out << frame_to_json(f, decimals).dump() << '\n';
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj,
                     const std::vector<std::string>& categories, int decimals) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_trajectory(out, traj, categories, decimals);
}

LoadedTrajectory read_trajectory(std::istream& in) {
  LoadedTrajectory out;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kFormat, "empty trajectory file");
  try {
    const auto h = json::parse(line);
    if (h.value("format", "") != "sketchxai.trajectory") throw Error(ErrorCode::kFormat, "not a trajectory header");
    auto& t = out.trajectory;
    t.original_label = h.at("original_label").get<int>();
    t.target_label = h.at("target_label").get<int>();
    t.config = config_from_json(h.at("config"));
    out.categories = h.value("categories", std::vector<std::string>{});
    for (const auto& s : h.at("strokes")) {
      data::DecomposedStroke ds;
      ds.order = s.at("order").get<int>();
      ds.location = {s.at("location").at(0).get<double>(), s.at("location").at(1).get<double>()};
      for (const auto& v : s.at("shape")) {
        data::ShapePoint sp;
        sp.dx = v.at(0).get<double>();
        sp.dy = v.at(1).get<double>();
        const double p1 = v.at(2).get<double>();
        const double p2 = v.at(3).get<double>();
        sp.pen = p1 > 0.5 ? data::PenState::kDrawing : (p2 > 0.5 ? data::PenState::kEnd : data::PenState::kPadding);
        ds.shape.push_back(sp);
      }
      t.strokes.push_back(std::move(ds));
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      t.frames.push_back(frame_from_json(json::parse(line)));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad trajectory file: ") + e.what());
  }
  return out;
}

LoadedTrajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return read_trajectory(in);
}

}  // namespace sketchxai::sli
