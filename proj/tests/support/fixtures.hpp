#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sketchxai/data/sketch.hpp"
#include "sketchxai/model/network.hpp"
#include "sketchxai/model/parameters.hpp"

namespace sketchxai::testing {

// Random normalized sketch: 1..max_strokes strokes of 1..max_points points.
inline data::Sketch random_sketch(std::mt19937_64& rng, int max_strokes = 6, int max_points = 10) {
  std::uniform_int_distribution<int> ns(1, max_strokes), np(1, max_points);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  data::Sketch s;
  const int n = ns(rng);
  for (int i = 0; i < n; ++i) {
    data::Stroke st;
    const int m = np(rng);
    for (int j = 0; j < m; ++j) st.points.push_back({u(rng), u(rng)});
    s.strokes.push_back(st);
  }
  return s;
}

// Raw QuickDraw-style sketch with integer coordinates in [0, 255].
inline data::Sketch random_raw_sketch(std::mt19937_64& rng, int max_strokes = 8, int max_points = 30) {
  std::uniform_int_distribution<int> ns(1, max_strokes), np(1, max_points), c(0, 255);
  data::Sketch s;
  const int n = ns(rng);
  for (int i = 0; i < n; ++i) {
    data::Stroke st;
    const int m = np(rng);
    for (int j = 0; j < m; ++j) st.points.push_back({double(c(rng)), double(c(rng))});
    s.strokes.push_back(st);
  }
  return s;
}

// Freshly initialized weights are tiny, which makes every gradient tiny too;
// a deterministic perturbation gives the tests something to measure.
inline model::Parameters<double> lively_parameters(const model::ModelConfig& cfg, std::uint64_t seed,
                                                   double amplitude = 0.3) {
  auto p = model::init_parameters(cfg, seed).cast<double>();
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> n(0.0, amplitude);
  for (auto& t : p.tensors()) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] += n(rng);
  }
  return p;
}

inline model::ModelConfig small_config(int classes = 5) {
  auto cfg = model::ModelConfig::micro(classes);
  cfg.embed_dim = 16;
  cfg.heads = 4;
  cfg.max_strokes = 8;
  cfg.max_points = 16;
  return cfg;
}

class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("sketchxai-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

}  // namespace sketchxai::testing
