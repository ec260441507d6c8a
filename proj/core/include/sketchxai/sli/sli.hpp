#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sketchxai/data/decompose.hpp"
#include "sketchxai/data/sketch.hpp"
#include "sketchxai/model/network.hpp"

namespace sketchxai::sli {

enum class TaskKind { kRecovery, kTransfer, kCounterfactual };
enum class InitStrategy { kRandomNormal, kCentre };

std::string to_string(TaskKind kind);
std::string to_string(InitStrategy init);
TaskKind task_from_string(const std::string& s);
InitStrategy init_from_string(const std::string& s);

struct SliConfig {
  TaskKind task = TaskKind::kRecovery;
  // Required for transfer/counterfactual. For recovery it defaults to the
  // sketch's own label and must equal it when given.
  std::optional<int> target;
  int steps = 100;
  double eta_max = 10.0;
  double eta_min = 1e-5;
  double cap = 0.5;  // per-axis bound on one step's displacement
  InitStrategy init = InitStrategy::kRandomNormal;
  double sigma = 0.25;
  double lambda = 0.1;  // counterfactual distance weight
  std::uint64_t seed = 0;
  // Stop once p_target reaches this value; off by default.
  std::optional<double> stop_confidence;

  void validate() const;
};

struct Frame {
  int t = 0;
  std::vector<data::Point> locations;
  double p_orig = 0.0;
  double p_target = 0.0;
  double loss = 0.0;
};

struct Trajectory {
  int original_label = 0;
  int target_label = 0;
  SliConfig config;
  // Shapes and orders are fixed for the whole run; locations hold frame 0.
  std::vector<data::DecomposedStroke> strokes;
  std::vector<Frame> frames;

  data::Sketch frame_sketch(std::size_t index) const;
};

// Replaces every stroke location; shapes and orders are untouched.
// random_normal draws N(0, sigma^2 I) clamped to [-1, 1]; centre puts all
// strokes at the origin.
data::Sketch relocate(const data::Sketch& sketch, InitStrategy strategy, double sigma, std::uint64_t seed);

// eta(t) = eta_min + (eta_max - eta_min) (1 + cos(pi t / T)) / 2
double cosine_step_size(int t, int total_steps, double eta_max, double eta_min);

// Per-component clamp of a proposed displacement to [-cap, cap].
model::Mat<double> clamp_displacement(const model::Mat<double>& proposed, double cap);

// Cross-entropy toward `target` plus lambda * sum_i |l_i - l_i^0|_1.
double counterfactual_loss(const model::ClassScores& scores, int target, const model::Mat<double>& locations,
                           const model::Mat<double>& initial, double lambda);

struct Objective {
  int target = 0;
  double lambda = 0.0;
  const model::Mat<double>* initial = nullptr;  // required when lambda > 0
};

struct StepResult {
  model::Mat<double> locations;     // after the step
  model::Mat<double> displacement;  // applied (clamped)
  model::ClassScores scores;        // at the pre-step locations
  double loss = 0.0;                // at the pre-step locations
};

// One plain gradient-descent step on the stroke locations. Locations are not
// clamped to the canvas. Throws kNumerical on a non-finite gradient.
StepResult sli_step(const model::Network<double>& net, const model::Mat<double>& shape_embeddings,
                    std::span<const int> orders, const model::Mat<double>& locations, const Objective& objective,
                    double eta, double cap);

// (original, target) labels a run would use; throws kInvalidArgument when the
// task and target disagree with the sketch's label.
std::pair<int, int> resolve_labels(const model::Network<double>& net, const data::Sketch& sketch,
                                   const SliConfig& config);

// Returns a trajectory of steps + 1 frames (fewer only when stop_confidence
// triggers). A sketch without a label uses the model's prediction as the
// original label.
Trajectory run_sli(const model::Network<double>& net, const data::Sketch& sketch, const SliConfig& config);

// Called after every frame with the trajectory so far; returning false stops
// the run after that frame.
using FrameObserver = std::function<bool(const Trajectory&)>;

Trajectory run_sli(const model::Network<double>& net, const data::Sketch& sketch, const SliConfig& config,
                   const FrameObserver& observer);

}  // namespace sketchxai::sli
