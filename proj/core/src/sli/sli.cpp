#include "sketchxai/sli/sli.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <tuple>

#include "sketchxai/util/error.hpp"

namespace sketchxai::sli {

using model::Mat;

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kRecovery: return "recovery";
    case TaskKind::kTransfer: return "transfer";
    case TaskKind::kCounterfactual: return "counterfactual";
  }
  return "recovery";
}

std::string to_string(InitStrategy init) {
  return init == InitStrategy::kCentre ? "centre" : "random_normal";
}

TaskKind task_from_string(const std::string& s) {
  if (s == "recovery") return TaskKind::kRecovery;
  if (s == "transfer") return TaskKind::kTransfer;
  if (s == "counterfactual") return TaskKind::kCounterfactual;
  throw Error(ErrorCode::kInvalidArgument, "unknown SLI task '" + s + "'");
}

InitStrategy init_from_string(const std::string& s) {
  if (s == "random_normal") return InitStrategy::kRandomNormal;
  if (s == "centre" || s == "center") return InitStrategy::kCentre;
  throw Error(ErrorCode::kInvalidArgument, "unknown init strategy '" + s + "'");
}

void SliConfig::validate() const {
  if (steps < 1) throw ValidationError("steps", "must be >= 1");
  if (!(eta_min > 0.0)) throw ValidationError("eta_min", "must be > 0");
  if (!(eta_max > eta_min)) throw ValidationError("eta_max", "must be > eta_min");
  if (!(cap > 0.0)) throw ValidationError("cap", "must be > 0");
  if (!(sigma >= 0.0)) throw ValidationError("sigma", "must be >= 0");
  if (!(lambda >= 0.0)) throw ValidationError("lambda", "must be >= 0");
  if (stop_confidence && !(*stop_confidence > 0.0 && *stop_confidence <= 1.0)) {
    throw ValidationError("stop_confidence", "must be in (0, 1]");
  }
}

data::Sketch Trajectory::frame_sketch(std::size_t index) const {
  const auto& f = frames.at(index);
  auto s = data::recompose(data::with_locations(strokes, f.locations));
  s.label = original_label;
  return s;
}

data::Sketch relocate(const data::Sketch& sketch, InitStrategy strategy, double sigma, std::uint64_t seed) {
  auto strokes = data::decompose(sketch);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& s : strokes) {
    if (strategy == InitStrategy::kCentre) {
      s.location = {0.0, 0.0};
    } else {
      const double x = sigma * normal(rng);
      const double y = sigma * normal(rng);
      s.location = {std::clamp(x, -1.0, 1.0), std::clamp(y, -1.0, 1.0)};
    }
  }
  auto out = data::recompose(strokes);
  out.label = sketch.label;
  out.category_vocab_size = sketch.category_vocab_size;
  return out;
}

double cosine_step_size(int t, int total_steps, double eta_max, double eta_min) {
  if (total_steps <= 0) throw Error(ErrorCode::kInvalidArgument, "total_steps must be positive");
  return eta_min + 0.5 * (eta_max - eta_min) *
                       (1.0 + std::cos(std::numbers::pi * static_cast<double>(t) / static_cast<double>(total_steps)));
}

Mat<double> clamp_displacement(const Mat<double>& proposed, double cap) {
  return proposed.cwiseMax(-cap).cwiseMin(cap);
}

double counterfactual_loss(const model::ClassScores& scores, int target, const Mat<double>& locations,
                           const Mat<double>& initial, double lambda) {
  return model::cross_entropy(scores, target) + lambda * (locations - initial).cwiseAbs().sum();
}

StepResult sli_step(const model::Network<double>& net, const Mat<double>& shape_embeddings, std::span<const int> orders,
                    const Mat<double>& locations, const Objective& objective, double eta, double cap) {
  auto g = net.token_gradient(shape_embeddings, locations, orders, objective.target);
  Mat<double> grad = std::move(g.d_locations);
  StepResult r;
  r.loss = g.loss;
  if (objective.lambda > 0.0) {
    if (!objective.initial) throw Error(ErrorCode::kInvalidArgument, "counterfactual objective needs initial locations");
    const Mat<double> diff = locations - *objective.initial;
    r.loss += objective.lambda * diff.cwiseAbs().sum();
    grad += objective.lambda * diff.unaryExpr([](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); });
  }
  if (!grad.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite location gradient (loss " << r.loss << ", eta " << eta << ")";
    throw Error(ErrorCode::kNumerical, msg.str());
  }
  r.displacement = clamp_displacement(-eta * grad, cap);
  r.locations = locations + r.displacement;
  r.scores = std::move(g.scores);
  return r;
}

namespace {

std::vector<data::Point> to_points(const Mat<double>& m) {
  std::vector<data::Point> pts(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.cols(); ++i) pts[static_cast<std::size_t>(i)] = {m(0, i), m(1, i)};
  return pts;
}

}  // namespace

std::pair<int, int> resolve_labels(const model::Network<double>& net, const data::Sketch& sketch,
                                   const SliConfig& config) {
  const auto& mcfg = net.config();
  int original = 0;
  if (sketch.label) {
    original = *sketch.label;
  } else {
    original = net.forward(model::make_input<double>(data::decompose(sketch), mcfg)).argmax();
  }
  if (original < 0 || original >= mcfg.num_classes) {
    throw Error(ErrorCode::kInvalidArgument, "sketch label outside model classes");
  }
  int target = original;
  switch (config.task) {
    case TaskKind::kRecovery:
      if (config.target && *config.target != original) {
        throw Error(ErrorCode::kInvalidArgument, "recovery target must equal the sketch label");
      }
      break;
    case TaskKind::kTransfer:
    case TaskKind::kCounterfactual:
      if (!config.target) throw Error(ErrorCode::kInvalidArgument, "transfer needs a target label");
      if (*config.target == original) {
        throw Error(ErrorCode::kInvalidArgument, "transfer target must differ from the original label");
      }
      target = *config.target;
      break;
  }
  if (target < 0 || target >= mcfg.num_classes) {
    throw Error(ErrorCode::kInvalidArgument, "target label outside model classes");
  }
  return {original, target};
}

Trajectory run_sli(const model::Network<double>& net, const data::Sketch& sketch, const SliConfig& config) {
  return run_sli(net, sketch, config, {});
}

Trajectory run_sli(const model::Network<double>& net, const data::Sketch& sketch, const SliConfig& config,
                   const FrameObserver& observer) {
  config.validate();
  data::validate(sketch);
  const auto& mcfg = net.config();
  auto strokes = data::truncate(data::decompose(sketch), mcfg.limits());

  Trajectory traj;
  traj.config = config;
  std::tie(traj.original_label, traj.target_label) = resolve_labels(net, sketch, config);

  if (config.task == TaskKind::kRecovery) {
    auto moved = relocate(data::recompose(strokes), config.init, config.sigma, config.seed);
    strokes = data::with_locations(strokes, data::locations_of(data::decompose(moved)));
  }
  traj.strokes = strokes;

  const auto input = model::make_input<double>(strokes, mcfg);
  Mat<double> shape_emb;
  if (mcfg.use_shape) shape_emb = net.encode_shapes(input.shapes);
  const Mat<double> initial = input.locations;
  Mat<double> locations = initial;

  Objective objective;
  objective.target = traj.target_label;
  if (config.task == TaskKind::kCounterfactual) {
    objective.lambda = config.lambda;
    objective.initial = &initial;
  }

  traj.frames.reserve(static_cast<std::size_t>(config.steps) + 1);
  for (int t = 0; t <= config.steps; ++t) {
    const double eta = cosine_step_size(std::min(t, config.steps), config.steps, config.eta_max, config.eta_min);
    auto step = sli_step(net, shape_emb, input.orders, locations, objective, eta, config.cap);
    Frame f;
    f.t = t;
    f.locations = to_points(locations);
    f.p_orig = step.scores.probabilities[static_cast<std::size_t>(traj.original_label)];
    f.p_target = step.scores.probabilities[static_cast<std::size_t>(traj.target_label)];
    f.loss = step.loss;
    traj.frames.push_back(std::move(f));
    if (observer && !observer(traj)) break;
    if (t == config.steps) break;
    if (config.stop_confidence && traj.frames.back().p_target >= *config.stop_confidence) break;
    locations = std::move(step.locations);
  }
  return traj;
}

}  // namespace sketchxai::sli
