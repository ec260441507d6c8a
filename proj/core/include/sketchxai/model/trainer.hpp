#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sketchxai/data/sketch.hpp"
#include "sketchxai/model/checkpoint.hpp"
#include "sketchxai/model/network.hpp"

namespace sketchxai::model {

struct EpochReport {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double valid_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainOptions {
  double learning_rate = 1e-4;
  int epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::function<void(const EpochReport&)> on_epoch;
};

// Labeled model inputs built once from preprocessed sketches.
struct PreparedSet {
  std::vector<SketchInput<float>> inputs;
  std::vector<int> labels;

  std::size_t size() const { return inputs.size(); }
};

PreparedSet prepare(const std::vector<data::Sketch>& sketches, const ModelConfig& config);

class AdamOptimizer {
public:
  AdamOptimizer(const Parameters<float>& like, double lr, double beta1, double beta2, double eps);

  void step(Parameters<float>& params, Parameters<float>& grads);
  void set_learning_rate(double lr) { lr_ = lr; }
  long steps() const { return t_; }

private:
  Parameters<float> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

// Minimizes mean cross-entropy with Adam. Deterministic for a given seed:
// shuffling and initialization derive from it and every reduction runs in a
// fixed order on one thread. Throws kNumerical if the loss becomes non-finite.
Checkpoint train(const std::vector<data::Sketch>& train_set, const std::vector<data::Sketch>& valid_set,
                 const ModelConfig& config, const std::vector<std::string>& categories, const TrainOptions& options);

// Top-1 accuracy; 0 for an empty set.
double evaluate(const Network<float>& net, const PreparedSet& set);
double evaluate(const Checkpoint& ckpt, const std::vector<data::Sketch>& sketches);

std::vector<int> predict(const Network<float>& net, const PreparedSet& set);

}  // namespace sketchxai::model
