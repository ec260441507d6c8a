#include "sketchxai/model/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "sketchxai/data/decompose.hpp"
#include "sketchxai/util/error.hpp"

namespace sketchxai::model {

PreparedSet prepare(const std::vector<data::Sketch>& sketches, const ModelConfig& config) {
  PreparedSet set;
  set.inputs.reserve(sketches.size());
  set.labels.reserve(sketches.size());
  for (const auto& s : sketches) {
    set.inputs.push_back(make_input<float>(data::decompose(s), config));
    set.labels.push_back(s.label.value_or(-1));
  }
  return set;
}

AdamOptimizer::AdamOptimizer(const Parameters<float>& like, double lr, double beta1, double beta2, double eps)
    : m_(like), v_(like), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto& t : m_.tensors()) std::fill(t.data, t.data + t.size(), 0.0f);
  for (auto& t : v_.tensors()) std::fill(t.data, t.data + t.size(), 0.0f);
}

void AdamOptimizer::step(Parameters<float>& params, Parameters<float>& grads) {
  ++t_;
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  const auto b1 = static_cast<float>(beta1_);
  const auto b2 = static_cast<float>(beta2_);
  const auto c1 = static_cast<float>(1.0 - std::pow(beta1_, static_cast<double>(t_)));
  const auto c2 = static_cast<float>(1.0 - std::pow(beta2_, static_cast<double>(t_)));
  const auto lr = static_cast<float>(lr_);
  const auto eps = static_cast<float>(eps_);
  for (std::size_t k = 0; k < p.size(); ++k) {
    Eigen::Map<Eigen::ArrayXf> pk(p[k].data, p[k].size());
    Eigen::Map<Eigen::ArrayXf> gk(g[k].data, g[k].size());
    Eigen::Map<Eigen::ArrayXf> mk(m[k].data, m[k].size());
    Eigen::Map<Eigen::ArrayXf> vk(v[k].data, v[k].size());
    mk = b1 * mk + (1.0f - b1) * gk;
    vk = b2 * vk + (1.0f - b2) * gk.square();
    pk -= lr * (mk / c1) / ((vk / c2).sqrt() + eps);
    gk.setZero();
  }
}

std::vector<int> predict(const Network<float>& net, const PreparedSet& set) {
  std::vector<int> out;
  out.reserve(set.size());
  constexpr std::size_t kChunk = 64;
  std::vector<const SketchInput<float>*> batch;
  for (std::size_t i = 0; i < set.size(); i += kChunk) {
    batch.clear();
    for (std::size_t j = i; j < std::min(set.size(), i + kChunk); ++j) batch.push_back(&set.inputs[j]);
    for (const auto& s : net.forward_batch(batch)) out.push_back(s.argmax());
  }
  return out;
}

double evaluate(const Network<float>& net, const PreparedSet& set) {
  if (set.size() == 0) return 0.0;
  const auto pred = predict(net, set);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == set.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

double evaluate(const Checkpoint& ckpt, const std::vector<data::Sketch>& sketches) {
  return evaluate(ckpt.network<float>(), prepare(sketches, ckpt.config));
}

Checkpoint train(const std::vector<data::Sketch>& train_set, const std::vector<data::Sketch>& valid_set,
                 const ModelConfig& config, const std::vector<std::string>& categories, const TrainOptions& options) {
  if (train_set.empty()) throw Error(ErrorCode::kInvalidArgument, "training set is empty");
  if (options.batch_size <= 0 || options.epochs < 0) throw Error(ErrorCode::kInvalidArgument, "bad batch size or epochs");
  if (static_cast<int>(categories.size()) != config.num_classes) {
    throw Error(ErrorCode::kConfigMismatch, "category count differs from num_classes");
  }
  const auto train_data = prepare(train_set, config);
  const auto valid_data = prepare(valid_set, config);
  for (int y : train_data.labels) {
    if (y < 0 || y >= config.num_classes) throw Error(ErrorCode::kInvalidArgument, "training sketch without valid label");
  }

  std::mt19937_64 rng(options.seed);
  Network<float> net(config, init_parameters(config, rng()));
  auto grads = Parameters<float>::zeros(config);
  AdamOptimizer adam(grads, options.learning_rate, options.beta1, options.beta2, options.adam_eps);

  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const SketchInput<float>*> batch;
  std::vector<int> labels;
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    long correct = 0;
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(options.batch_size)) {
      batch.clear();
      labels.clear();
      for (std::size_t j = i; j < std::min(order.size(), i + static_cast<std::size_t>(options.batch_size)); ++j) {
        batch.push_back(&train_data.inputs[order[j]]);
        labels.push_back(train_data.labels[order[j]]);
      }
      const auto r = net.loss_and_gradients(batch, labels, grads);
      if (!std::isfinite(r.mean_loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << ", optimizer step " << adam.steps() + 1
            << ", learning rate " << options.learning_rate;
        throw Error(ErrorCode::kNumerical, msg.str());
      }
      loss_sum += r.mean_loss * static_cast<double>(batch.size());
      correct += r.correct;
      adam.step(net.mutable_params(), grads);
    }
    EpochReport rep;
    rep.epoch = epoch;
    rep.train_loss = loss_sum / static_cast<double>(order.size());
    rep.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    rep.valid_accuracy = evaluate(net, valid_data);
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (options.on_epoch) options.on_epoch(rep);
  }
  return Checkpoint{config, categories, net.params()};
}

}  // namespace sketchxai::model
