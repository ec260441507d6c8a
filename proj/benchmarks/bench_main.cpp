#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "sketchxai/analysis/kmeans.hpp"
#include "sketchxai/data/decompose.hpp"
#include "sketchxai/data/quickdraw.hpp"
#include "sketchxai/data/rdp.hpp"
#include "sketchxai/data/synthetic.hpp"
#include "sketchxai/model/network.hpp"
#include "sketchxai/model/parameters.hpp"
#include "sketchxai/sli/sli.hpp"

using namespace sketchxai;

namespace {

data::Sketch sample_sketch(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return data::preprocess(data::synthesize_raw("camera", rng), data::kDefaultRdpEpsilon);
}

template <typename T>
model::Network<T> micro_net() {
  const auto cfg = model::ModelConfig::micro(10);
  return model::Network<T>(cfg, model::init_parameters(cfg, 1).template cast<T>());
}

void BM_Forward(benchmark::State& state) {
  const auto net = micro_net<float>();
  const auto in = model::make_input<float>(data::decompose(sample_sketch(1)), net.config());
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(in));
}
BENCHMARK(BM_Forward);

void BM_TrainBatch(benchmark::State& state) {
  const auto net = micro_net<float>();
  std::vector<model::SketchInput<float>> inputs;
  std::vector<int> labels;
  for (int i = 0; i < 32; ++i) {
    inputs.push_back(model::make_input<float>(data::decompose(sample_sketch(10 + i)), net.config()));
    labels.push_back(i % 10);
  }
  std::vector<const model::SketchInput<float>*> batch;
  for (const auto& in : inputs) batch.push_back(&in);
  auto grads = model::Parameters<float>::zeros(net.config());
  for (auto _ : state) benchmark::DoNotOptimize(net.loss_and_gradients(batch, labels, grads));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainBatch)->Unit(benchmark::kMillisecond);

void BM_SliStep(benchmark::State& state) {
  const auto net = micro_net<double>();
  const auto in = model::make_input<double>(data::decompose(sample_sketch(2)), net.config());
  const auto emb = net.encode_shapes(in.shapes);
  sli::Objective obj;
  obj.target = 3;
  for (auto _ : state) benchmark::DoNotOptimize(sli::sli_step(net, emb, in.orders, in.locations, obj, 1.0, 0.5));
}
BENCHMARK(BM_SliStep);

void BM_SliRun(benchmark::State& state) {
  const auto net = micro_net<double>();
  auto s = sample_sketch(3);
  s.label = 1;
  sli::SliConfig c;
  c.steps = 100;
  for (auto _ : state) benchmark::DoNotOptimize(sli::run_sli(net, s, c));
}
BENCHMARK(BM_SliRun)->Unit(benchmark::kMillisecond);

void BM_Rdp(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.01);
  data::Stroke s;
  double x = 0, y = 0;
  for (int i = 0; i < state.range(0); ++i) {
    x += 0.01 + n(rng);
    y += n(rng);
    s.points.push_back({x, y});
  }
  for (auto _ : state) benchmark::DoNotOptimize(data::rdp_simplify(s, data::kDefaultRdpEpsilon));
}
BENCHMARK(BM_Rdp)->Arg(16)->Arg(128)->Arg(1024);

void BM_KMeans(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd x(5000, 64);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(analysis::kmeans(x, static_cast<int>(state.range(0)), 1, 20));
}
BENCHMARK(BM_KMeans)->Arg(5)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
