// Acceptance checks A1-A10. Prints one "A<n> PASS|FAIL ..." line per
// criterion and exits non-zero if any fails. Tolerances are fixed below.
//
// Data: $SKETCHXAI_DATA_DIR when it holds QuickDraw files for every category,
// the built-in synthetic corpus otherwise. Set SKETCHXAI_ACCEPTANCE_REUSE=1 to
// reuse checkpoints from an earlier run instead of retraining.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "rdp_reference.hpp"
#include "sketchxai/analysis/embeddings.hpp"
#include "sketchxai/analysis/inspect.hpp"
#include "sketchxai/analysis/primitives.hpp"
#include "sketchxai/analysis/transfer_map.hpp"
#include "sketchxai/app/cli.hpp"
#include "sketchxai/app/wire.hpp"
#include "sketchxai/data/dataset.hpp"
#include "sketchxai/data/decompose.hpp"
#include "sketchxai/data/quickdraw.hpp"
#include "sketchxai/data/rdp.hpp"
#include "sketchxai/data/synthetic.hpp"
#include "sketchxai/model/checkpoint.hpp"
#include "sketchxai/model/trainer.hpp"
#include "sketchxai/sli/sli.hpp"

namespace fs = std::filesystem;
using namespace sketchxai;

namespace {

constexpr double kA1Step = 1e-3;
constexpr double kA1MaxRelError = 1e-3;
constexpr double kA2MaxRoundTrip = 1e-6;
constexpr double kA4EtaRelError = 1e-9;
constexpr double kA4Cap = 0.5;
constexpr double kA5MinAccuracy = 0.60;
constexpr double kA6MinShapeGap = 0.15;
constexpr double kA7MinImproved = 0.70;
constexpr double kA7MinMedian = 0.5;
constexpr double kA10RowSumTol = 1e-5;
constexpr double kA10DiagTol = 1e-6;

constexpr std::size_t kTrainPerClass = 5000;
constexpr std::size_t kValidPerClass = 500;
constexpr std::size_t kTestPerClass = 500;

using clock_type = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;
// Copy of the report lines; ctest hides the output of passing tests.
std::ofstream report_file;

void emit(const std::string& line) {
  std::cout << line << std::endl;
  if (report_file) report_file << line << std::endl;
}

void report(const std::string& id, const Outcome& o, clock_type::time_point start) {
  const double secs = std::chrono::duration<double>(clock_type::now() - start).count();
  char t[32];
  std::snprintf(t, sizeof t, " (%.1fs)", secs);
  emit(id + (o.pass ? " PASS " : " FAIL ") + o.detail + t);
  if (!o.pass) ++failures;
}

void run(const std::string& id, const std::function<Outcome()>& check) {
  const auto start = clock_type::now();
  try {
    report(id, check(), start);
  } catch (const std::exception& e) {
    report(id, {false, std::string("error: ") + e.what()}, start);
  }
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

fs::path cache_dir() {
  fs::path p = SKETCHXAI_ACCEPTANCE_CACHE;
  fs::create_directories(p);
  return p;
}

bool reuse_checkpoints() {
  const char* v = std::getenv("SKETCHXAI_ACCEPTANCE_REUSE");
  return v && std::string(v) == "1";
}

// ---- shared fixtures -------------------------------------------------------

struct Corpus {
  std::string source;
  std::vector<std::string> categories;
  data::LabeledCollection raw;
  data::Dataset dataset;
};

Corpus load_corpus() {
  Corpus c;
  c.categories = data::synthetic_categories();
  const std::size_t per_class = kTrainPerClass + kValidPerClass + kTestPerClass;
  fs::path dir;
  if (const char* env = std::getenv("SKETCHXAI_DATA_DIR"); env && *env) {
    dir = env;
    for (const auto& cat : c.categories)
      if (!fs::exists(dir / (cat + ".ndjson"))) dir.clear();
  }
  if (!dir.empty()) {
    c.source = "quickdraw:" + dir.string();
  } else {
    dir = cache_dir() / "synthetic";
    if (!fs::exists(dir / (c.categories.back() + ".ndjson"))) {
      data::write_synthetic_corpus(dir, c.categories, per_class, 11);
    }
    c.source = "synthetic";
  }
  c.raw = data::load_quickdraw(dir, c.categories, per_class);
  std::vector<data::Sketch> pre;
  pre.reserve(c.raw.sketches.size());
  for (const auto& s : c.raw.sketches) pre.push_back(data::preprocess(s, data::kDefaultRdpEpsilon));
  c.dataset = data::split_dataset(pre, c.categories, {kTrainPerClass, kValidPerClass, kTestPerClass}, 1);
  return c;
}

model::Checkpoint trained(const Corpus& corpus, const std::string& ablation, double* seconds) {
  const auto path = cache_dir() / (ablation + ".ckpt");
  const auto cfg = model::ModelConfig::micro(static_cast<int>(corpus.categories.size())).with_ablation(ablation);
  if (reuse_checkpoints() && fs::exists(path)) {
    auto ck = model::load_checkpoint(path);
    if (ck.config == cfg && ck.categories == corpus.categories) {
      *seconds = 0.0;
      return ck;
    }
  }
  model::TrainOptions opt;
  opt.epochs = 20;
  opt.batch_size = 32;
  opt.learning_rate = 1e-4;
  opt.seed = 7;
  const auto start = clock_type::now();
  auto ck = model::train(corpus.dataset.train, corpus.dataset.valid, cfg, corpus.categories, opt);
  *seconds = std::chrono::duration<double>(clock_type::now() - start).count();
  model::save_checkpoint(ck, path);
  return ck;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// ---- A1-A4: no trained model needed -----------------------------------------

Outcome a1_gradients() {
  double worst = 0.0;
  for (int m = 0; m < 20; ++m) {
    const auto cfg = model::ModelConfig::micro(10);
    const model::Network<double> net(cfg, testing::lively_parameters(cfg, 100 + m, 0.1));
    std::mt19937_64 rng(200 + m);
    const auto sketch = testing::random_sketch(rng, 10, 16);
    const auto in = model::make_input<double>(data::decompose(sketch), cfg);
    const auto emb = net.encode_shapes(in.shapes);
    const int target = static_cast<int>(rng() % 10);
    const auto g = net.token_gradient(emb, in.locations, in.orders, target).d_locations;
    Eigen::MatrixXd fd(g.rows(), g.cols());
    for (Eigen::Index i = 0; i < g.cols(); ++i)
      for (Eigen::Index a = 0; a < 2; ++a) {
        auto l = in.locations;
        l(a, i) += kA1Step;
        const double lp = net.token_gradient(emb, l, in.orders, target).loss;
        l(a, i) -= 2 * kA1Step;
        const double lm = net.token_gradient(emb, l, in.orders, target).loss;
        fd(a, i) = (lp - lm) / (2 * kA1Step);
      }
    worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), 1e-300));
  }
  return {worst < kA1MaxRelError, fmt("20 models, worst relative error %.3g (limit %.0e)", worst, kA1MaxRelError)};
}

Outcome a2_round_trip(const Corpus& corpus) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, corpus.raw.sketches.size() - 1);
  std::normal_distribution<double> n(0.0, 0.5);
  const auto cfg = model::ModelConfig::micro(10);
  const model::Network<double> net(cfg, model::init_parameters(cfg, 1).cast<double>());
  double worst = 0.0;
  bool shapes_exact = true, embeddings_exact = true;
  for (int i = 0; i < 1000; ++i) {
    const auto s = data::normalize(corpus.raw.sketches[pick(rng)]);
    const auto d = data::decompose(s);
    const auto r = data::recompose(d);
    if (r.strokes.size() != s.strokes.size()) return {false, "stroke count changed"};
    for (std::size_t k = 0; k < s.strokes.size(); ++k) {
      if (r.strokes[k].points.size() != s.strokes[k].points.size()) return {false, "point count changed"};
      for (std::size_t j = 0; j < s.strokes[k].points.size(); ++j) {
        worst = std::max({worst, std::abs(r.strokes[k].points[j].x - s.strokes[k].points[j].x),
                          std::abs(r.strokes[k].points[j].y - s.strokes[k].points[j].y)});
      }
    }
    std::vector<data::Point> locs;
    for (std::size_t k = 0; k < d.size(); ++k) locs.push_back({n(rng), n(rng)});
    const auto moved = data::with_locations(d, locs);
    for (std::size_t k = 0; k < d.size(); ++k) shapes_exact = shapes_exact && moved[k].shape == d[k].shape;
    if (i < 100) {
      const auto a = model::make_input<double>(d, cfg);
      const auto b = model::make_input<double>(moved, cfg);
      embeddings_exact = embeddings_exact && net.encode_shapes(a.shapes) == net.encode_shapes(b.shapes);
    }
  }
  return {worst <= kA2MaxRoundTrip && shapes_exact && embeddings_exact,
          fmt("1000 sketches, max round-trip error %.3g; ", worst) + "shapes bit-exact " +
              (shapes_exact ? "yes" : "no") + ", shape embeddings bit-exact " + (embeddings_exact ? "yes" : "no")};
}

Outcome a3_rdp() {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> len(2, 12);
  std::uniform_real_distribution<double> u(-1.0, 1.0), e(0.0, 0.5);
  int mismatches = 0;
  for (int t = 0; t < 10000; ++t) {
    data::Stroke s;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) s.points.push_back({u(rng), u(rng)});
    // Every fourth case uses the production tolerance.
    const double eps = t % 4 == 0 ? data::kDefaultRdpEpsilon : e(rng);
    if (data::rdp_simplify(s, eps).points != testing::ref_simplify(s.points, eps)) ++mismatches;
  }
  return {mismatches == 0, fmt("10000 polylines, %.0f mismatches", mismatches)};
}

Outcome a4_schedule_and_cap() {
  const double e0 = sli::cosine_step_size(0, 100, 10.0, 1e-5);
  const double eT = sli::cosine_step_size(100, 100, 10.0, 1e-5);
  const double r0 = std::abs(e0 - 10.0) / 10.0, rT = std::abs(eT - 1e-5) / 1e-5;
  // A perturbed untrained model has large location gradients, so the clamp is
  // active on many steps.
  const auto cfg = model::ModelConfig::micro(10);
  const model::Network<double> net(cfg, testing::lively_parameters(cfg, 5, 0.3));
  std::mt19937_64 rng(41);
  long steps = 0, clamped = 0;
  double largest = 0.0, drift = 0.0;
  for (int r = 0; r < 110; ++r) {
    auto s = testing::random_sketch(rng, 8, 10);
    s.label = static_cast<int>(rng() % 10);
    sli::SliConfig c;
    c.steps = 100;
    c.seed = static_cast<std::uint64_t>(r);
    if (r % 2) {
      c.task = sli::TaskKind::kTransfer;
      c.target = (*s.label + 1) % 10;
    }
    // Applied displacements, stepping from the run's first frame.
    const auto traj = sli::run_sli(net, s, c);
    const auto in = model::make_input<double>(traj.strokes, cfg);
    const auto emb = net.encode_shapes(in.shapes);
    sli::Objective obj;
    obj.target = traj.target_label;
    auto locations = in.locations;
    for (int k = 0; k < c.steps; ++k) {
      const auto step = sli::sli_step(net, emb, in.orders, locations, obj,
                                      sli::cosine_step_size(k, c.steps, c.eta_max, c.eta_min), c.cap);
      const double step_max = step.displacement.cwiseAbs().maxCoeff();
      largest = std::max(largest, step_max);
      if (step_max == kA4Cap) ++clamped;
      ++steps;
      locations = step.locations;
    }
    // The recorded trajectory follows the same path.
    const auto& last = traj.frames.back().locations;
    for (std::size_t k = 0; k < last.size(); ++k) {
      drift = std::max({drift, std::abs(last[k].x - locations(0, static_cast<Eigen::Index>(k))),
                        std::abs(last[k].y - locations(1, static_cast<Eigen::Index>(k)))});
    }
  }
  const bool pass = r0 < kA4EtaRelError && rT < kA4EtaRelError && steps >= 10000 && largest <= kA4Cap && drift == 0.0;
  return {pass, fmt("eta(0)=%.10g eta(100)=%.6g; ", e0, eT) +
                    fmt("%.0f steps, largest per-axis move %.17g, %.0f steps at the cap, replay drift %.2g",
                        double(steps), largest, double(clamped), drift)};
}

// ---- A5-A10: trained models -------------------------------------------------

struct Trained {
  model::Checkpoint full;
  double accuracy[4] = {0, 0, 0, 0};  // full, no_order, no_location, no_shape
  double seconds[4] = {0, 0, 0, 0};
};

const char* kAblations[4] = {"full", "no_order", "no_location", "no_shape"};

Outcome a5_training(const Corpus& corpus, Trained& t) {
  t.full = trained(corpus, "full", &t.seconds[0]);
  t.accuracy[0] = model::evaluate(t.full, corpus.dataset.test);
  const std::string how = t.seconds[0] > 0 ? fmt(", trained in %.1f min", t.seconds[0] / 60) : ", reused checkpoint";
  return {t.accuracy[0] >= kA5MinAccuracy,
          fmt("micro, 10 classes, %.0f train/class, 20 epochs: test top-1 %.4f (need >= %.2f)", double(kTrainPerClass),
              t.accuracy[0], kA5MinAccuracy) +
              how + " [" + corpus.source + "]"};
}

Outcome a6_ablation(const Corpus& corpus, Trained& t) {
  for (int i = 1; i < 4; ++i) {
    const auto ck = trained(corpus, kAblations[i], &t.seconds[i]);
    t.accuracy[i] = model::evaluate(ck, corpus.dataset.test);
  }
  const double full = t.accuracy[0], no_order = t.accuracy[1], no_loc = t.accuracy[2], no_shape = t.accuracy[3];
  const bool pass = no_shape < no_loc && no_loc <= no_order && no_order <= full && full - no_shape >= kA6MinShapeGap;
  return {pass, fmt("no_shape %.4f < no_location %.4f <= no_order %.4f <= full %.4f", no_shape, no_loc, no_order, full) +
                    fmt("; shape gap %.1f points", 100 * (full - no_shape))};
}

Outcome a7_recovery(const Corpus& corpus, const Trained& t) {
  const auto net = t.full.network<double>();
  const auto& test = corpus.dataset.test;
  // The first ten test sketches of each class.
  std::vector<const data::Sketch*> picked;
  std::vector<int> taken(10, 0);
  for (const auto& s : test)
    if (taken[static_cast<std::size_t>(*s.label)]++ < 10) picked.push_back(&s);
  std::vector<double> finals;
  int improved = 0;
  for (int i = 0; i < 100; ++i) {
    const auto& s = *picked[static_cast<std::size_t>(i)];
    sli::SliConfig c;
    c.task = sli::TaskKind::kRecovery;
    c.init = sli::InitStrategy::kRandomNormal;
    c.steps = 100;
    c.seed = static_cast<std::uint64_t>(1000 + i);
    const auto traj = sli::run_sli(net, s, c);
    if (traj.frames.back().p_target > traj.frames.front().p_target) ++improved;
    finals.push_back(traj.frames.back().p_target);
  }
  std::sort(finals.begin(), finals.end());
  const double median = (finals[49] + finals[50]) / 2;
  const double frac = improved / 100.0;
  return {frac >= kA7MinImproved && median >= kA7MinMedian,
          fmt("100 runs: %.0f%% improved (need >= %.0f%%), median final p %.4f (need >= %.2f)", 100 * frac,
              100 * kA7MinImproved, median, kA7MinMedian)};
}

Outcome a8_transfer_map(const Corpus& corpus, const Trained& t) {
  const auto net = t.full.network<double>();
  sli::SliConfig c;
  c.seed = 5;
  const auto map = analysis::transfer_map(net, corpus.dataset.test, corpus.categories, 10, 20, c);
  analysis::save_transfer_map(map, cache_dir() / "transfer_map.csv");
  int bad = 0;
  double min_margin = 1e9;
  for (int r = 0; r < 10; ++r) {
    double off = 0.0;
    for (int col = 0; col < 10; ++col)
      if (col != r) off += map.confidence(r, col);
    off /= 9;
    min_margin = std::min(min_margin, map.confidence(r, r) - off);
    if (map.confidence(r, r) < off) ++bad;
  }
  return {bad == 0, fmt("10x10, n=20: %.0f rows violate, smallest diagonal margin %.4f", bad, min_margin)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome a9_determinism(const Corpus& corpus, const Trained& t) {
  const auto dir = cache_dir() / "a9";
  fs::create_directories(dir);
  const auto ckpt = cache_dir() / "a9.ckpt";
  model::save_checkpoint(t.full, ckpt);
  const auto& s = corpus.dataset.test[3];
  app::save_sketch_file(dir / "sketch.json", s);
  const std::string target = corpus.categories[static_cast<std::size_t>((*s.label + 1) % 10)];
  bool same = true;
  std::size_t bytes = 0;
  for (const std::vector<std::string> task : {std::vector<std::string>{"--task", "recovery"},
                                              std::vector<std::string>{"--task", "transfer", "--target", target},
                                              std::vector<std::string>{"--task", "counterfactual", "--target", target}}) {
    std::string outputs[2];
    for (int run = 0; run < 2; ++run) {
      const auto out = dir / ("run" + std::to_string(run) + ".ndjson");
      std::vector<std::string> args = {"sketchxai", "sli", "--ckpt", ckpt.string(), "--input",
                                       (dir / "sketch.json").string(), "--seed", "9", "--decimals", "6", "--out",
                                       out.string()};
      args.insert(args.end(), task.begin(), task.end());
      std::vector<char*> argv;
      for (auto& a : args) argv.push_back(a.data());
      std::ostringstream o, e;
      if (app::run_cli(static_cast<int>(argv.size()), argv.data(), o, e) != 0) return {false, "sli failed: " + e.str()};
      outputs[run] = slurp(out);
    }
    same = same && !outputs[0].empty() && outputs[0] == outputs[1];
    bytes += outputs[0].size();
  }
  return {same, fmt("recovery/transfer/counterfactual exports, %.0f bytes, identical across two runs", double(bytes))};
}

bool non_increasing(const std::vector<double>& h) {
  for (std::size_t i = 1; i < h.size(); ++i)
    if (h[i] > h[i - 1]) return false;
  return true;
}

Outcome a10_analysis(const Corpus& corpus, const Trained& t) {
  const auto net = t.full.network<double>();
  const auto& test = corpus.dataset.test;
  double row_err = 0.0;
  for (std::size_t i = 0; i < test.size(); i += 50) {
    const auto cap = analysis::attention_export(net, test[i], true);
    for (const auto& a : cap.layers) row_err = std::max(row_err, max_abs((a.rowwise().sum().array() - 1.0).matrix()));
    for (const auto& layer : cap.heads)
      for (const auto& h : layer) row_err = std::max(row_err, max_abs((h.rowwise().sum().array() - 1.0).matrix()));
  }
  const auto sim = analysis::order_similarity(net, net.config().max_strokes);
  const double diag_err = max_abs((sim.diagonal().array() - 1.0).matrix());

  // Codebooks from 300 training sketches per class.
  std::vector<data::Sketch> pool;
  std::vector<int> taken(10, 0);
  for (const auto& s : corpus.dataset.train)
    if (taken[static_cast<std::size_t>(*s.label)]++ < 300) pool.push_back(s);
  const auto emb = analysis::collect_shape_embeddings(net, pool);
  const auto cb5 = analysis::build_codebook(emb, 5, 3);
  const auto cb100 = analysis::build_codebook(emb, 100, 3);
  const bool monotone = non_increasing(cb5.inertia_history) && non_increasing(cb100.inertia_history);
  const double acc5 = analysis::primitive_replace_accuracy(net, test, cb5);
  const double acc100 = analysis::primitive_replace_accuracy(net, test, cb100);
  const bool pass = row_err <= kA10RowSumTol && diag_err <= kA10DiagTol && monotone && acc100 >= acc5;
  return {pass, fmt("attention row-sum error %.2g, order-sim diagonal error %.2g, ", row_err, diag_err) +
                    std::string("inertia ") + (monotone ? "non-increasing" : "INCREASED") +
                    fmt(", replacement accuracy k=100 %.4f vs k=5 %.4f", acc100, acc5)};
}

}  // namespace

int main() {
  report_file.open(cache_dir() / "report.txt");
  emit("sketchxai acceptance");
  run("A1", a1_gradients);
  const auto corpus = load_corpus();
  run("A2", [&] { return a2_round_trip(corpus); });
  run("A3", a3_rdp);
  run("A4", a4_schedule_and_cap);

  Trained t;
  bool have_model = false;
  run("A5", [&] {
    auto o = a5_training(corpus, t);
    have_model = true;
    return o;
  });
  const auto needs_model = [&](const std::string& id, Outcome (*f)(const Corpus&, Trained&)) {
    if (!have_model) {
      report(id, {false, "no trained model"}, clock_type::now());
      return;
    }
    run(id, [&] { return f(corpus, t); });
  };
  needs_model("A6", a6_ablation);
  needs_model("A7", [](const Corpus& c, Trained& m) { return a7_recovery(c, m); });
  needs_model("A8", [](const Corpus& c, Trained& m) { return a8_transfer_map(c, m); });
  needs_model("A9", [](const Corpus& c, Trained& m) { return a9_determinism(c, m); });
  needs_model("A10", [](const Corpus& c, Trained& m) { return a10_analysis(c, m); });

  emit(failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed");
  return failures == 0 ? 0 : 1;
}
