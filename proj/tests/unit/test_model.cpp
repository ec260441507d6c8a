#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "sketchxai/data/decompose.hpp"
#include "sketchxai/model/checkpoint.hpp"
#include "sketchxai/model/network.hpp"
#include "sketchxai/model/trainer.hpp"
#include "sketchxai/util/error.hpp"

using namespace sketchxai;
using namespace sketchxai::model;
using sketchxai::testing::lively_parameters;
using sketchxai::testing::random_sketch;
using sketchxai::testing::small_config;
using sketchxai::testing::TempDir;

namespace {

SketchInput<double> random_input(std::mt19937_64& rng, const ModelConfig& cfg) {
  return make_input<double>(data::decompose(random_sketch(rng, 5, 7)), cfg);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Softmax cross-entropy computed the long way in extended precision.
long double naive_cross_entropy(const std::vector<double>& logits, int label) {
  long double z = 0.0L;
  for (double l : logits) z += std::exp(static_cast<long double>(l));
  return -std::log(std::exp(static_cast<long double>(logits[static_cast<std::size_t>(label)])) / z);
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("config presets and validation") {
    const auto m = ModelConfig::micro(10);
    CHECK(m.embed_dim == 64);
    CHECK(m.depth == 2);
    CHECK(m.heads == 4);
    CHECK(m.lstm_hidden() == 32);
    CHECK(ModelConfig::preset("tiny", 3).embed_dim == 192);
    CHECK(ModelConfig::preset("base", 3).heads == 12);
    CHECK_THROWS_AS(ModelConfig::preset("huge", 3), Error);
    auto bad = m;
    bad.heads = 5;
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK(m.with_ablation("no_order").use_order == false);
    CHECK(m.with_ablation("no_shape").ablation_name() == "no_shape");
    CHECK(m.with_ablation("full") == m);
    CHECK_THROWS_AS(m.with_ablation("no_everything"), Error);
  }

  TEST_CASE("parameter tensors are uniquely named and counted") {
    const auto cfg = ModelConfig::micro(10);
    auto p = init_parameters(cfg, 1);
    std::set<std::string> names;
    std::size_t total = 0;
    for (const auto& t : p.tensors()) {
      CHECK(names.insert(t.name).second);
      total += static_cast<std::size_t>(t.size());
    }
    CHECK(total == p.parameter_count());
    CHECK(p.order_table.cols() == cfg.max_strokes);
    CHECK(p.shape_fwd.w_hh.rows() == 4 * cfg.lstm_hidden());
    const auto q = init_parameters(cfg, 1);
    CHECK(p.head_w == q.head_w);
    CHECK(init_parameters(cfg, 2).head_w != p.head_w);
    // Orthogonal recurrent gate blocks.
    const Eigen::MatrixXf blk = p.shape_fwd.w_hh.topRows(cfg.lstm_hidden());
    CHECK((blk.transpose() * blk - Eigen::MatrixXf::Identity(blk.cols(), blk.cols())).norm() < 1e-4);
  }

  TEST_CASE("cross-entropy matches the naive formula and stays finite") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 3.0);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> logits(7);
      for (auto& l : logits) l = n(rng);
      const auto s = make_scores(logits);
      CHECK(std::accumulate(s.probabilities.begin(), s.probabilities.end(), 0.0) == doctest::Approx(1.0));
      for (int c = 0; c < 7; ++c) {
        CHECK(cross_entropy(s, c) == doctest::Approx(static_cast<double>(naive_cross_entropy(logits, c))).epsilon(1e-12));
      }
    }
    const std::vector<double> big = {1000.0, 0.0, -1000.0};
    const auto s = make_scores(big);
    CHECK(std::isfinite(cross_entropy(s, 2)));
    CHECK(cross_entropy(s, 2) == doctest::Approx(2000.0));
    CHECK(s.argmax() == 0);
  }

  TEST_CASE("float and double forward agree; tokenized form matches compact form") {
    const auto cfg = small_config();
    const auto pd = lively_parameters(cfg, 4, 0.1);
    const Network<double> nd(cfg, pd);
    const Network<float> nf(cfg, pd.cast<float>());
    std::mt19937_64 rng(2);
    for (int t = 0; t < 10; ++t) {
      const auto strokes = data::decompose(random_sketch(rng, 10, 20));
      const auto a = nd.forward(make_input<double>(strokes, cfg));
      const auto b = nf.forward(make_input<float>(strokes, cfg));
      CHECK(max_abs_diff(a.probabilities, b.probabilities) < 1e-4);
      const auto tok = data::tokenize(strokes, cfg.limits());
      const auto c = nf.forward(tok);
      CHECK(max_abs_diff(b.logits, c.logits) < 1e-5);
    }
    auto wrong = cfg;
    wrong.max_strokes = 4;
    const auto tok = data::tokenize(data::decompose(random_sketch(rng)), wrong.limits());
    CHECK_THROWS_AS(nf.forward(tok), Error);
  }

  TEST_CASE("prediction is invariant to the token order of the input") {
    const auto cfg = small_config();
    const Network<double> net(cfg, lively_parameters(cfg, 5));
    std::mt19937_64 rng(3);
    for (int t = 0; t < 10; ++t) {
      const auto in = random_input(rng, cfg);
      SketchInput<double> perm;
      std::vector<int> idx(static_cast<std::size_t>(in.stroke_count()));
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      perm.locations.resize(2, in.stroke_count());
      for (std::size_t k = 0; k < idx.size(); ++k) {
        perm.shapes.push_back(in.shapes[static_cast<std::size_t>(idx[k])]);
        perm.locations.col(static_cast<Eigen::Index>(k)) = in.locations.col(idx[k]);
        perm.orders.push_back(in.orders[static_cast<std::size_t>(idx[k])]);
      }
      CHECK(max_abs_diff(net.forward(in).logits, net.forward(perm).logits) < 1e-10);
    }
  }

  TEST_CASE("ablated branches have no influence") {
    std::mt19937_64 rng(6);
    const auto base = small_config();
    const auto in = random_input(rng, base);
    {
      const auto cfg = base.with_ablation("no_location");
      const Network<double> net(cfg, lively_parameters(cfg, 7));
      auto moved = in;
      moved.locations.array() += 0.7;
      CHECK(max_abs_diff(net.forward(in).logits, net.forward(moved).logits) == 0.0);
    }
    {
      const auto cfg = base.with_ablation("no_order");
      const Network<double> net(cfg, lively_parameters(cfg, 7));
      auto reordered = in;
      std::reverse(reordered.orders.begin(), reordered.orders.end());
      CHECK(max_abs_diff(net.forward(in).logits, net.forward(reordered).logits) == 0.0);
    }
    {
      const auto cfg = base.with_ablation("no_shape");
      const Network<double> net(cfg, lively_parameters(cfg, 7));
      auto reshaped = in;
      for (auto& s : reshaped.shapes) s.row(0).array() += 0.3;
      CHECK(max_abs_diff(net.forward(in).logits, net.forward(reshaped).logits) == 0.0);
    }
    {
      const Network<double> net(base, lively_parameters(base, 7));
      auto moved = in;
      moved.locations(0, 0) += 0.7;
      CHECK(max_abs_diff(net.forward(in).logits, net.forward(moved).logits) > 0.0);
    }
  }

  TEST_CASE("order ids outside the table are rejected") {
    const auto cfg = small_config();
    const Network<double> net(cfg, lively_parameters(cfg, 1));
    std::mt19937_64 rng(1);
    auto in = random_input(rng, cfg);
    in.orders[0] = cfg.max_strokes;
    CHECK_THROWS_AS(net.forward(in), Error);
  }

  TEST_CASE("attention capture: one matrix per layer over CLS and the real strokes") {
    const auto cfg = small_config();
    const Network<double> net(cfg, lively_parameters(cfg, 8));
    std::mt19937_64 rng(4);
    const auto in = random_input(rng, cfg);
    AttentionCapture cap;
    cap.per_head = true;
    net.forward(in, &cap);
    REQUIRE(cap.layers.size() == static_cast<std::size_t>(cfg.depth));
    REQUIRE(cap.heads.size() == static_cast<std::size_t>(cfg.depth));
    for (std::size_t l = 0; l < cap.layers.size(); ++l) {
      const auto& a = cap.layers[l];
      CHECK(a.rows() == in.stroke_count() + 1);
      CHECK(a.cols() == in.stroke_count() + 1);
      CHECK((a.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
      Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(a.rows(), a.cols());
      for (const auto& h : cap.heads[l]) mean += h;
      mean /= static_cast<double>(cap.heads[l].size());
      CHECK((mean - a).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("parameter gradients match central finite differences") {
    const auto cfg = small_config(4);
    Network<double> net(cfg, lively_parameters(cfg, 3));
    std::mt19937_64 rng(11);
    std::vector<SketchInput<double>> inputs;
    for (int i = 0; i < 3; ++i) inputs.push_back(random_input(rng, cfg));
    std::vector<const SketchInput<double>*> batch;
    for (const auto& in : inputs) batch.push_back(&in);
    const std::vector<int> labels = {1, 3, 0};

    auto grads = Parameters<double>::zeros(cfg);
    net.loss_and_gradients(batch, labels, grads);
    auto params = net.mutable_params().tensors();
    const auto g = grads.tensors();
    double worst = 0.0;
    int checked = 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
      const Eigen::Index step = std::max<Eigen::Index>(1, params[k].size() / 5);
      for (Eigen::Index i = 0; i < params[k].size(); i += step) {
        const double old = params[k].data[i];
        const double h = 1e-5;
        auto scratch = Parameters<double>::zeros(cfg);
        params[k].data[i] = old + h;
        const double lp = net.loss_and_gradients(batch, labels, scratch).mean_loss;
        params[k].data[i] = old - h;
        const double lm = net.loss_and_gradients(batch, labels, scratch).mean_loss;
        params[k].data[i] = old;
        const double fd = (lp - lm) / (2 * h);
        const double an = g[k].data[i];
        // Below 1e-4 the difference quotient is dominated by rounding; compare absolutely there.
        const double scale = std::max({std::abs(fd), std::abs(an), 1e-4});
        worst = std::max(worst, std::abs(fd - an) / scale);
        ++checked;
      }
    }
    CHECK(checked > 100);
    CHECK(worst < 1e-5);
  }

  TEST_CASE("location and shape-embedding gradients match finite differences") {
    const auto cfg = small_config(4);
    const Network<double> net(cfg, lively_parameters(cfg, 9));
    std::mt19937_64 rng(12);
    const auto in = random_input(rng, cfg);
    const auto emb = net.encode_shapes(in.shapes);
    const auto g = net.token_gradient(emb, in.locations, in.orders, 2);
    CHECK(g.loss == doctest::Approx(cross_entropy(net.forward(in), 2)));
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < in.locations.cols(); ++i) {
      for (int a = 0; a < 2; ++a) {
        auto l = in.locations;
        l(a, i) += h;
        const double lp = net.token_gradient(emb, l, in.orders, 2).loss;
        l(a, i) -= 2 * h;
        const double lm = net.token_gradient(emb, l, in.orders, 2).loss;
        CHECK(g.d_locations(a, i) == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-6));
      }
    }
    for (Eigen::Index i = 0; i < emb.cols(); ++i) {
      for (Eigen::Index r = 0; r < emb.rows(); r += 5) {
        auto e = emb;
        e(r, i) += h;
        const double lp = net.token_gradient(e, in.locations, in.orders, 2).loss;
        e(r, i) -= 2 * h;
        const double lm = net.token_gradient(e, in.locations, in.orders, 2).loss;
        CHECK(g.d_shape_embeddings(r, i) == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("checkpoint round trip and error paths") {
    Checkpoint ck;
    ck.config = small_config(3);
    ck.categories = {"a", "b", "c"};
    ck.params = init_parameters(ck.config, 5);
    TempDir dir("ckpt");
    const auto path = dir / "m.ckpt";
    save_checkpoint(ck, path);
    const auto back = load_checkpoint(path);
    CHECK(back.config == ck.config);
    CHECK(back.categories == ck.categories);
    const auto a = ck.params.tensors();
    const auto b = back.params.tensors();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].name == b[i].name);
      CHECK(std::equal(a[i].data, a[i].data + a[i].size(), b[i].data));
    }

    std::ifstream side_in(sidecar_path(path));
    auto side = nlohmann::json::parse(side_in);
    side_in.close();
    CHECK(side["format"] == "sketchxai.checkpoint");
    CHECK(side["config"]["embed_dim"] == 16);
    side["config"]["embed_dim"] = 32;
    side["config"]["heads"] = 4;
    { std::ofstream o(sidecar_path(path)); o << side.dump(); }
    try {
      load_checkpoint(path);
      FAIL("expected config mismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kConfigMismatch);
    }

    save_checkpoint(ck, path);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
    CHECK_THROWS_AS(load_checkpoint(path), Error);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), Error);
  }

  TEST_CASE("Adam step matches the update rule") {
    const auto cfg = small_config(2);
    auto params = init_parameters(cfg, 1);
    auto grads = Parameters<float>::zeros(cfg);
    grads.head_b(0) = 0.5f;
    grads.head_b(1) = -2.0f;
    const float b0 = params.head_b(0), b1 = params.head_b(1);
    AdamOptimizer opt(params, 0.01, 0.9, 0.999, 1e-8);
    opt.step(params, grads);
    // First step: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps).
    CHECK(params.head_b(0) == doctest::Approx(b0 - 0.01 * 0.5 / (0.5 + 1e-8)).epsilon(1e-6));
    CHECK(params.head_b(1) == doctest::Approx(b1 + 0.01 * 2.0 / (2.0 + 1e-8)).epsilon(1e-6));
    CHECK(grads.head_b(0) == 0.0f);  // step clears gradients
    // Second step with a new gradient.
    grads.head_b(0) = 1.0f;
    const float c0 = params.head_b(0);
    opt.step(params, grads);
    const double m = 0.9 * (0.1 * 0.5) + 0.1 * 1.0;
    const double v = 0.999 * (0.001 * 0.25) + 0.001 * 1.0;
    const double m_hat = m / (1 - 0.81), v_hat = v / (1 - 0.999 * 0.999);
    CHECK(params.head_b(0) == doctest::Approx(c0 - 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8)).epsilon(1e-5));
    CHECK(opt.steps() == 2);
  }

  TEST_CASE("training is deterministic and learns a separable toy task") {
    // Class 0: strokes on the left, class 1: strokes on the right.
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.2, 0.8), j(-0.05, 0.05);
    std::vector<data::Sketch> train_set, valid_set;
    for (int i = 0; i < 80; ++i) {
      data::Sketch s;
      const int c = i % 2;
      const double x = c == 0 ? -u(rng) : u(rng);
      s.strokes = {data::Stroke{{{x, j(rng)}, {x + 0.1, j(rng)}}}};
      s.label = c;
      (i < 60 ? train_set : valid_set).push_back(s);
    }
    auto cfg = small_config(2);
    TrainOptions opt;
    opt.epochs = 15;
    opt.batch_size = 8;
    opt.learning_rate = 3e-3;
    opt.seed = 3;
    std::vector<EpochReport> reports;
    opt.on_epoch = [&](const EpochReport& r) { reports.push_back(r); };
    const auto a = train(train_set, valid_set, cfg, {"left", "right"}, opt);
    opt.on_epoch = nullptr;
    const auto b = train(train_set, valid_set, cfg, {"left", "right"}, opt);
    CHECK(a.params.head_w == b.params.head_w);
    CHECK(a.params.shape_fwd.w_ih == b.params.shape_fwd.w_ih);
    REQUIRE(reports.size() == 15);
    CHECK(reports.back().train_loss < reports.front().train_loss);
    CHECK(evaluate(a, valid_set) >= 0.9);
    const auto pred = predict(a.network<float>(), prepare(valid_set, cfg));
    CHECK(pred.size() == valid_set.size());
    CHECK(evaluate(a, {}) == 0.0);
  }
}
