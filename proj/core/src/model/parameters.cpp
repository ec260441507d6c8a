#include "sketchxai/model/parameters.hpp"

#include <cmath>
#include <random>

#include <Eigen/QR>

namespace sketchxai::model {

namespace {

template <typename T>
LstmParams<T> lstm_zeros(int hidden) {
  return {Mat<T>::Zero(4 * hidden, 4), Mat<T>::Zero(4 * hidden, hidden), Vec<T>::Zero(4 * hidden)};
}

template <typename Ref, typename P>
void collect(std::vector<Ref>& out, P& p) {
  auto add = [&](std::string name, auto& m) { out.push_back({std::move(name), m.data(), m.rows(), m.cols()}); };
  auto add_lstm = [&](const std::string& prefix, auto& l) {
    add(prefix + ".w_ih", l.w_ih);
    add(prefix + ".w_hh", l.w_hh);
    add(prefix + ".bias", l.bias);
  };
  add_lstm("shape.fwd", p.shape_fwd);
  add_lstm("shape.bwd", p.shape_bwd);
  add("location.weight", p.loc_w);
  add("location.bias", p.loc_b);
  add("order.table", p.order_table);
  add("cls_token", p.cls_token);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    auto& b = p.blocks[i];
    const std::string pre = "blocks." + std::to_string(i) + ".";
    add(pre + "ln1.gamma", b.ln1_gamma);
    add(pre + "ln1.beta", b.ln1_beta);
    add(pre + "attn.w_qkv", b.w_qkv);
    add(pre + "attn.b_qkv", b.b_qkv);
    add(pre + "attn.w_out", b.w_out);
    add(pre + "attn.b_out", b.b_out);
    add(pre + "ln2.gamma", b.ln2_gamma);
    add(pre + "ln2.beta", b.ln2_beta);
    add(pre + "mlp.w_fc1", b.w_fc1);
    add(pre + "mlp.b_fc1", b.b_fc1);
    add(pre + "mlp.w_fc2", b.w_fc2);
    add(pre + "mlp.b_fc2", b.b_fc2);
  }
  add("norm.gamma", p.norm_gamma);
  add("norm.beta", p.norm_beta);
  add("head.weight", p.head_w);
  add("head.bias", p.head_b);
}

}  // namespace

template <typename T>
Parameters<T> Parameters<T>::zeros(const ModelConfig& config) {
  config.validate();
  const int d = config.embed_dim;
  const int h = config.lstm_hidden();
  const int f = config.mlp_ratio * d;
  Parameters p;
  p.shape_fwd = lstm_zeros<T>(h);
  p.shape_bwd = lstm_zeros<T>(h);
  p.loc_w = Mat<T>::Zero(d, 2);
  p.loc_b = Vec<T>::Zero(d);
  p.order_table = Mat<T>::Zero(d, config.max_strokes);
  p.cls_token = Vec<T>::Zero(d);
  p.blocks.resize(static_cast<std::size_t>(config.depth));
  for (auto& b : p.blocks) {
    b.ln1_gamma = Vec<T>::Zero(d);
    b.ln1_beta = Vec<T>::Zero(d);
    b.w_qkv = Mat<T>::Zero(3 * d, d);
    b.b_qkv = Vec<T>::Zero(3 * d);
    b.w_out = Mat<T>::Zero(d, d);
    b.b_out = Vec<T>::Zero(d);
    b.ln2_gamma = Vec<T>::Zero(d);
    b.ln2_beta = Vec<T>::Zero(d);
    b.w_fc1 = Mat<T>::Zero(f, d);
    b.b_fc1 = Vec<T>::Zero(f);
    b.w_fc2 = Mat<T>::Zero(d, f);
    b.b_fc2 = Vec<T>::Zero(d);
  }
  p.norm_gamma = Vec<T>::Zero(d);
  p.norm_beta = Vec<T>::Zero(d);
  p.head_w = Mat<T>::Zero(config.num_classes, d);
  p.head_b = Vec<T>::Zero(config.num_classes);
  return p;
}

template <typename T>
std::vector<TensorRef<T>> Parameters<T>::tensors() {
  std::vector<TensorRef<T>> out;
  collect(out, *this);
  return out;
}

template <typename T>
std::vector<TensorRef<const T>> Parameters<T>::tensors() const {
  std::vector<TensorRef<const T>> out;
  collect(out, *this);
  return out;
}

template <typename T>
std::size_t Parameters<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += static_cast<std::size_t>(t.size());
  return n;
}

template <typename T>
template <typename U>
Parameters<U> Parameters<T>::cast() const {
  Parameters<U> out;
  auto cast_lstm = [](const LstmParams<T>& l) {
    return LstmParams<U>{l.w_ih.template cast<U>(), l.w_hh.template cast<U>(), l.bias.template cast<U>()};
  };
  out.shape_fwd = cast_lstm(shape_fwd);
  out.shape_bwd = cast_lstm(shape_bwd);
  out.loc_w = loc_w.template cast<U>();
  out.loc_b = loc_b.template cast<U>();
  out.order_table = order_table.template cast<U>();
  out.cls_token = cls_token.template cast<U>();
  for (const auto& b : blocks) {
    BlockParams<U> c;
    c.ln1_gamma = b.ln1_gamma.template cast<U>();
    c.ln1_beta = b.ln1_beta.template cast<U>();
    c.w_qkv = b.w_qkv.template cast<U>();
    c.b_qkv = b.b_qkv.template cast<U>();
    c.w_out = b.w_out.template cast<U>();
    c.b_out = b.b_out.template cast<U>();
    c.ln2_gamma = b.ln2_gamma.template cast<U>();
    c.ln2_beta = b.ln2_beta.template cast<U>();
    c.w_fc1 = b.w_fc1.template cast<U>();
    c.b_fc1 = b.b_fc1.template cast<U>();
    c.w_fc2 = b.w_fc2.template cast<U>();
    c.b_fc2 = b.b_fc2.template cast<U>();
    out.blocks.push_back(std::move(c));
  }
  out.norm_gamma = norm_gamma.template cast<U>();
  out.norm_beta = norm_beta.template cast<U>();
  out.head_w = head_w.template cast<U>();
  out.head_b = head_b.template cast<U>();
  return out;
}

template struct Parameters<float>;
template struct Parameters<double>;
template Parameters<double> Parameters<float>::cast<double>() const;
template Parameters<float> Parameters<double>::cast<float>() const;
template Parameters<float> Parameters<float>::cast<float>() const;
template Parameters<double> Parameters<double>::cast<double>() const;

namespace {

float truncated_normal(std::mt19937_64& rng, float sigma) {
  std::normal_distribution<float> dist(0.0f, sigma);
  for (;;) {
    const float v = dist(rng);
    if (std::abs(v) <= 2.0f * sigma) return v;
  }
}

void fill_trunc(Mat<float>& m, std::mt19937_64& rng, float sigma = 0.02f) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = truncated_normal(rng, sigma);
}

void fill_trunc(Vec<float>& v, std::mt19937_64& rng, float sigma = 0.02f) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = truncated_normal(rng, sigma);
}

Mat<float> orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = dist(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  // Sign fix so the draw is uniform over the orthogonal group.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q.cast<float>();
}

void init_lstm(LstmParams<float>& l, int hidden, std::mt19937_64& rng) {
  const float bound = std::sqrt(6.0f / static_cast<float>(4 + 4 * hidden));
  std::uniform_real_distribution<float> u(-bound, bound);
  for (Eigen::Index j = 0; j < l.w_ih.cols(); ++j)
    for (Eigen::Index i = 0; i < l.w_ih.rows(); ++i) l.w_ih(i, j) = u(rng);
  for (int g = 0; g < 4; ++g) l.w_hh.middleRows(g * hidden, hidden) = orthogonal(hidden, rng);
  l.bias.setZero();
  l.bias.segment(hidden, hidden).setOnes();
}

}  // namespace

Parameters<float> init_parameters(const ModelConfig& config, std::uint64_t seed) {
  auto p = Parameters<float>::zeros(config);
  std::mt19937_64 rng(seed);
  const int h = config.lstm_hidden();
  init_lstm(p.shape_fwd, h, rng);
  init_lstm(p.shape_bwd, h, rng);
  fill_trunc(p.loc_w, rng);
  fill_trunc(p.order_table, rng);
  fill_trunc(p.cls_token, rng);
  for (auto& b : p.blocks) {
    b.ln1_gamma.setOnes();
    b.ln2_gamma.setOnes();
    fill_trunc(b.w_qkv, rng);
    fill_trunc(b.w_out, rng);
    fill_trunc(b.w_fc1, rng);
    fill_trunc(b.w_fc2, rng);
  }
  p.norm_gamma.setOnes();
  fill_trunc(p.head_w, rng);
  return p;
}

}  // namespace sketchxai::model
