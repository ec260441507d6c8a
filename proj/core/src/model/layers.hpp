#pragma once

// Forward/backward kernels shared by Network<T>. Columns are tokens (or
// strokes); all caches live in caller-owned tapes.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "sketchxai/model/config.hpp"
#include "sketchxai/model/network.hpp"
#include "sketchxai/model/parameters.hpp"
#include "sketchxai/util/error.hpp"

namespace sketchxai::model::detail {

template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

// ---------------------------------------------------------------------------
// LSTM over a batch of variable-length sequences. Sequences are sorted by
// length (descending) so the active set at step t is a column prefix; a
// finished sequence keeps its final state.

template <typename T>
struct LstmTape {
  std::vector<int> perm;
  std::vector<int> active;
  std::vector<Mat<T>> x, h_prev, c_prev, gates, tanh_c;
};

template <typename T>
Mat<T> lstm_forward(const LstmParams<T>& p, std::span<const Mat<T>* const> seqs, bool reverse, LstmTape<T>* tape) {
  const int count = static_cast<int>(seqs.size());
  const int hidden = static_cast<int>(p.w_hh.cols());
  Mat<T> out = Mat<T>::Zero(hidden, count);
  if (count == 0) return out;

  std::vector<int> perm(static_cast<std::size_t>(count));
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(),
                   [&](int a, int b) { return seqs[static_cast<std::size_t>(a)]->cols() > seqs[static_cast<std::size_t>(b)]->cols(); });
  std::vector<int> len(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) len[k] = static_cast<int>(seqs[static_cast<std::size_t>(perm[k])]->cols());
  if (len.back() == 0) throw Error(ErrorCode::kInvalidArgument, "stroke has zero real points");

  Mat<T> h = Mat<T>::Zero(hidden, count);
  Mat<T> c = Mat<T>::Zero(hidden, count);
  Mat<T> x;
  Mat<T> z;
  int n = count;
  const int steps = len.front();
  if (tape) {
    tape->perm = perm;
    tape->active.clear();
    tape->x.clear();
    tape->h_prev.clear();
    tape->c_prev.clear();
    tape->gates.clear();
    tape->tanh_c.clear();
  }
  for (int t = 0; t < steps; ++t) {
    while (n > 0 && len[static_cast<std::size_t>(n - 1)] <= t) --n;
    x.resize(4, n);
    for (int k = 0; k < n; ++k) {
      const auto& s = *seqs[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
      const auto L = s.cols();
      x.col(k) = s.col(reverse ? L - 1 - t : t);
    }
    z.noalias() = p.w_ih * x;
    z.noalias() += p.w_hh * h.leftCols(n);
    z.colwise() += p.bias;
    z.topRows(2 * hidden) = (T(1) + (-z.topRows(2 * hidden).array()).exp()).inverse();
    z.middleRows(2 * hidden, hidden) = z.middleRows(2 * hidden, hidden).array().tanh();
    z.bottomRows(hidden) = (T(1) + (-z.bottomRows(hidden).array()).exp()).inverse();

    if (tape) {
      tape->x.push_back(x);
      tape->h_prev.push_back(h.leftCols(n));
      tape->c_prev.push_back(c.leftCols(n));
    }
    c.leftCols(n) = z.middleRows(hidden, hidden).array() * c.leftCols(n).array() +
                    z.topRows(hidden).array() * z.middleRows(2 * hidden, hidden).array();
    Mat<T> tc = c.leftCols(n).array().tanh();
    h.leftCols(n) = z.bottomRows(hidden).array() * tc.array();
    if (tape) {
      tape->gates.push_back(z);
      tape->tanh_c.push_back(std::move(tc));
      tape->active.push_back(n);
    }
  }
  for (int k = 0; k < count; ++k) out.col(perm[static_cast<std::size_t>(k)]) = h.col(k);
  return out;
}

template <typename T>
void lstm_backward(const LstmParams<T>& p, const LstmTape<T>& tape, const Mat<T>& d_out, LstmParams<T>& grad) {
  const int count = static_cast<int>(d_out.cols());
  const int hidden = static_cast<int>(p.w_hh.cols());
  if (count == 0) return;
  Mat<T> dh(hidden, count);
  Mat<T> dc = Mat<T>::Zero(hidden, count);
  for (int k = 0; k < count; ++k) dh.col(k) = d_out.col(tape.perm[static_cast<std::size_t>(k)]);

  Mat<T> dz;
  for (int t = static_cast<int>(tape.active.size()) - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    const int n = tape.active[ts];
    const auto& z = tape.gates[ts];
    const auto& tc = tape.tanh_c[ts];
    const auto i = z.topRows(hidden).array();
    const auto f = z.middleRows(hidden, hidden).array();
    const auto g = z.middleRows(2 * hidden, hidden).array();
    const auto o = z.bottomRows(hidden).array();

    const Mat<T> dct = dc.leftCols(n).array() + dh.leftCols(n).array() * o * (T(1) - tc.array().square());
    dz.resize(4 * hidden, n);
    dz.topRows(hidden) = dct.array() * g * i * (T(1) - i);
    dz.middleRows(hidden, hidden) = dct.array() * tape.c_prev[ts].array() * f * (T(1) - f);
    dz.middleRows(2 * hidden, hidden) = dct.array() * i * (T(1) - g.square());
    dz.bottomRows(hidden) = dh.leftCols(n).array() * tc.array() * o * (T(1) - o);

    grad.w_ih.noalias() += dz * tape.x[ts].transpose();
    grad.w_hh.noalias() += dz * tape.h_prev[ts].transpose();
    grad.bias += dz.rowwise().sum();
    dh.leftCols(n).noalias() = p.w_hh.transpose() * dz;
    dc.leftCols(n) = dct.array() * f;
  }
}

// ---------------------------------------------------------------------------
// LayerNorm over rows (features) of each column.

template <typename T>
struct LnTape {
  Mat<T> xhat;
  RowVec<T> rstd;
};

inline constexpr double kLayerNormEps = 1e-6;

template <typename T>
Mat<T> layer_norm(const Mat<T>& x, const Vec<T>& gamma, const Vec<T>& beta, LnTape<T>* tape) {
  const RowVec<T> mu = x.colwise().mean();
  Mat<T> xc = x.rowwise() - mu;
  const RowVec<T> var = xc.array().square().colwise().mean();
  const RowVec<T> rstd = (var.array() + T(kLayerNormEps)).rsqrt();
  xc.array().rowwise() *= rstd.array();
  Mat<T> y = (xc.array().colwise() * gamma.array()).colwise() + beta.array();
  if (tape) {
    tape->xhat = std::move(xc);
    tape->rstd = rstd;
  }
  return y;
}

template <typename T>
Mat<T> layer_norm_backward(const Mat<T>& dy, const Vec<T>& gamma, const LnTape<T>& tape, Vec<T>& g_gamma,
                           Vec<T>& g_beta) {
  g_gamma += (dy.array() * tape.xhat.array()).rowwise().sum().matrix();
  g_beta += dy.rowwise().sum();
  Mat<T> dxhat = dy.array().colwise() * gamma.array();
  const RowVec<T> m1 = dxhat.colwise().mean();
  const RowVec<T> m2 = (dxhat.array() * tape.xhat.array()).colwise().mean();
  Mat<T> dx = dxhat.rowwise() - m1;
  dx.array() -= tape.xhat.array().rowwise() * m2.array();
  dx.array().rowwise() *= tape.rstd.array();
  return dx;
}

// ---------------------------------------------------------------------------

template <typename T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(M_SQRT1_2)));
}

template <typename T>
T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * T(M_SQRT1_2)));
  const T pdf = std::exp(T(-0.5) * x * x) * T(0.3989422804014327);
  return cdf + x * pdf;
}

// ---------------------------------------------------------------------------
// Transformer encoder over several independent token sequences packed as
// column segments. Each segment starts with its classification token.

struct Segments {
  std::vector<int> offset;
  std::vector<int> count;

  int size() const { return static_cast<int>(offset.size()); }
};

template <typename T>
struct BlockTape {
  LnTape<T> ln1, ln2;
  Mat<T> a, qkv, ctx, h, pre1, act;
  std::vector<Mat<T>> probs;  // [segment * heads + head], keys x queries
};

template <typename T>
struct EncoderTape {
  std::vector<BlockTape<T>> blocks;
  LnTape<T> final_ln;
  Mat<T> cls_features;
};

template <typename T>
void attention_forward(const Mat<T>& qkv, const ModelConfig& cfg, const Segments& seg, Mat<T>& ctx,
                       std::vector<Mat<T>>* probs, Eigen::MatrixXd* head_mean_seg0,
                       std::vector<Eigen::MatrixXd>* heads_seg0) {
  const int d = cfg.embed_dim;
  const int dh = cfg.head_dim();
  const T scale = T(1) / std::sqrt(T(dh));
  ctx.resize(d, qkv.cols());
  if (probs) probs->clear();
  for (int s = 0; s < seg.size(); ++s) {
    const int off = seg.offset[static_cast<std::size_t>(s)];
    const int n = seg.count[static_cast<std::size_t>(s)];
    for (int h = 0; h < cfg.heads; ++h) {
      const auto q = qkv.block(h * dh, off, dh, n);
      const auto k = qkv.block(d + h * dh, off, dh, n);
      const auto v = qkv.block(2 * d + h * dh, off, dh, n);
      Mat<T> p = (k.transpose() * q) * scale;  // keys x queries
      const RowVec<T> mx = p.colwise().maxCoeff();
      p = (p.rowwise() - mx).array().exp();
      const RowVec<T> sum = p.colwise().sum();
      p.array().rowwise() /= sum.array();
      ctx.block(h * dh, off, dh, n).noalias() = v * p;
      if (s == 0 && head_mean_seg0) {
        if (h == 0) *head_mean_seg0 = Eigen::MatrixXd::Zero(n, n);
        *head_mean_seg0 += p.transpose().template cast<double>() / static_cast<double>(cfg.heads);
      }
      if (s == 0 && heads_seg0) heads_seg0->push_back(p.transpose().template cast<double>());
      if (probs) probs->push_back(std::move(p));
    }
  }
}

template <typename T>
Mat<T> attention_backward(const Mat<T>& qkv, const ModelConfig& cfg, const Segments& seg,
                          const std::vector<Mat<T>>& probs, const Mat<T>& d_ctx) {
  const int d = cfg.embed_dim;
  const int dh = cfg.head_dim();
  const T scale = T(1) / std::sqrt(T(dh));
  Mat<T> d_qkv(3 * d, qkv.cols());
  for (int s = 0; s < seg.size(); ++s) {
    const int off = seg.offset[static_cast<std::size_t>(s)];
    const int n = seg.count[static_cast<std::size_t>(s)];
    for (int h = 0; h < cfg.heads; ++h) {
      const auto& p = probs[static_cast<std::size_t>(s * cfg.heads + h)];
      const auto q = qkv.block(h * dh, off, dh, n);
      const auto k = qkv.block(d + h * dh, off, dh, n);
      const auto v = qkv.block(2 * d + h * dh, off, dh, n);
      const auto dc = d_ctx.block(h * dh, off, dh, n);
      d_qkv.block(2 * d + h * dh, off, dh, n).noalias() = dc * p.transpose();
      Mat<T> dp = v.transpose() * dc;
      const RowVec<T> dot = (p.array() * dp.array()).colwise().sum();
      Mat<T> ds = (p.array() * (dp.rowwise() - dot).array()) * scale;
      d_qkv.block(h * dh, off, dh, n).noalias() = k * ds;
      d_qkv.block(d + h * dh, off, dh, n).noalias() = q * ds.transpose();
    }
  }
  return d_qkv;
}

// Returns logits (C x segments).
template <typename T>
Mat<T> encoder_forward(const Parameters<T>& p, const ModelConfig& cfg, Mat<T> x, const Segments& seg,
                       EncoderTape<T>* tape, AttentionCapture* attention) {
  if (tape) tape->blocks.resize(p.blocks.size());
  if (attention) {
    attention->layers.clear();
    attention->heads.clear();
  }
  BlockTape<T> scratch;
  for (std::size_t l = 0; l < p.blocks.size(); ++l) {
    const auto& b = p.blocks[l];
    BlockTape<T>& bt = tape ? tape->blocks[l] : scratch;
    bt.a = layer_norm(x, b.ln1_gamma, b.ln1_beta, tape ? &bt.ln1 : nullptr);
    bt.qkv.noalias() = b.w_qkv * bt.a;
    bt.qkv.colwise() += b.b_qkv;
    Eigen::MatrixXd head_mean;
    std::vector<Eigen::MatrixXd> heads;
    attention_forward(bt.qkv, cfg, seg, bt.ctx, tape ? &bt.probs : nullptr, attention ? &head_mean : nullptr,
                      attention && attention->per_head ? &heads : nullptr);
    if (attention) {
      attention->layers.push_back(std::move(head_mean));
      if (attention->per_head) attention->heads.push_back(std::move(heads));
    }
    x.noalias() += b.w_out * bt.ctx;
    x.colwise() += b.b_out;
    bt.h = layer_norm(x, b.ln2_gamma, b.ln2_beta, tape ? &bt.ln2 : nullptr);
    bt.pre1.noalias() = b.w_fc1 * bt.h;
    bt.pre1.colwise() += b.b_fc1;
    bt.act = bt.pre1.unaryExpr([](T v) { return gelu(v); });
    x.noalias() += b.w_fc2 * bt.act;
    x.colwise() += b.b_fc2;
  }
  Mat<T> cls(cfg.embed_dim, seg.size());
  for (int s = 0; s < seg.size(); ++s) cls.col(s) = x.col(seg.offset[static_cast<std::size_t>(s)]);
  Mat<T> feat = layer_norm(cls, p.norm_gamma, p.norm_beta, tape ? &tape->final_ln : nullptr);
  Mat<T> logits = p.head_w * feat;
  logits.colwise() += p.head_b;
  if (tape) tape->cls_features = std::move(feat);
  return logits;
}

// Returns d(loss)/d(input tokens), accumulating parameter gradients.
template <typename T>
Mat<T> encoder_backward(const Parameters<T>& p, const ModelConfig& cfg, const Segments& seg,
                        const EncoderTape<T>& tape, const Mat<T>& d_logits, Parameters<T>& g, Eigen::Index tokens) {
  g.head_w.noalias() += d_logits * tape.cls_features.transpose();
  g.head_b += d_logits.rowwise().sum();
  const Mat<T> d_feat = p.head_w.transpose() * d_logits;
  const Mat<T> d_cls = layer_norm_backward(d_feat, p.norm_gamma, tape.final_ln, g.norm_gamma, g.norm_beta);

  Mat<T> dx = Mat<T>::Zero(cfg.embed_dim, tokens);
  for (int s = 0; s < seg.size(); ++s) dx.col(seg.offset[static_cast<std::size_t>(s)]) = d_cls.col(s);

  for (std::size_t l = p.blocks.size(); l-- > 0;) {
    const auto& b = p.blocks[l];
    auto& gb = g.blocks[l];
    const auto& bt = tape.blocks[l];

    gb.b_fc2 += dx.rowwise().sum();
    gb.w_fc2.noalias() += dx * bt.act.transpose();
    Mat<T> d_pre = b.w_fc2.transpose() * dx;
    d_pre.array() *= bt.pre1.unaryExpr([](T v) { return gelu_grad(v); }).array();
    gb.b_fc1 += d_pre.rowwise().sum();
    gb.w_fc1.noalias() += d_pre * bt.h.transpose();
    const Mat<T> d_h = b.w_fc1.transpose() * d_pre;
    dx += layer_norm_backward(d_h, b.ln2_gamma, bt.ln2, gb.ln2_gamma, gb.ln2_beta);

    gb.b_out += dx.rowwise().sum();
    gb.w_out.noalias() += dx * bt.ctx.transpose();
    const Mat<T> d_ctx = b.w_out.transpose() * dx;
    const Mat<T> d_qkv = attention_backward(bt.qkv, cfg, seg, bt.probs, d_ctx);
    gb.b_qkv += d_qkv.rowwise().sum();
    gb.w_qkv.noalias() += d_qkv * bt.a.transpose();
    const Mat<T> d_a = b.w_qkv.transpose() * d_qkv;
    dx += layer_norm_backward(d_a, b.ln1_gamma, bt.ln1, gb.ln1_gamma, gb.ln1_beta);
  }
  return dx;
}

}  // namespace sketchxai::model::detail
