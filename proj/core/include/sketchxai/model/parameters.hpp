#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sketchxai/model/config.hpp"

namespace sketchxai::model {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Gate rows are stacked as input, forget, cell, output.
template <typename T>
struct LstmParams {
  Mat<T> w_ih;  // 4H x 4
  Mat<T> w_hh;  // 4H x H
  Vec<T> bias;  // 4H
};

// Pre-norm encoder block: x += Attn(LN1(x)); x += MLP(LN2(x)).
template <typename T>
struct BlockParams {
  Vec<T> ln1_gamma, ln1_beta;
  Mat<T> w_qkv;  // 3d x d
  Vec<T> b_qkv;
  Mat<T> w_out;  // d x d
  Vec<T> b_out;
  Vec<T> ln2_gamma, ln2_beta;
  Mat<T> w_fc1;  // (r*d) x d
  Vec<T> b_fc1;
  Mat<T> w_fc2;  // d x (r*d)
  Vec<T> b_fc2;
};

template <typename T>
struct TensorRef {
  std::string name;
  T* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index size() const { return rows * cols; }
};

template <typename T>
struct Parameters {
  LstmParams<T> shape_fwd, shape_bwd;
  Mat<T> loc_w;        // d x 2
  Vec<T> loc_b;        // d
  Mat<T> order_table;  // d x max_strokes, one column per order id
  Vec<T> cls_token;    // d
  std::vector<BlockParams<T>> blocks;
  Vec<T> norm_gamma, norm_beta;
  Mat<T> head_w;  // C x d
  Vec<T> head_b;

  static Parameters zeros(const ModelConfig& config);

  // Every tensor in a fixed canonical order. Names are stable and used as keys
  // in checkpoint files.
  std::vector<TensorRef<T>> tensors();
  std::vector<TensorRef<const T>> tensors() const;

  std::size_t parameter_count() const;

  template <typename U>
  Parameters<U> cast() const;
};

// Truncated-normal (sigma 0.02, cut at 2 sigma) for affine maps and tables,
// Xavier-uniform LSTM input weights, orthogonal recurrent blocks, forget-gate
// bias 1, unit LayerNorm gains.
Parameters<float> init_parameters(const ModelConfig& config, std::uint64_t seed);

extern template struct Parameters<float>;
extern template struct Parameters<double>;

}  // namespace sketchxai::model
