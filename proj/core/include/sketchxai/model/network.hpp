#pragma once

#include <span>
#include <vector>

#include "sketchxai/data/decompose.hpp"
#include "sketchxai/model/config.hpp"
#include "sketchxai/model/parameters.hpp"

namespace sketchxai::model {

// Compact per-sketch model input: only real strokes and real points.
template <typename T>
struct SketchInput {
  std::vector<Mat<T>> shapes;  // per stroke: 4 x real points (dx, dy, p1, p2)
  Mat<T> locations;            // 2 x N
  std::vector<int> orders;     // N

  int stroke_count() const { return static_cast<int>(shapes.size()); }
};

// Applies the tokenizer truncation rules, so the result matches what
// tokenize() keeps.
template <typename T>
SketchInput<T> make_input(const std::vector<data::DecomposedStroke>& strokes, const ModelConfig& config);

// Reads the real strokes (mask) and real points (point counts) back out of the
// fixed-size tensors.
template <typename T>
SketchInput<T> make_input(const data::TokenizedSketch& tokenized);

struct ClassScores {
  std::vector<double> logits;
  std::vector<double> probabilities;

  int argmax() const;
};

// Softmax via log-sum-exp.
ClassScores make_scores(std::span<const double> logits);

// -log softmax(logits)[label], computed from the logits.
double cross_entropy(const ClassScores& scores, int label);

// Attention weights of a single-sketch forward pass. Entry (q, k) of a map is
// the weight query token q puts on key token k; token 0 is the
// classification token. `layers` holds the head mean per layer; `heads` is
// filled only when per_head is set.
struct AttentionCapture {
  bool per_head = false;
  std::vector<Eigen::MatrixXd> layers;
  std::vector<std::vector<Eigen::MatrixXd>> heads;
};

template <typename T>
struct TokenGradient {
  ClassScores scores;
  double loss = 0.0;
  Mat<T> d_locations;         // 2 x N
  Mat<T> d_shape_embeddings;  // d x N
};

template <typename T>
struct BatchResult {
  double mean_loss = 0.0;
  int correct = 0;
};

// Shape/location/order stroke encoder followed by a transformer over
// [CLS, stroke tokens]. Inference methods are const and re-entrant; all
// per-call state lives on the stack.
template <typename T>
class Network {
public:
  Network(ModelConfig config, Parameters<T> params);

  const ModelConfig& config() const { return config_; }
  const Parameters<T>& params() const { return params_; }

  // d x S; concatenated final forward/backward LSTM states per stroke.
  Mat<T> encode_shapes(std::span<const Mat<T>> shapes) const;
  // d x S; affine map of the 2-D locations.
  Mat<T> embed_locations(const Mat<T>& locations) const;
  // d x S; order-table lookup. Throws for ids >= max_strokes.
  Mat<T> embed_orders(std::span<const int> orders) const;

  ClassScores forward(const SketchInput<T>& input, AttentionCapture* attention = nullptr) const;
  ClassScores forward(const data::TokenizedSketch& tokenized, AttentionCapture* attention = nullptr) const;
  std::vector<ClassScores> forward_batch(std::span<const SketchInput<T>* const> batch) const;

  // Forward from precomputed shape embeddings (d x N, ignored when the shape
  // branch is disabled).
  ClassScores forward_tokens(const Mat<T>& shape_embeddings, const Mat<T>& locations, std::span<const int> orders,
                             AttentionCapture* attention = nullptr) const;

  // Cross-entropy toward `target` and its gradient with respect to the stroke
  // locations and the shape embeddings; everything else is held fixed.
  TokenGradient<T> token_gradient(const Mat<T>& shape_embeddings, const Mat<T>& locations,
                                  std::span<const int> orders, int target) const;

  // Mean cross-entropy over the batch; accumulates d(mean loss)/d(params)
  // into `grads` (which must be shaped like params, e.g. Parameters::zeros).
  BatchResult<T> loss_and_gradients(std::span<const SketchInput<T>* const> batch, std::span<const int> labels,
                                    Parameters<T>& grads) const;

  Parameters<T>& mutable_params() { return params_; }

private:
  ModelConfig config_;
  Parameters<T> params_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace sketchxai::model
