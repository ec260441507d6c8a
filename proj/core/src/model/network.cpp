#include "sketchxai/model/network.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "layers.hpp"
#include "sketchxai/util/error.hpp"

namespace sketchxai::model {

template <typename T>
SketchInput<T> make_input(const std::vector<data::DecomposedStroke>& strokes, const ModelConfig& config) {
  const auto kept = data::truncate(strokes, config.limits());
  SketchInput<T> in;
  in.locations.resize(2, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& ds = kept[i];
    Mat<T> shape(4, static_cast<Eigen::Index>(ds.shape.size()));
    for (std::size_t j = 0; j < ds.shape.size(); ++j) {
      const auto v = ds.shape[j].as_vector();
      for (int c = 0; c < 4; ++c) shape(c, static_cast<Eigen::Index>(j)) = static_cast<T>(v[static_cast<std::size_t>(c)]);
    }
    in.shapes.push_back(std::move(shape));
    in.locations(0, static_cast<Eigen::Index>(i)) = static_cast<T>(ds.location.x);
    in.locations(1, static_cast<Eigen::Index>(i)) = static_cast<T>(ds.location.y);
    in.orders.push_back(ds.order);
  }
  return in;
}

template <typename T>
SketchInput<T> make_input(const data::TokenizedSketch& t) {
  SketchInput<T> in;
  std::vector<int> slots;
  for (int i = 0; i < t.max_strokes; ++i)
    if (t.stroke_mask[static_cast<std::size_t>(i)]) slots.push_back(i);
  in.locations.resize(2, static_cast<Eigen::Index>(slots.size()));
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const int i = slots[k];
    const int n = t.point_counts[static_cast<std::size_t>(i)];
    Mat<T> shape(4, n);
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < 4; ++c) shape(c, j) = static_cast<T>(t.shape_at(i, j, c));
    in.shapes.push_back(std::move(shape));
    in.locations(0, static_cast<Eigen::Index>(k)) = static_cast<T>(t.location_tensor[static_cast<std::size_t>(i) * 2]);
    in.locations(1, static_cast<Eigen::Index>(k)) = static_cast<T>(t.location_tensor[static_cast<std::size_t>(i) * 2 + 1]);
    in.orders.push_back(t.order_ids[static_cast<std::size_t>(i)]);
  }
  return in;
}

int ClassScores::argmax() const {
  int best = 0;
  for (std::size_t i = 1; i < probabilities.size(); ++i)
    if (probabilities[i] > probabilities[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

ClassScores make_scores(std::span<const double> logits) {
  ClassScores s;
  s.logits.assign(logits.begin(), logits.end());
  double mx = -INFINITY;
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  s.probabilities.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    s.probabilities[i] = std::exp(logits[i] - mx);
    sum += s.probabilities[i];
  }
  for (auto& p : s.probabilities) p /= sum;
  return s;
}

double cross_entropy(const ClassScores& scores, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= scores.logits.size()) {
    throw Error(ErrorCode::kInvalidArgument, "label outside class range");
  }
  double mx = -INFINITY;
  for (double v : scores.logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : scores.logits) sum += std::exp(v - mx);
  return mx + std::log(sum) - scores.logits[static_cast<std::size_t>(label)];
}

namespace {

template <typename T>
ClassScores scores_from_column(const Mat<T>& logits, Eigen::Index col) {
  std::vector<double> l(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) l[static_cast<std::size_t>(i)] = static_cast<double>(logits(i, col));
  return make_scores(l);
}

// Token layout for a batch of sketches: per sketch one CLS column followed by
// its stroke columns.
template <typename T>
struct TokenLayout {
  detail::Segments seg;
  std::vector<int> stroke_offset;  // first stroke column in the shape-embedding matrix
  Eigen::Index tokens = 0;
};

template <typename T>
TokenLayout<T> layout_for(std::span<const int> stroke_counts) {
  TokenLayout<T> lay;
  int tok = 0;
  int strokes = 0;
  for (int n : stroke_counts) {
    lay.seg.offset.push_back(tok);
    lay.seg.count.push_back(1 + n);
    lay.stroke_offset.push_back(strokes);
    tok += 1 + n;
    strokes += n;
  }
  lay.tokens = tok;
  return lay;
}

void check_orders(std::span<const int> orders, const ModelConfig& cfg) {
  for (int o : orders) {
    if (o < 0 || o >= cfg.max_strokes) {
      throw Error(ErrorCode::kInvalidArgument, "order id " + std::to_string(o) + " outside [0, max_strokes)");
    }
  }
}

}  // namespace

template <typename T>
Network<T>::Network(ModelConfig config, Parameters<T> params) : config_(config), params_(std::move(params)) {
  config_.validate();
  const auto expected = Parameters<T>::zeros(config_).tensors();
  const auto actual = std::as_const(params_).tensors();
  if (expected.size() != actual.size()) throw Error(ErrorCode::kConfigMismatch, "parameter set does not match config");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].rows != actual[i].rows || expected[i].cols != actual[i].cols) {
      throw Error(ErrorCode::kConfigMismatch, "parameter '" + expected[i].name + "' has wrong shape");
    }
  }
}

template <typename T>
Mat<T> Network<T>::encode_shapes(std::span<const Mat<T>> shapes) const {
  std::vector<const Mat<T>*> ptrs;
  ptrs.reserve(shapes.size());
  for (const auto& s : shapes) ptrs.push_back(&s);
  const int h = config_.lstm_hidden();
  Mat<T> out(config_.embed_dim, static_cast<Eigen::Index>(shapes.size()));
  out.topRows(h) = detail::lstm_forward<T>(params_.shape_fwd, ptrs, false, nullptr);
  out.bottomRows(h) = detail::lstm_forward<T>(params_.shape_bwd, ptrs, true, nullptr);
  return out;
}

template <typename T>
Mat<T> Network<T>::embed_locations(const Mat<T>& locations) const {
  Mat<T> out = params_.loc_w * locations;
  out.colwise() += params_.loc_b;
  return out;
}

template <typename T>
Mat<T> Network<T>::embed_orders(std::span<const int> orders) const {
  check_orders(orders, config_);
  Mat<T> out(config_.embed_dim, static_cast<Eigen::Index>(orders.size()));
  for (std::size_t i = 0; i < orders.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = params_.order_table.col(orders[i]);
  return out;
}

namespace {

// Sums the enabled branches into stroke tokens and prepends the CLS token.
template <typename T>
Mat<T> assemble_tokens(const Network<T>& net, const TokenLayout<T>& lay, const Mat<T>& shape_emb,
                       const Mat<T>& locations, std::span<const int> orders) {
  const auto& cfg = net.config();
  const auto& p = net.params();
  Mat<T> x(cfg.embed_dim, lay.tokens);
  Mat<T> strokes = Mat<T>::Zero(cfg.embed_dim, locations.cols());
  if (cfg.use_shape) strokes += shape_emb;
  if (cfg.use_location) strokes += net.embed_locations(locations);
  if (cfg.use_order) strokes += net.embed_orders(orders);
  for (int s = 0; s < lay.seg.size(); ++s) {
    const auto ss = static_cast<std::size_t>(s);
    x.col(lay.seg.offset[ss]) = p.cls_token;
    const int n = lay.seg.count[ss] - 1;
    x.middleCols(lay.seg.offset[ss] + 1, n) = strokes.middleCols(lay.stroke_offset[ss], n);
  }
  return x;
}

// Stroke-token gradients gathered back into stroke order (d x total strokes).
template <typename T>
Mat<T> gather_stroke_grads(const TokenLayout<T>& lay, const Mat<T>& dx, Eigen::Index total_strokes) {
  Mat<T> out(dx.rows(), total_strokes);
  for (int s = 0; s < lay.seg.size(); ++s) {
    const auto ss = static_cast<std::size_t>(s);
    const int n = lay.seg.count[ss] - 1;
    out.middleCols(lay.stroke_offset[ss], n) = dx.middleCols(lay.seg.offset[ss] + 1, n);
  }
  return out;
}

}  // namespace

template <typename T>
ClassScores Network<T>::forward_tokens(const Mat<T>& shape_embeddings, const Mat<T>& locations,
                                       std::span<const int> orders, AttentionCapture* attention) const {
  const int n = static_cast<int>(locations.cols());
  if (static_cast<int>(orders.size()) != n || (config_.use_shape && shape_embeddings.cols() != n)) {
    throw Error(ErrorCode::kInvalidArgument, "stroke input sizes disagree");
  }
  if (n > config_.max_strokes) throw Error(ErrorCode::kInvalidArgument, "more strokes than max_strokes");
  const std::array<int, 1> counts{n};
  const auto lay = layout_for<T>(counts);
  Mat<T> x = assemble_tokens(*this, lay, shape_embeddings, locations, orders);
  const Mat<T> logits = detail::encoder_forward<T>(params_, config_, std::move(x), lay.seg, nullptr, attention);
  return scores_from_column(logits, 0);
}

template <typename T>
ClassScores Network<T>::forward(const SketchInput<T>& input, AttentionCapture* attention) const {
  Mat<T> shape_emb;
  if (config_.use_shape) shape_emb = encode_shapes(input.shapes);
  return forward_tokens(shape_emb, input.locations, input.orders, attention);
}

template <typename T>
ClassScores Network<T>::forward(const data::TokenizedSketch& tokenized, AttentionCapture* attention) const {
  if (tokenized.max_strokes != config_.max_strokes || tokenized.max_points != config_.max_points) {
    throw Error(ErrorCode::kConfigMismatch, "tokenized sketch limits differ from model config");
  }
  return forward(make_input<T>(tokenized), attention);
}

template <typename T>
std::vector<ClassScores> Network<T>::forward_batch(std::span<const SketchInput<T>* const> batch) const {
  std::vector<int> counts;
  std::vector<const Mat<T>*> shape_ptrs;
  std::vector<int> orders;
  Eigen::Index total = 0;
  for (const auto* in : batch) {
    counts.push_back(in->stroke_count());
    total += in->stroke_count();
    for (const auto& s : in->shapes) shape_ptrs.push_back(&s);
    orders.insert(orders.end(), in->orders.begin(), in->orders.end());
  }
  Mat<T> locations(2, total);
  Eigen::Index col = 0;
  for (const auto* in : batch) {
    locations.middleCols(col, in->stroke_count()) = in->locations;
    col += in->stroke_count();
  }
  Mat<T> shape_emb;
  if (config_.use_shape) {
    const int h = config_.lstm_hidden();
    shape_emb.resize(config_.embed_dim, total);
    shape_emb.topRows(h) = detail::lstm_forward<T>(params_.shape_fwd, shape_ptrs, false, nullptr);
    shape_emb.bottomRows(h) = detail::lstm_forward<T>(params_.shape_bwd, shape_ptrs, true, nullptr);
  }
  const auto lay = layout_for<T>(counts);
  Mat<T> x = assemble_tokens(*this, lay, shape_emb, locations, orders);
  const Mat<T> logits = detail::encoder_forward<T>(params_, config_, std::move(x), lay.seg, nullptr, nullptr);
  std::vector<ClassScores> out;
  out.reserve(batch.size());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) out.push_back(scores_from_column(logits, b));
  return out;
}

template <typename T>
TokenGradient<T> Network<T>::token_gradient(const Mat<T>& shape_embeddings, const Mat<T>& locations,
                                            std::span<const int> orders, int target) const {
  const int n = static_cast<int>(locations.cols());
  if (static_cast<int>(orders.size()) != n || (config_.use_shape && shape_embeddings.cols() != n)) {
    throw Error(ErrorCode::kInvalidArgument, "stroke input sizes disagree");
  }
  if (target < 0 || target >= config_.num_classes) throw Error(ErrorCode::kInvalidArgument, "target outside class range");
  const std::array<int, 1> counts{n};
  const auto lay = layout_for<T>(counts);
  Mat<T> x = assemble_tokens(*this, lay, shape_embeddings, locations, orders);
  detail::EncoderTape<T> tape;
  const Mat<T> logits = detail::encoder_forward<T>(params_, config_, std::move(x), lay.seg, &tape, nullptr);

  TokenGradient<T> out;
  out.scores = scores_from_column(logits, 0);
  out.loss = cross_entropy(out.scores, target);
  Mat<T> d_logits(config_.num_classes, 1);
  for (int c = 0; c < config_.num_classes; ++c) d_logits(c, 0) = static_cast<T>(out.scores.probabilities[static_cast<std::size_t>(c)]);
  d_logits(target, 0) -= T(1);

  auto scratch = Parameters<T>::zeros(config_);
  const Mat<T> dx = detail::encoder_backward<T>(params_, config_, lay.seg, tape, d_logits, scratch, lay.tokens);
  const Mat<T> d_strokes = gather_stroke_grads(lay, dx, n);
  out.d_locations = config_.use_location ? Mat<T>(params_.loc_w.transpose() * d_strokes) : Mat<T>::Zero(2, n);
  out.d_shape_embeddings = config_.use_shape ? d_strokes : Mat<T>::Zero(config_.embed_dim, n);
  return out;
}

template <typename T>
BatchResult<T> Network<T>::loss_and_gradients(std::span<const SketchInput<T>* const> batch, std::span<const int> labels,
                                              Parameters<T>& grads) const {
  if (batch.size() != labels.size() || batch.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "batch and labels must be non-empty and equally sized");
  }
  std::vector<int> counts;
  std::vector<const Mat<T>*> shape_ptrs;
  std::vector<int> orders;
  Eigen::Index total = 0;
  for (const auto* in : batch) {
    counts.push_back(in->stroke_count());
    total += in->stroke_count();
    for (const auto& s : in->shapes) shape_ptrs.push_back(&s);
    orders.insert(orders.end(), in->orders.begin(), in->orders.end());
  }
  Mat<T> locations(2, total);
  Eigen::Index col = 0;
  for (const auto* in : batch) {
    locations.middleCols(col, in->stroke_count()) = in->locations;
    col += in->stroke_count();
  }

  const int h = config_.lstm_hidden();
  detail::LstmTape<T> tape_fwd, tape_bwd;
  Mat<T> shape_emb;
  if (config_.use_shape) {
    shape_emb.resize(config_.embed_dim, total);
    shape_emb.topRows(h) = detail::lstm_forward<T>(params_.shape_fwd, shape_ptrs, false, &tape_fwd);
    shape_emb.bottomRows(h) = detail::lstm_forward<T>(params_.shape_bwd, shape_ptrs, true, &tape_bwd);
  }
  const auto lay = layout_for<T>(counts);
  Mat<T> x = assemble_tokens(*this, lay, shape_emb, locations, orders);
  detail::EncoderTape<T> tape;
  const Mat<T> logits = detail::encoder_forward<T>(params_, config_, std::move(x), lay.seg, &tape, nullptr);

  const auto bsz = static_cast<Eigen::Index>(batch.size());
  Mat<T> d_logits(config_.num_classes, bsz);
  BatchResult<T> result;
  double loss_sum = 0.0;
  for (Eigen::Index b = 0; b < bsz; ++b) {
    const auto scores = scores_from_column(logits, b);
    const int y = labels[static_cast<std::size_t>(b)];
    loss_sum += cross_entropy(scores, y);
    if (scores.argmax() == y) ++result.correct;
    for (int c = 0; c < config_.num_classes; ++c) {
      d_logits(c, b) = static_cast<T>(scores.probabilities[static_cast<std::size_t>(c)]) / static_cast<T>(bsz);
    }
    d_logits(y, b) -= T(1) / static_cast<T>(bsz);
  }
  result.mean_loss = loss_sum / static_cast<double>(bsz);

  const Mat<T> dx = detail::encoder_backward<T>(params_, config_, lay.seg, tape, d_logits, grads, lay.tokens);
  for (int s = 0; s < lay.seg.size(); ++s) grads.cls_token += dx.col(lay.seg.offset[static_cast<std::size_t>(s)]);
  const Mat<T> d_strokes = gather_stroke_grads(lay, dx, total);
  if (config_.use_location) {
    grads.loc_w.noalias() += d_strokes * locations.transpose();
    grads.loc_b += d_strokes.rowwise().sum();
  }
  if (config_.use_order) {
    for (Eigen::Index i = 0; i < total; ++i) grads.order_table.col(orders[static_cast<std::size_t>(i)]) += d_strokes.col(i);
  }
  if (config_.use_shape) {
    detail::lstm_backward<T>(params_.shape_fwd, tape_fwd, d_strokes.topRows(h), grads.shape_fwd);
    detail::lstm_backward<T>(params_.shape_bwd, tape_bwd, d_strokes.bottomRows(h), grads.shape_bwd);
  }
  return result;
}

template SketchInput<float> make_input<float>(const std::vector<data::DecomposedStroke>&, const ModelConfig&);
template SketchInput<double> make_input<double>(const std::vector<data::DecomposedStroke>&, const ModelConfig&);
template SketchInput<float> make_input<float>(const data::TokenizedSketch&);
template SketchInput<double> make_input<double>(const data::TokenizedSketch&);
template class Network<float>;
template class Network<double>;

}  // namespace sketchxai::model
