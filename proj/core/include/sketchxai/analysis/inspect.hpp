#pragma once

#include <Eigen/Core>

#include "sketchxai/data/sketch.hpp"
#include "sketchxai/model/network.hpp"

namespace sketchxai::analysis {

// Cosine similarity between the first m order embeddings (m x m).
Eigen::MatrixXd order_similarity(const model::Network<double>& net, int m);

// Attention of every layer over the classification token and the real strokes
// ((1 + strokes) square, rows are queries), averaged over heads. Per-head
// matrices are filled in as well when `per_head` is set.
model::AttentionCapture attention_export(const model::Network<double>& net, const data::Sketch& sketch,
                                         bool per_head = false);

}  // namespace sketchxai::analysis
