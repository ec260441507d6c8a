#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "sketchxai/analysis/embeddings.hpp"
#include "sketchxai/analysis/kmeans.hpp"
#include "sketchxai/model/network.hpp"

namespace sketchxai::analysis {

// Learned stroke primitives: k-means centroids in shape-embedding space, each
// represented by the training stroke whose embedding lies nearest to it.
struct PrimitiveCodebook {
  Eigen::MatrixXd centroids;                  // k x d
  Eigen::MatrixXd representative_embeddings;  // k x d
  std::vector<StrokeRef> representatives;
  std::vector<std::vector<data::ShapePoint>> representative_shapes;
  std::vector<std::size_t> member_counts;
  std::vector<double> inertia_history;

  int size() const { return static_cast<int>(centroids.rows()); }
  // Lowest-id nearest centroid.
  int nearest_centroid(const Eigen::RowVectorXd& embedding) const;
  // Lowest-id nearest representative embedding.
  int nearest_primitive(const Eigen::RowVectorXd& embedding) const;
};

PrimitiveCodebook build_codebook(const ShapeEmbeddings& embeddings, int k, std::uint64_t seed, int max_iters = 100);

// JSON: {"format":"sketchxai.codebook","version":1,"k","embed_dim","centroids",
// "representatives":[{"sketch","stroke","category","shape","embedding"}],
// "member_counts"}.
void save_codebook(const PrimitiveCodebook& codebook, const std::filesystem::path& path);
PrimitiveCodebook load_codebook(const std::filesystem::path& path);

// Top-1 accuracy after every stroke's shape embedding is replaced by the
// representative embedding of its nearest centroid.
double primitive_replace_accuracy(const model::Network<double>& net, const std::vector<data::Sketch>& sketches,
                                  const PrimitiveCodebook& codebook);

struct ShapeInversionStep {
  std::vector<int> primitive_ids;  // per stroke
  double p_target = 0.0;
  double p_orig = 0.0;
};

struct ShapeInversionResult {
  int original_label = 0;
  int target_label = 0;
  std::vector<ShapeInversionStep> steps;  // steps + 1 entries; entry 0 is the initial snap
};

// Gradient descent on the shape embeddings with locations fixed; after every
// step each embedding is snapped to its nearest primitive and the snapped
// value seeds the next step.
ShapeInversionResult shape_inversion(const model::Network<double>& net, const data::Sketch& sketch, int target,
                                     const PrimitiveCodebook& codebook, int steps, double learning_rate = 1.0);

}  // namespace sketchxai::analysis
