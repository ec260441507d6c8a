#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace sketchxai::analysis {

struct KMeansResult {
  Eigen::MatrixXd centroids;  // k x d
  std::vector<int> assignment;
  std::vector<std::size_t> member_counts;
  // Inertia after every assignment pass; non-increasing.
  std::vector<double> inertia_history;
  int iterations = 0;

  double inertia() const { return inertia_history.empty() ? 0.0 : inertia_history.back(); }
};

// Lloyd's algorithm with k-means++ seeding. An empty cluster is re-seeded at
// the point farthest from its current centroid. Distance ties go to the lowest
// centroid id. Deterministic for a given seed.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iters = 100);

// Sum of squared distances to the nearest centroid.
double inertia(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids);

int nearest_row(const Eigen::MatrixXd& candidates, const Eigen::RowVectorXd& x);

}  // namespace sketchxai::analysis
