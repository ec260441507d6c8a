#include "sketchxai/analysis/kmeans.hpp"

#include <limits>
#include <random>

#include "sketchxai/util/error.hpp"

namespace sketchxai::analysis {

int nearest_row(const Eigen::MatrixXd& candidates, const Eigen::RowVectorXd& x) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < candidates.rows(); ++c) {
    const double d = (candidates.row(c) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

double inertia(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    total += (centroids.row(nearest_row(centroids, points.row(i))) - points.row(i)).squaredNorm();
  }
  return total;
}

namespace {

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng) {
  const auto n = x.rows();
  Eigen::MatrixXd c(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  c.row(0) = x.row(first(rng));
  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2(i) = (x.row(i) - c.row(0)).squaredNorm();
  for (int j = 1; j < k; ++j) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (d2(i) <= 0.0) continue;
        r -= d2(i);
        if (r < 0.0) {
          pick = i;
          break;
        }
      }
      while (d2(pick) <= 0.0 && pick > 0) --pick;
    }
    c.row(j) = x.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), (x.row(i) - c.row(j)).squaredNorm());
  }
  return c;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iters) {
  const auto n = points.rows();
  if (k <= 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  if (k > n) throw Error(ErrorCode::kInvalidArgument, "k exceeds the number of points");

  std::mt19937_64 rng(seed);
  KMeansResult r;
  r.centroids = seed_plus_plus(points, k, rng);
  r.assignment.assign(static_cast<std::size_t>(n), -1);

  for (int it = 0; it < std::max(1, max_iters); ++it) {
    bool changed = false;
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = nearest_row(r.centroids, points.row(i));
      if (c != r.assignment[static_cast<std::size_t>(i)]) changed = true;
      r.assignment[static_cast<std::size_t>(i)] = c;
      total += (r.centroids.row(c) - points.row(i)).squaredNorm();
    }
    r.inertia_history.push_back(total);
    r.iterations = it + 1;
    if (!changed && it > 0) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = r.assignment[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        r.centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        continue;
      }
      // Re-seed at the point farthest from its own centroid.
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = (points.row(i) - r.centroids.row(r.assignment[static_cast<std::size_t>(i)])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      r.centroids.row(c) = points.row(far);
      r.assignment[static_cast<std::size_t>(far)] = c;
    }
  }

  r.member_counts.assign(static_cast<std::size_t>(k), 0);
  for (int c : r.assignment) ++r.member_counts[static_cast<std::size_t>(c)];
  return r;
}

}  // namespace sketchxai::analysis
