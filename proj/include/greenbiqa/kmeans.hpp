#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greenbiqa/error.hpp"
#include "greenbiqa/random.hpp"

namespace greenbiqa {

struct KMeansParams {
  int k = 4;
  int max_iterations = 300;
  double tolerance = 1e-6;  // max centroid movement
  std::uint64_t seed = 0;
};

struct KMeansResult {
  Eigen::MatrixXd centroids;  // k x d
  std::vector<int> assignment;
  std::vector<double> objective;  // after each assignment step
  int iterations = 0;
};

// Index of the nearest centroid by squared Euclidean distance, ties to the
// lower index.
inline int nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                            double* dist2 = nullptr) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist2) *dist2 = best_d;
  return best;
}

namespace detail {

inline Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& x, int k, Rng& rng) {
  const auto n = x.rows();
  Eigen::MatrixXd c(k, x.cols());
  c.row(0) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = (x.row(i) - c.row(0)).squaredNorm();
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (double d : d2) total += d;
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (acc > target && d2[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    c.row(j) = x.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], (x.row(i) - c.row(j)).squaredNorm());
  }
  return c;
}

}  // namespace detail

// k-means++ seeding followed by Lloyd iterations. Empty clusters keep their
// previous centroid. The returned assignment is recomputed from the final
// centroids, so nearest_centroid() reproduces it exactly.
inline KMeansResult kmeans(const Eigen::MatrixXd& x, const KMeansParams& params) {
  const auto n = x.rows();
  if (params.k < 1) throw ConfigError("kmeans: k must be >= 1");
  {
    std::set<std::vector<double>> distinct;
    for (Eigen::Index i = 0; i < n && static_cast<int>(distinct.size()) < params.k; ++i) {
      Eigen::RowVectorXd r = x.row(i);
      distinct.insert(std::vector<double>(r.data(), r.data() + r.size()));
    }
    if (static_cast<int>(distinct.size()) < params.k)
      throw FitError("kmeans: fewer distinct points than k=" + std::to_string(params.k));
  }
  Rng rng(params.seed);
  KMeansResult res;
  res.centroids = detail::kmeanspp_seed(x, params.k, rng);
  res.assignment.assign(static_cast<std::size_t>(n), 0);

  auto assign = [&]() {
    double obj = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double d = 0.0;
      res.assignment[static_cast<std::size_t>(i)] = nearest_centroid(res.centroids, x.row(i), &d);
      obj += d;
    }
    return obj;
  };

  for (int it = 0; it < params.max_iterations; ++it) {
    res.objective.push_back(assign());
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(params.k, x.cols());
    std::vector<int> count(static_cast<std::size_t>(params.k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = res.assignment[static_cast<std::size_t>(i)];
      next.row(c) += x.row(i);
      ++count[static_cast<std::size_t>(c)];
    }
    double moved = 0.0;
    for (int c = 0; c < params.k; ++c) {
      if (count[static_cast<std::size_t>(c)] == 0) {
        next.row(c) = res.centroids.row(c);
      } else {
        next.row(c) /= count[static_cast<std::size_t>(c)];
      }
      moved = std::max(moved, (next.row(c) - res.centroids.row(c)).norm());
    }
    res.centroids = std::move(next);
    res.iterations = it + 1;
    if (moved < params.tolerance) break;
  }
  res.objective.push_back(assign());
  return res;
}

}  // namespace greenbiqa
