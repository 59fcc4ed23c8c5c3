#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greenbiqa/error.hpp"

namespace greenbiqa {

inline constexpr int kDefaultRftBins = 15;

struct RftScore {
  double cost = 0.0;
  double threshold = std::numeric_limits<double>::quiet_NaN();  // NaN: constant feature
};

namespace detail {

inline double population_std(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

// Partition cost for one threshold: sqrt((SSE_left + SSE_right) / n), each
// side scored around its own mean, sums taken in input order. Negative when a
// side is empty.
inline double partition_cost(std::span<const double> values, std::span<const double> targets, double t) {
  const std::size_t n = values.size();
  double sl = 0.0, sr = 0.0;
  std::size_t nl = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i] <= t) {
      sl += targets[i];
      ++nl;
    } else {
      sr += targets[i];
    }
  }
  if (nl == 0 || nl == n) return -1.0;
  const double ml = sl / static_cast<double>(nl), mr = sr / static_cast<double>(n - nl);
  double ssl = 0.0, ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i] <= t)
      ssl += (targets[i] - ml) * (targets[i] - ml);
    else
      ssr += (targets[i] - mr) * (targets[i] - mr);
  }
  return std::sqrt((ssl + ssr) / static_cast<double>(n));
}

}  // namespace detail

// Candidate partition points: for b = 1..bins, the midpoint between the sorted
// values at ranks r-1 and r with r = floor(b n / (bins + 1)) clamped to
// [1, n-1]. Duplicates are dropped; the result is ascending.
inline std::vector<double> rft_candidates(std::span<const double> sorted_values, int bins) {
  const std::size_t n = sorted_values.size();
  std::vector<double> out;
  if (n < 2) return out;
  for (int b = 1; b <= bins; ++b) {
    std::size_t r = static_cast<std::size_t>(b) * n / static_cast<std::size_t>(bins + 1);
    r = std::clamp<std::size_t>(r, 1, n - 1);
    const double t = 0.5 * (sorted_values[r - 1] + sorted_values[r]);
    if (out.empty() || t != out.back()) out.push_back(t);
  }
  return out;
}

// Best two-bin partition of `values` (left: value <= threshold) scored by the
// RMSE of predicting each side by its target mean.
inline RftScore rft_score(std::span<const double> values, std::span<const double> targets,
                          int bins = kDefaultRftBins) {
  const std::size_t n = values.size();
  if (n != targets.size()) throw GeometryError("rft_score: values/targets length mismatch");
  if (n < 2) throw DataError("rft_score: need at least 2 samples");
  if (bins < 1) throw ConfigError("rft_score: bins must be positive");

  std::vector<double> sv(values.begin(), values.end());
  std::sort(sv.begin(), sv.end());
  const double constant_cost = detail::population_std(targets);
  if (sv.front() == sv.back()) return {constant_cost, std::numeric_limits<double>::quiet_NaN()};

  RftScore best{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::quiet_NaN()};
  for (double t : rft_candidates(sv, bins)) {
    const double cost = detail::partition_cost(values, targets, t);
    if (cost >= 0.0 && cost < best.cost) best = {cost, t};
  }
  if (!std::isfinite(best.cost)) return {constant_cost, std::numeric_limits<double>::quiet_NaN()};
  return best;
}

struct RftResult {
  std::vector<double> costs;
  std::vector<double> thresholds;
  std::vector<int> order;     // ascending cost, ties to lower index
  std::vector<int> selected;  // prefix of `order`

  void write_cost_curve_csv(std::ostream& os) const {
    os << "rank,dim_index,rmse\n";
    for (std::size_t r = 0; r < order.size(); ++r)
      os << r << ',' << order[r] << ',' << costs[static_cast<std::size_t>(order[r])] << '\n';
  }

  std::vector<double> sorted_costs() const {
    std::vector<double> out;
    out.reserve(order.size());
    for (int i : order) out.push_back(costs[static_cast<std::size_t>(i)]);
    return out;
  }
};

// Ranks every column of `matrix` (samples x dims) and keeps the `count` best.
inline RftResult rft_select(const Eigen::MatrixXd& matrix, std::span<const double> targets, int count,
                            int bins = kDefaultRftBins) {
  const auto dims = static_cast<int>(matrix.cols());
  if (count < 0 || count > dims)
    throw ConfigError("rft select: count " + std::to_string(count) + " exceeds " +
                      std::to_string(dims) + " dimensions");
  if (static_cast<std::size_t>(matrix.rows()) != targets.size())
    throw GeometryError("rft select: row count does not match targets");
  RftResult res;
  res.costs.resize(static_cast<std::size_t>(dims));
  res.thresholds.resize(static_cast<std::size_t>(dims));
  std::vector<double> column(static_cast<std::size_t>(matrix.rows()));
  for (int d = 0; d < dims; ++d) {
    Eigen::Map<Eigen::VectorXd>(column.data(), matrix.rows()) = matrix.col(d);
    const auto s = rft_score(column, targets, bins);
    res.costs[static_cast<std::size_t>(d)] = s.cost;
    res.thresholds[static_cast<std::size_t>(d)] = s.threshold;
  }
  res.order.resize(static_cast<std::size_t>(dims));
  std::iota(res.order.begin(), res.order.end(), 0);
  std::stable_sort(res.order.begin(), res.order.end(), [&](int a, int b) {
    return res.costs[static_cast<std::size_t>(a)] < res.costs[static_cast<std::size_t>(b)];
  });
  res.selected.assign(res.order.begin(), res.order.begin() + count);
  return res;
}

// Index on an ascending cost curve farthest from the chord joining its end
// points, both axes normalized to [0, 1]. Ties go to the lower index; a flat
// curve returns the last index.
inline std::size_t elbow(std::span<const double> costs_sorted) {
  const std::size_t n = costs_sorted.size();
  if (n < 3) throw DataError("elbow: need at least 3 points");
  const double y0 = costs_sorted.front(), y1 = costs_sorted.back();
  const double range = y1 - y0;
  if (range == 0.0) return n - 1;
  std::size_t best = 0;
  double best_d = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    const double y = (costs_sorted[i] - y0) / range;
    // Distance to the diagonal y = x, up to the constant 1/sqrt(2).
    const double d = std::abs(x - y);
    if (d > best_d + 1e-12) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace greenbiqa
