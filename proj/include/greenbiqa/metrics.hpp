#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "greenbiqa/error.hpp"

namespace greenbiqa {

namespace detail {

inline void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw GeometryError(std::string(what) + ": length mismatch");
  if (a.size() < 2) throw DegenerateInputError(std::string(what) + ": need at least 2 samples");
}

}  // namespace detail

// Pearson linear correlation coefficient.
inline double plcc(std::span<const double> pred, std::span<const double> truth) {
  detail::check_pair(pred, truth, "plcc");
  const double n = static_cast<double>(pred.size());
  const double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
  const double mt = std::accumulate(truth.begin(), truth.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dp = pred[i] - mp, dt = truth[i] - mt;
    sxy += dp * dt;
    sxx += dp * dp;
    syy += dt * dt;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInputError("plcc: constant input");
  return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

// 1-based ranks; tied values share their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// Spearman rank-order correlation: Pearson correlation of average ranks, which
// equals 1 - 6 sum d^2 / (L (L^2 - 1)) when there are no ties.
inline double srocc(std::span<const double> pred, std::span<const double> truth) {
  detail::check_pair(pred, truth, "srocc");
  const auto rp = average_ranks(pred);
  const auto rt = average_ranks(truth);
  return plcc(rp, rt);
}

struct EvalReport {
  double plcc = 0.0;
  double srocc = 0.0;
  std::size_t n = 0;
};

inline EvalReport evaluate(std::span<const double> pred, std::span<const double> truth) {
  return {plcc(pred, truth), srocc(pred, truth), pred.size()};
}

}  // namespace greenbiqa
