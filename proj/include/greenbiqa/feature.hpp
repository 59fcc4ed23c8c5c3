#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "greenbiqa/error.hpp"

namespace greenbiqa {

enum class FeatureOrigin { spatial, spatiocolor, lowlevel };

struct FeatureVector {
  std::vector<double> values;
  FeatureOrigin origin = FeatureOrigin::spatial;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

inline void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw DataError(std::string(what) + ": non-finite feature value");
}

struct MomentStats {
  double max = 0.0, mean = 0.0, std = 0.0;
};

// Population statistics (divides by n).
inline MomentStats moment_stats(std::span<const double> v) {
  MomentStats s;
  if (v.empty()) return s;
  s.max = v[0];
  double sum = 0.0;
  for (double x : v) {
    s.max = std::max(s.max, x);
    sum += x;
  }
  s.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size()));
  return s;
}

}  // namespace greenbiqa
