#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "greenbiqa/greenbiqa.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("greenbiqa_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline greenbiqa::Plane random_plane(int rows, int cols, greenbiqa::Rng& rng, double lo = 0.0, double hi = 255.0) {
  greenbiqa::Plane p(rows, cols);
  for (double& v : p.values()) v = lo + (hi - lo) * rng.uniform();
  return p;
}

// Smooth random field plus noise; closer to natural image statistics than
// white noise, so the learned Saab kernels are non-degenerate.
inline greenbiqa::Plane textured_plane(int side, greenbiqa::Rng& rng) {
  greenbiqa::Plane p(side, side);
  const double fx = 0.02 + 0.2 * rng.uniform(), fy = 0.02 + 0.2 * rng.uniform();
  const double a = 40 + 40 * rng.uniform(), ph = 6.28 * rng.uniform();
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c)
      p(r, c) = 128 + a * std::sin(fx * r + fy * c + ph) + 20 * rng.normal();
  return p;
}

inline Eigen::MatrixXd gaussian_matrix(int rows, int cols, greenbiqa::Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

struct PlaneList {
  std::vector<greenbiqa::Plane> planes;
  std::size_t size() const { return planes.size(); }
  const greenbiqa::Plane& operator[](std::size_t i) const { return planes[i]; }
};

inline PlaneList textured_planes(int count, int side, std::uint64_t seed) {
  greenbiqa::Rng rng(seed);
  PlaneList out;
  for (int i = 0; i < count; ++i) out.planes.push_back(textured_plane(side, rng));
  return out;
}

// The 128-image synthetic mini-dataset, generated once per test process.
inline const fs::path& mini_manifest() {
  static const fs::path manifest = [] {
    const auto dir = scratch("mini");
    return greenbiqa::synth_minidataset(greenbiqa::make_pristine_seeds(8, 256, 7), dir, 7);
  }();
  return manifest;
}

inline std::vector<double> rgb8_to_double(const greenbiqa::Rgb8Image& img) {
  return {img.data.begin(), img.data.end()};
}

}  // namespace testsupport
