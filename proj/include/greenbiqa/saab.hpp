#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greenbiqa/error.hpp"
#include "greenbiqa/pca.hpp"
#include "greenbiqa/transforms.hpp"

namespace greenbiqa {

struct PatchShape {
  int h = 4;
  int w = 4;
  int c = 1;

  int volume() const noexcept { return h * w * c; }
  friend bool operator==(const PatchShape&, const PatchShape&) = default;
};

// Saab transform for non-overlapping patches. Row 0 of `basis` is the constant
// DC kernel 1/sqrt(n); rows 1..n-1 are the AC kernels, principal components of
// per-patch mean-removed patches in decreasing-energy order. Biases are zero.
struct SaabKernel {
  PatchShape shape;
  Eigen::MatrixXd basis;   // n x n, orthonormal rows
  Eigen::VectorXd energy;  // variance of each output coefficient on the fit set

  int volume() const noexcept { return shape.volume(); }
  Eigen::RowVectorXd dc_kernel() const { return basis.row(0); }
  Eigen::MatrixXd ac_kernels() const { return basis.bottomRows(basis.rows() - 1); }
};

namespace detail {

// Orthonormal basis of the complement of the all-ones direction (Helmert
// contrasts), as the columns of an n x (n-1) matrix.
inline Eigen::MatrixXd mean_free_basis(int n) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n - 1);
  for (int j = 1; j < n; ++j) {
    const double s = 1.0 / std::sqrt(static_cast<double>(j) * (j + 1));
    for (int i = 0; i < j; ++i) q(i, j - 1) = s;
    q(j, j - 1) = -j * s;
  }
  return q;
}

}  // namespace detail

// Gathers non-overlapping patches (row per patch). Patch element order is
// (row, col, channel) with channel fastest; patches are scanned row-major.
inline Eigen::MatrixXd extract_patches(const ChannelMaps& input, const PatchShape& shape) {
  if (static_cast<int>(input.channel_count()) != shape.c)
    throw GeometryError("extract_patches: expected " + std::to_string(shape.c) +
                        " channels, got " + std::to_string(input.channel_count()));
  const int rows = input.rows(), cols = input.cols();
  for (const auto& ch : input.channels)
    if (ch.rows() != rows || ch.cols() != cols) throw GeometryError("channels differ in size");
  if (rows % shape.h != 0 || cols % shape.w != 0)
    throw GeometryError("extract_patches: " + std::to_string(rows) + "x" + std::to_string(cols) +
                        " not divisible by patch " + std::to_string(shape.h) + "x" +
                        std::to_string(shape.w));
  const int pr = rows / shape.h, pc = cols / shape.w;
  Eigen::MatrixXd patches(static_cast<Eigen::Index>(pr) * pc, shape.volume());
  for (int i = 0; i < pr; ++i)
    for (int j = 0; j < pc; ++j) {
      const Eigen::Index row = static_cast<Eigen::Index>(i) * pc + j;
      int k = 0;
      for (int r = 0; r < shape.h; ++r)
        for (int c = 0; c < shape.w; ++c)
          for (int ch = 0; ch < shape.c; ++ch)
            patches(row, k++) = input.channels[ch](i * shape.h + r, j * shape.w + c);
    }
  return patches;
}

// Fits on flattened patches, one per row.
inline SaabKernel fit_saab(const Eigen::MatrixXd& patches, const PatchShape& shape) {
  const int n = shape.volume();
  if (patches.cols() != n)
    throw GeometryError("fit_saab: patch length " + std::to_string(patches.cols()) +
                        " != volume " + std::to_string(n));
  if (n < 2) throw FitError("fit_saab: patch volume must be at least 2");
  if (patches.rows() < n + 1)
    throw FitError("fit_saab: need at least " + std::to_string(n + 1) + " patches, got " +
                   std::to_string(patches.rows()));

  // Coordinates of each mean-removed patch in the mean-free subspace.
  const Eigen::MatrixXd q = detail::mean_free_basis(n);
  const Eigen::MatrixXd residual = patches * q;
  const Eigen::RowVectorXd mean = residual.colwise().mean();
  const Eigen::MatrixXd cov = detail::covariance(residual, mean);
  if (cov.trace() <= 1e-12 * std::max(1.0, patches.squaredNorm() / patches.rows()))
    throw FitError("fit_saab: patches carry no AC energy (degenerate training data)");

  const auto eig = detail::sorted_eigen(cov);
  SaabKernel kernel;
  kernel.shape = shape;
  kernel.basis.resize(n, n);
  kernel.basis.row(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  for (int i = 0; i < n - 1; ++i) {
    Eigen::VectorXd ac = q * eig.vectors.col(i);
    ac.normalize();
    detail::canonical_sign(ac);
    kernel.basis.row(i + 1) = ac.transpose();
  }
  const Eigen::VectorXd dc = patches.rowwise().sum() / std::sqrt(static_cast<double>(n));
  kernel.energy.resize(n);
  kernel.energy[0] = (dc.array() - dc.mean()).square().sum() / static_cast<double>(dc.size() - 1);
  kernel.energy.tail(n - 1) = eig.values;
  return kernel;
}

// Projects every non-overlapping patch onto all kernels. Output channel 0 is
// DC, channels 1..n-1 are AC in energy order.
inline ChannelMaps apply_saab(const SaabKernel& kernel, const ChannelMaps& input) {
  const Eigen::MatrixXd patches = extract_patches(input, kernel.shape);
  const Eigen::MatrixXd coef = patches * kernel.basis.transpose();
  const int pr = input.rows() / kernel.shape.h, pc = input.cols() / kernel.shape.w;
  ChannelMaps out;
  out.channels.assign(static_cast<std::size_t>(kernel.volume()), Plane(pr, pc));
  for (int i = 0; i < pr; ++i)
    for (int j = 0; j < pc; ++j) {
      const Eigen::Index row = static_cast<Eigen::Index>(i) * pc + j;
      for (int k = 0; k < kernel.volume(); ++k) out.channels[k](i, j) = coef(row, k);
    }
  return out;
}

inline ChannelMaps single_channel(Plane p) {
  ChannelMaps m;
  m.channels.push_back(std::move(p));
  return m;
}

}  // namespace greenbiqa
