#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_support.hpp"

using namespace greenbiqa;
using testsupport::random_plane;

namespace {

double energy(const ChannelMaps& m) {
  double e = 0;
  for (const auto& ch : m.channels)
    for (double v : ch.values()) e += v * v;
  return e;
}

double energy(const Plane& p) {
  double e = 0;
  for (double v : p.values()) e += v * v;
  return e;
}

// Test-only inverse of block_dct_8x8 through the oracle's inverse DCT.
Plane inverse_block_dct(const ChannelMaps& maps) {
  const auto zz = oracle::zigzag();
  const int br = maps.rows(), bc = maps.cols();
  Plane out(br * 8, bc * 8);
  for (int i = 0; i < br; ++i)
    for (int j = 0; j < bc; ++j) {
      std::vector<double> coef(64);
      for (int k = 0; k < 64; ++k) coef[static_cast<std::size_t>(zz[k].first * 8 + zz[k].second)] =
          maps.channels[static_cast<std::size_t>(k)](i, j);
      const auto px = oracle::idct8x8(coef);
      for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) out(i * 8 + r, j * 8 + c) = px[static_cast<std::size_t>(r * 8 + c)];
    }
  return out;
}

Eigen::MatrixXd patches_with_covariance(const Eigen::MatrixXd& directions, const std::vector<double>& sd,
                                        int count, Rng& rng) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(count, directions.cols());
  for (int i = 0; i < count; ++i) {
    p.row(i).setConstant(100 * rng.normal());
    for (std::size_t d = 0; d < sd.size(); ++d)
      p.row(i) += sd[d] * rng.normal() * directions.row(static_cast<Eigen::Index>(d));
  }
  return p;
}

}  // namespace

TEST(BlockDct, ConstantPlaneHasOnlyDc) {
  const auto maps = block_dct_8x8(Plane(16, 24, 128));
  ASSERT_EQ(maps.channel_count(), 64u);
  EXPECT_EQ(maps.rows(), 2);
  EXPECT_EQ(maps.cols(), 3);
  for (double v : maps.channels[0].values()) EXPECT_NEAR(v, 1024.0, 1e-9);
  for (int k = 1; k < 64; ++k)
    for (double v : maps.channels[static_cast<std::size_t>(k)].values()) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(BlockDct, ZeroPlaneIsZero) {
  for (const auto& ch : block_dct_8x8(Plane(8, 8, 0)).channels)
    for (double v : ch.values()) EXPECT_EQ(v, 0.0);
}

TEST(BlockDct, MatchesDirectFormulaInZigzagOrder) {
  Rng rng(1);
  const auto plane = random_plane(8, 8, rng);
  const auto maps = block_dct_8x8(plane);
  const auto ref = oracle::dct8x8(plane.values());
  const auto zz = oracle::zigzag();
  for (int k = 0; k < 64; ++k)
    EXPECT_NEAR(maps.channels[static_cast<std::size_t>(k)](0, 0),
                ref[static_cast<std::size_t>(zz[k].first * 8 + zz[k].second)], 1e-9)
        << "channel " << k;
}

TEST(BlockDct, ParsevalOnRandomPlane) {
  Rng rng(2);
  const auto plane = random_plane(16, 16, rng);
  EXPECT_NEAR(energy(block_dct_8x8(plane)) / energy(plane), 1.0, 1e-6);
}

TEST(BlockDct, InverseReproducesInput) {
  Rng rng(3);
  const auto plane = random_plane(24, 16, rng);
  const auto back = inverse_block_dct(block_dct_8x8(plane));
  for (std::size_t i = 0; i < plane.size(); ++i) EXPECT_NEAR(back.values()[i], plane.values()[i], 1e-9);
}

TEST(BlockDct, NonDivisibleIsGeometryError) {
  EXPECT_THROW(block_dct_8x8(Plane(12, 16)), GeometryError);
  EXPECT_THROW(block_dct_8x8(Plane(16, 20)), GeometryError);
}

TEST(Saab, RecoversKnownDirections) {
  const PatchShape shape{2, 2, 1};
  // Mean-free orthonormal directions in R^4, variances 16 > 4 > 1.
  Eigen::MatrixXd dirs(3, 4);
  dirs << 1, -1, 0, 0, 0, 0, 1, -1, 1, 1, -1, -1;
  dirs.row(0) /= std::sqrt(2.0);
  dirs.row(1) /= std::sqrt(2.0);
  dirs.row(2) /= 2.0;
  Rng rng(4);
  const auto patches = patches_with_covariance(dirs, {4, 2, 1}, 20000, rng);
  const auto k = fit_saab(patches, shape);

  // Oracle: eigendecomposition of the per-patch mean-removed covariance.
  oracle::Matrix rows;
  for (Eigen::Index i = 0; i < patches.rows(); ++i) {
    const double m = patches.row(i).mean();
    std::vector<double> r;
    for (Eigen::Index j = 0; j < 4; ++j) r.push_back(patches(i, j) - m);
    rows.push_back(r);
  }
  const auto eig = oracle::jacobi(oracle::covariance(rows));
  for (int a = 0; a < 3; ++a) {
    EXPECT_NEAR(k.energy[a + 1], eig.values[static_cast<std::size_t>(a)], 1e-8 * eig.values[0]);
    double cos_true = std::abs(k.basis.row(a + 1).dot(dirs.row(a)));
    EXPECT_GT(cos_true, 0.99) << "kernel " << a + 1;
    double cos_oracle = 0;
    for (int j = 0; j < 4; ++j) cos_oracle += k.basis(a + 1, j) * eig.vectors[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
    EXPECT_NEAR(std::abs(cos_oracle), 1.0, 1e-9);
  }
}

TEST(Saab, KernelIsOrthonormalWithConstantDc) {
  Rng rng(5);
  const auto patches = testsupport::gaussian_matrix(500, 16, rng);
  const auto k = fit_saab(patches, {4, 4, 1});
  const Eigen::MatrixXd gram = k.basis * k.basis.transpose();
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-9);
  for (int j = 0; j < 16; ++j) EXPECT_DOUBLE_EQ(k.basis(0, j), 0.25);
  for (int r = 1; r < 16; ++r) {
    EXPECT_NEAR(k.basis.row(r).sum(), 0.0, 1e-9);
    Eigen::Index at;
    k.basis.row(r).cwiseAbs().maxCoeff(&at);
    EXPECT_GT(k.basis(r, at), 0.0) << "sign convention, kernel " << r;
  }
  for (int r = 2; r < 16; ++r) EXPECT_GE(k.energy[r - 1], k.energy[r]);
}

TEST(Saab, ConstantPatchHasOnlyDc) {
  Rng rng(6);
  const auto k = fit_saab(testsupport::gaussian_matrix(200, 16, rng), {4, 4, 1});
  const auto out = apply_saab(k, single_channel(Plane(4, 4, 7.5)));
  EXPECT_NEAR(out.channels[0](0, 0), 4 * 7.5, 1e-9);
  for (std::size_t c = 1; c < out.channel_count(); ++c) EXPECT_NEAR(out.channels[c](0, 0), 0.0, 1e-9);
}

TEST(Saab, DcKernelProjectsToUnitDc) {
  Rng rng(7);
  const auto k = fit_saab(testsupport::gaussian_matrix(200, 16, rng), {4, 4, 1});
  Plane p(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) p(r, c) = k.dc_kernel()[r * 4 + c];
  const auto out = apply_saab(k, single_channel(p));
  EXPECT_NEAR(out.channels[0](0, 0), 1.0, 1e-12);
  for (std::size_t c = 1; c < out.channel_count(); ++c) EXPECT_NEAR(out.channels[c](0, 0), 0.0, 1e-12);
}

TEST(Saab, OutputGeometry) {
  Rng rng(8);
  const auto k = fit_saab(testsupport::gaussian_matrix(200, 16, rng), {4, 4, 1});
  const auto out = apply_saab(k, single_channel(random_plane(8, 8, rng)));
  ASSERT_EQ(out.channel_count(), 16u);
  for (const auto& ch : out.channels) {
    EXPECT_EQ(ch.rows(), 2);
    EXPECT_EQ(ch.cols(), 2);
  }
  EXPECT_THROW(apply_saab(k, single_channel(Plane(6, 8))), GeometryError);
  ChannelMaps two{{Plane(8, 8), Plane(8, 8)}};
  EXPECT_THROW(apply_saab(k, two), GeometryError);
}

TEST(Saab, ThreeChannelEnergyConservation) {
  Rng rng(9);
  const auto k = fit_saab(testsupport::gaussian_matrix(500, 48, rng), {4, 4, 3});
  ChannelMaps in{{random_plane(16, 16, rng), random_plane(16, 16, rng), random_plane(16, 16, rng)}};
  const auto out = apply_saab(k, in);
  EXPECT_EQ(out.channel_count(), 48u);
  EXPECT_NEAR(energy(out) / energy(in), 1.0, 1e-9);
}

TEST(Saab, DegenerateDataIsFitError) {
  Eigen::MatrixXd constant_patches(100, 16);
  for (int i = 0; i < 100; ++i) constant_patches.row(i).setConstant(i);
  EXPECT_THROW(fit_saab(constant_patches, {4, 4, 1}), FitError);
  EXPECT_THROW(fit_saab(Eigen::MatrixXd::Ones(5, 16), {4, 4, 1}), FitError);
}

TEST(AbsMaxPool, PicksLargestMagnitude) {
  Plane p(2, 2);
  p(0, 0) = 1;
  p(0, 1) = -3;
  p(1, 0) = 2;
  p(1, 1) = 0;
  const auto out = abs_max_pool(p, 2);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out(0, 0), 3.0);
}

TEST(AbsMaxPool, ZeroMapAndInvariants) {
  const auto zero = abs_max_pool(Plane(4, 4, 0), 2);
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);
  Rng rng(10);
  const auto p = random_plane(8, 8, rng, -50, 50);
  Plane neg = p;
  for (double& v : neg.values()) v = -v;
  const auto a = abs_max_pool(p, 2);
  EXPECT_EQ(a, abs_max_pool(neg, 2));
  double mean_abs = 0;
  for (double v : p.values()) mean_abs += std::abs(v) / static_cast<double>(p.size());
  double mean_pooled = 0;
  for (double v : a.values()) mean_pooled += v / static_cast<double>(a.size());
  EXPECT_GE(mean_pooled, mean_abs);
  EXPECT_THROW(abs_max_pool(Plane(5, 4), 2), GeometryError);
}

TEST(Pca, LineSamplesGiveParallelComponent) {
  Rng rng(11);
  Eigen::MatrixXd s(200, 2);
  const double dx = 0.6, dy = 0.8;
  for (int i = 0; i < 200; ++i) {
    const double t = 10 * rng.normal();
    s(i, 0) = 3 + t * dx;
    s(i, 1) = -1 + t * dy;
  }
  const auto b = pca_fit(s, 1);
  EXPECT_GT(std::abs(b.components(0, 0) * dx + b.components(0, 1) * dy), 0.999);
}

TEST(Pca, MeanProjectsToZero) {
  Rng rng(12);
  const auto s = testsupport::gaussian_matrix(50, 6, rng);
  const auto b = pca_fit(s, 4);
  const Eigen::VectorXd mean = s.colwise().mean().transpose();
  for (double v : b.project(std::span<const double>(mean.data(), 6))) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Pca, VarianceMatchesOracleAndIsNonIncreasing) {
  Rng rng(13);
  Eigen::MatrixXd s = testsupport::gaussian_matrix(300, 5, rng);
  for (int j = 0; j < 5; ++j) s.col(j) *= j + 1;
  const auto b = pca_fit(s, 5);
  oracle::Matrix rows;
  for (Eigen::Index i = 0; i < s.rows(); ++i) rows.push_back({s(i, 0), s(i, 1), s(i, 2), s(i, 3), s(i, 4)});
  const auto eig = oracle::jacobi(oracle::covariance(rows));
  for (int k = 0; k < 5; ++k) {
    EXPECT_NEAR(b.explained_variance[k], eig.values[static_cast<std::size_t>(k)], 1e-9 * eig.values[0]);
    if (k > 0) {
      EXPECT_GE(b.explained_variance[k - 1], b.explained_variance[k]);
    }
  }
  const Eigen::MatrixXd gram = b.components * b.components.transpose();
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Pca, TooManyComponentsIsFitError) {
  Rng rng(14);
  const auto s = testsupport::gaussian_matrix(20, 3, rng);
  EXPECT_THROW(pca_fit(s, 4), FitError);
  EXPECT_THROW(pca_fit(testsupport::gaussian_matrix(2, 3, rng), 3), FitError);
}

TEST(Pca, RetainZeroesPrunedSlots) {
  Rng rng(15);
  const auto s = testsupport::gaussian_matrix(40, 6, rng);
  const auto full = pca_fit(s, 4);
  auto pruned = full;
  pruned.retain({true, false, true, false});
  EXPECT_EQ(pruned.components.rows(), 2);
  EXPECT_EQ(pruned.output_size(), 4);
  const std::vector<double> x = {1, 2, 3, 4, 5, 6};
  const auto a = full.project(x), b = pruned.project(x);
  EXPECT_EQ(b[0], a[0]);
  EXPECT_EQ(b[1], 0.0);
  EXPECT_EQ(b[2], a[2]);
  EXPECT_EQ(b[3], 0.0);
  EXPECT_THROW(full.project(std::vector<double>(5)), GeometryError);
}
