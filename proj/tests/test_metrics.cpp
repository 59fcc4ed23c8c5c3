#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_support.hpp"

using namespace greenbiqa;

namespace {

std::vector<double> normals(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST(Plcc, Examples) {
  const std::vector<double> a = {1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(plcc(a, a), 1.0);
  const std::vector<double> neg = {2, 1, 0, -1, -2};
  EXPECT_DOUBLE_EQ(plcc(neg, std::vector<double>{-2, -1, 0, 1, 2}), -1.0);
  const std::vector<double> p = {1, 2, 3}, t = {1, 2, 4};
  EXPECT_NEAR(plcc(p, t), 0.9819805060619657, 1e-15);
  EXPECT_NEAR(plcc(p, t), oracle::pearson(p, t), 1e-15);
}

TEST(Plcc, AffineAndSymmetry) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = normals(30, rng), y = normals(30, rng);
    const double a = rng.uniform() * 10 - 5, b = rng.normal();
    std::vector<double> z(30);
    for (std::size_t i = 0; i < 30; ++i) z[i] = a * x[i] + b;
    EXPECT_NEAR(plcc(z, y), (a > 0 ? 1 : -1) * plcc(x, y), 1e-12);
    EXPECT_EQ(plcc(x, y), plcc(y, x));
  }
}

TEST(Srocc, Examples) {
  EXPECT_NEAR(srocc(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}), 0.8, 1e-15);
  const std::vector<double> t = {0.3, 1.2, 2.2, 5.0, 7.7};
  EXPECT_DOUBLE_EQ(srocc(std::vector<double>{5, 4, 3, 2, 1}, t), -1.0);
  std::vector<double> cubed;
  for (double v : t) cubed.push_back(v * v * v + 4);
  EXPECT_DOUBLE_EQ(srocc(cubed, t), 1.0);
}

TEST(Srocc, TiesUseAverageRanks) {
  const auto r = average_ranks(std::vector<double>{10, 20, 20, 5});
  EXPECT_EQ(r, (std::vector<double>{2, 3.5, 3.5, 1}));
  EXPECT_NEAR(srocc(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 2, 3, 4}),
              oracle::pearson(std::vector<double>{1, 2.5, 2.5, 4}, std::vector<double>{1, 2, 3, 4}), 1e-15);
}

TEST(Metrics, MatchDirectFormulasOnRandomVectors) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(200);
    const auto x = normals(n, rng), y = normals(n, rng);
    EXPECT_NEAR(plcc(x, y), oracle::pearson(x, y), 1e-12);
    EXPECT_NEAR(srocc(x, y), oracle::spearman_closed_form(x, y), 1e-12);
    EXPECT_EQ(srocc(x, y), srocc(y, x));
  }
}

TEST(Metrics, SroccInvariantUnderMonotoneTransform) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = normals(50, rng), y = normals(50, rng);
    std::vector<double> fx;
    for (double v : x) fx.push_back(std::exp(v) * 3 + std::atan(v));
    EXPECT_EQ(srocc(fx, y), srocc(x, y));
  }
}

TEST(Metrics, DegenerateInputs) {
  const std::vector<double> c(5, 2.0), v = {1, 2, 3, 4, 5};
  EXPECT_THROW(plcc(c, v), DegenerateInputError);
  EXPECT_THROW(plcc(v, c), DegenerateInputError);
  EXPECT_THROW(srocc(c, v), DegenerateInputError);
  EXPECT_THROW(plcc(std::vector<double>{1}, std::vector<double>{1}), DegenerateInputError);
  EXPECT_THROW(plcc(v, std::vector<double>{1, 2}), GeometryError);
  const auto r = evaluate(v, std::vector<double>{1, 2, 3, 5, 4});
  EXPECT_EQ(r.n, 5u);
  EXPECT_GT(r.plcc, 0.8);
  EXPECT_NEAR(r.srocc, 0.9, 1e-15);
}
