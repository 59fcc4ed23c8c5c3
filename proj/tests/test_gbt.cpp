#include <cmath>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace greenbiqa;

namespace {

std::span<const double> row_span(const Eigen::MatrixXd& m, Eigen::Index r, std::vector<double>& buf) {
  buf.resize(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) buf[static_cast<std::size_t>(c)] = m(r, c);
  return buf;
}

struct Blobs {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

Blobs blobs(int per_class, int classes, double spread, Rng& rng) {
  Blobs b{Eigen::MatrixXd(per_class * classes, 2), {}};
  for (int c = 0; c < classes; ++c) {
    const double cx = 10 * std::cos(2 * 3.14159265 * c / classes), cy = 10 * std::sin(2 * 3.14159265 * c / classes);
    for (int i = 0; i < per_class; ++i) {
      const int r = c * per_class + i;
      b.x(r, 0) = cx + spread * rng.normal();
      b.x(r, 1) = cy + spread * rng.normal();
      b.y.push_back(c);
    }
  }
  return b;
}

double accuracy(const GbtModel& m, const Blobs& b) {
  std::vector<double> buf;
  int ok = 0;
  for (Eigen::Index r = 0; r < b.x.rows(); ++r) ok += m.predict_class(row_span(b.x, r, buf)).label == b.y[static_cast<std::size_t>(r)];
  return static_cast<double>(ok) / static_cast<double>(b.x.rows());
}

GbtParams no_early(int trees) {
  GbtParams p;
  p.early_stop_rounds = 0;
  p.max_trees = trees;
  return p;
}

std::string bytes_of(const GbtModel& m) {
  io::Writer w;
  io::put(w, m);
  return w.data();
}

}  // namespace

TEST(GbtRegressor, ConstantTargetIsExact) {
  Rng rng(1);
  const auto x = testsupport::gaussian_matrix(100, 3, rng);
  const std::vector<double> y(100, 0.1);
  const auto m = fit_regressor(x, y, {}, {}, no_early(50));
  EXPECT_EQ(m.n_trees_used(), 0);
  std::vector<double> buf;
  for (Eigen::Index r = 0; r < 100; ++r) EXPECT_EQ(m.predict(row_span(x, r, buf)), 0.1);
  EXPECT_EQ(m.predict(std::vector<double>{1e6, -1e6, 0}), 0.1);
}

TEST(GbtRegressor, IdentityTargetFitsWithin200Rounds) {
  Rng rng(2);
  Eigen::MatrixXd x(1000, 2);
  std::vector<double> y(1000);
  for (int i = 0; i < 1000; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = rng.uniform();
    y[static_cast<std::size_t>(i)] = x(i, 0);
  }
  GbtTrace trace;
  auto p = no_early(200);
  p.learning_rate = 0.1;
  const auto m = fit_regressor(x, y, {}, {}, p, &trace);
  EXPECT_LE(m.n_trees_used(), 200);
  EXPECT_LT(trace.train_loss.back(), 0.05);
  for (std::size_t i = 1; i < trace.train_loss.size(); ++i) EXPECT_LE(trace.train_loss[i], trace.train_loss[i - 1]);
}

TEST(GbtRegressor, SameSeedSameBytes) {
  Rng rng(3);
  const auto x = testsupport::gaussian_matrix(300, 4, rng);
  std::vector<double> y(300);
  for (int i = 0; i < 300; ++i) y[static_cast<std::size_t>(i)] = x(i, 1) * x(i, 2) + 0.1 * rng.normal();
  auto p = no_early(60);
  p.seed = 9;
  EXPECT_EQ(bytes_of(fit_regressor(x, y, {}, {}, p)), bytes_of(fit_regressor(x, y, {}, {}, p)));
  auto q = p;
  q.seed = 10;
  EXPECT_NE(bytes_of(fit_regressor(x, y, {}, {}, p)), bytes_of(fit_regressor(x, y, {}, {}, q)));
}

TEST(GbtRegressor, EarlyStoppingKeepsBestPrefix) {
  Rng rng(4);
  const auto x = testsupport::gaussian_matrix(200, 3, rng), vx = testsupport::gaussian_matrix(100, 3, rng);
  std::vector<double> y(200), vy(100);
  for (double& v : y) v = rng.normal();  // pure noise: validation stops improving early
  for (double& v : vy) v = rng.normal();
  GbtParams p;
  p.early_stop_rounds = 10;
  GbtTrace trace;
  const auto m = fit_regressor(x, y, vx, vy, p, &trace);
  EXPECT_EQ(m.n_trees_used(), trace.best_rounds);
  EXPECT_LT(static_cast<int>(trace.val_metric.size()), 2001);
  const double best = *std::min_element(trace.val_metric.begin(), trace.val_metric.end());
  EXPECT_EQ(trace.val_metric[static_cast<std::size_t>(trace.best_rounds)], best);
  EXPECT_THROW(fit_regressor(x, y, {}, {}, p), DataError);
}

TEST(GbtRegressor, EmptyModelReturnsBase) {
  GbtModel m;
  m.n_features = 2;
  m.base_score = {3.25};
  EXPECT_EQ(m.predict(std::vector<double>{0, 0}), 3.25);
}

TEST(GbtRegressor, Errors) {
  Rng rng(5);
  const auto x = testsupport::gaussian_matrix(20, 3, rng);
  std::vector<double> y(20, 1.0);
  y[3] = std::nan("");
  EXPECT_THROW(fit_regressor(x, y, {}, {}, no_early(5)), DataError);
  EXPECT_THROW(fit_regressor(x, std::vector<double>(19, 1.0), {}, {}, no_early(5)), GeometryError);
  EXPECT_THROW(fit_regressor(Eigen::MatrixXd(1, 3), std::vector<double>(1, 1.0), {}, {}, no_early(5)), FitError);
  const auto m = fit_regressor(x, std::vector<double>(20, 2.0), {}, {}, no_early(5));
  EXPECT_THROW(m.predict(std::vector<double>{1, 2}), GeometryError);
  GbtParams bad;
  bad.subsample = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(GbtSplit, ChosenSplitIsBestOnRescan) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = testsupport::gaussian_matrix(150, 4, rng);
    std::vector<double> res(150);
    for (int i = 0; i < 150; ++i) res[static_cast<std::size_t>(i)] = (x(i, trial % 4) > 0.3 ? 1.0 : -0.5) + 0.3 * rng.normal();
    const auto binned = detail::bin_matrix(x, 32);
    std::vector<int> rows;
    for (int i = 0; i < 150; i += 1 + trial % 2) rows.push_back(i);
    const int min_leaf = 5;
    const auto best = detail::find_best_split(binned, res, rows, min_leaf);
    ASSERT_GE(best.feature, 0);
    // Re-scan every (feature, bin) boundary directly.
    double total = 0;
    for (int r : rows) total += res[static_cast<std::size_t>(r)];
    for (int f = 0; f < 4; ++f)
      for (int b = 0; b + 1 < binned.n_bins(f); ++b) {
        double sl = 0;
        int nl = 0;
        for (int r : rows)
          if (binned.at(r, f) <= b) {
            sl += res[static_cast<std::size_t>(r)];
            ++nl;
          }
        const int nr = static_cast<int>(rows.size()) - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double n = static_cast<double>(rows.size());
        const double gain = sl * sl / nl + (total - sl) * (total - sl) / nr - total * total / n;
        EXPECT_GE(best.gain, gain - 1e-9) << "trial " << trial << " feature " << f << " bin " << b;
      }
  }
}

TEST(GbtClassifier, ProbabilitiesFormADistribution) {
  Rng rng(7);
  const auto b = blobs(30, 3, 1.0, rng);
  const auto m = fit_classifier(b.x, b.y, {}, {}, 3, no_early(20));
  std::vector<double> buf;
  for (Eigen::Index r = 0; r < b.x.rows(); ++r) {
    const auto p = m.predict_class(row_span(b.x, r, buf)).probabilities;
    double s = 0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_THROW(m.predict(std::vector<double>{0, 0}), ConfigError);
}

TEST(GbtClassifier, SeparableTwoClassesFitPerfectly) {
  Rng rng(8);
  Blobs b{Eigen::MatrixXd(100, 2), {}};
  for (int i = 0; i < 100; ++i) {
    b.x(i, 0) = rng.uniform();
    b.x(i, 1) = rng.uniform();
    b.y.push_back(b.x(i, 0) + b.x(i, 1) > 1.0 ? 1 : 0);
  }
  const auto m = fit_classifier(b.x, b.y, {}, {}, 2, no_early(200));
  EXPECT_EQ(accuracy(m, b), 1.0);
}

TEST(GbtClassifier, IdenticalClassesGiveChanceAccuracy) {
  Rng rng(9);
  auto make = [&](int n) {
    Blobs b{testsupport::gaussian_matrix(n, 3, rng), {}};
    for (int i = 0; i < n; ++i) b.y.push_back(static_cast<int>(rng.below(2)));
    return b;
  };
  const auto train = make(400), val = make(200), test = make(1000);
  GbtParams p;
  p.early_stop_rounds = 20;
  const auto m = fit_classifier(train.x, train.y, val.x, val.y, 2, p);
  EXPECT_NEAR(accuracy(m, test), 0.5, 0.1);
}

TEST(GbtClassifier, SixBlobsHeldOut) {
  Rng rng(10);
  const auto train = blobs(60, 6, 1.5, rng), val = blobs(20, 6, 1.5, rng), test = blobs(50, 6, 1.5, rng);
  GbtTrace trace;
  const auto m = fit_classifier(train.x, train.y, val.x, val.y, 6, GbtParams{}, &trace);
  EXPECT_GT(accuracy(m, test), 0.95);
  for (std::size_t i = 1; i < trace.train_loss.size(); ++i) EXPECT_LE(trace.train_loss[i], trace.train_loss[i - 1] + 1e-12);
}

TEST(GbtClassifier, Errors) {
  Rng rng(11);
  const auto x = testsupport::gaussian_matrix(20, 2, rng);
  EXPECT_THROW(fit_classifier(x, std::vector<int>(20, 0), {}, {}, 2, no_early(5)), DataError);
  EXPECT_THROW(fit_classifier(x, std::vector<int>(20, 0), {}, {}, 1, no_early(5)), DataError);
  std::vector<int> out_of_range(20, 0);
  out_of_range[0] = 5;
  EXPECT_THROW(fit_classifier(x, out_of_range, {}, {}, 2, no_early(5)), DataError);
}
