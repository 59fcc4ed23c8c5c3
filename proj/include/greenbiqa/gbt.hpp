#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greenbiqa/error.hpp"
#include "greenbiqa/random.hpp"

namespace greenbiqa {

struct GbtParams {
  int max_depth = 5;
  double subsample = 0.6;
  int max_trees = 2000;
  double learning_rate = 0.05;
  int early_stop_rounds = 50;  // 0 disables early stopping
  int min_samples_leaf = 5;
  int n_bins = 32;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("gbt: subsample must be in (0, 1]");
    if (max_depth < 1) throw ConfigError("gbt: max_depth must be >= 1");
    if (max_trees < 0 || max_trees > 2000) throw ConfigError("gbt: max_trees must be in [0, 2000]");
    if (!(learning_rate > 0.0)) throw ConfigError("gbt: learning_rate must be positive");
    if (min_samples_leaf < 1) throw ConfigError("gbt: min_samples_leaf must be >= 1");
    if (n_bins < 2 || n_bins > 256) throw ConfigError("gbt: n_bins must be in [2, 256]");
    if (early_stop_rounds < 0) throw ConfigError("gbt: early_stop_rounds must be >= 0");
  }
};

// Flat regression tree; node 0 is the root. Leaves have feature == -1.
struct Tree {
  struct Node {
    std::int32_t feature = -1;
    double threshold = 0.0;  // go left when x[feature] <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
  };
  std::vector<Node> nodes;

  double predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0)
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold
                                       ? nodes[i].left
                                       : nodes[i].right);
    return nodes[i].value;
  }

  int depth() const {
    std::vector<std::pair<std::int32_t, int>> stack{{0, 0}};
    int best = 0;
    while (!stack.empty()) {
      auto [n, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      if (nodes[static_cast<std::size_t>(n)].feature >= 0) {
        stack.push_back({nodes[static_cast<std::size_t>(n)].left, d + 1});
        stack.push_back({nodes[static_cast<std::size_t>(n)].right, d + 1});
      }
    }
    return best;
  }
};

// Regression models have n_classes == 1. Classifiers keep n_classes trees per
// round, tree (round, class) at index round * n_classes + class.
struct GbtModel {
  int n_features = 0;
  int n_classes = 1;
  std::vector<double> base_score;
  double learning_rate = 0.05;
  std::vector<Tree> trees;

  bool is_classifier() const noexcept { return n_classes > 1; }
  int n_trees_used() const noexcept { return static_cast<int>(trees.size()) / std::max(1, n_classes); }

  void check_input(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_features)
      throw GeometryError("gbt: input has " + std::to_string(x.size()) + " features, model expects " +
                          std::to_string(n_features));
  }

  // Raw scores (one per class). Accumulated round by round in the same order as
  // during fitting, so predictions match the training-time values bitwise.
  std::vector<double> raw_scores(std::span<const double> x) const {
    check_input(x);
    std::vector<double> f = base_score;
    const auto k = static_cast<std::size_t>(n_classes);
    for (std::size_t t = 0; t < trees.size(); ++t) f[t % k] += learning_rate * trees[t].predict(x);
    return f;
  }

  double predict(std::span<const double> x) const {
    if (is_classifier()) throw ConfigError("gbt: predict() called on a classifier");
    return raw_scores(x)[0];
  }

  struct ClassPrediction {
    int label = 0;
    std::vector<double> probabilities;
  };

  ClassPrediction predict_class(std::span<const double> x) const;
};

inline std::vector<double> softmax(std::span<const double> scores) {
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) sum += (p[i] = std::exp(scores[i] - m));
  for (double& v : p) v /= sum;
  return p;
}

inline std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline GbtModel::ClassPrediction GbtModel::predict_class(std::span<const double> x) const {
  if (!is_classifier()) throw ConfigError("gbt: predict_class() called on a regressor");
  const auto scores = raw_scores(x);
  ClassPrediction out;
  out.label = static_cast<int>(argmax_lowest(scores));
  out.probabilities = softmax(scores);
  return out;
}

// Per-round diagnostics of a fit; index 0 is the state before any tree.
struct GbtTrace {
  std::vector<double> train_loss;  // RMSE (regression) or mean cross-entropy
  std::vector<double> val_metric;  // RMSE (regression) or accuracy
  int best_rounds = 0;
};

namespace detail {

// Per-feature quantile binning shared by every node of every tree.
struct BinnedMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<double>> edges;  // bin b holds values <= edges[b]
  std::vector<std::uint8_t> bins;          // column-major

  std::uint8_t at(int row, int col) const {
    return bins[static_cast<std::size_t>(col) * static_cast<std::size_t>(rows) + static_cast<std::size_t>(row)];
  }
  int n_bins(int col) const { return static_cast<int>(edges[static_cast<std::size_t>(col)].size()) + 1; }
};

inline std::vector<double> quantile_edges(std::vector<double> v, int n_bins) {
  std::sort(v.begin(), v.end());
  std::vector<double> uniq;
  for (double x : v)
    if (uniq.empty() || x != uniq.back()) uniq.push_back(x);
  std::vector<double> edges;
  if (uniq.size() <= 1) return edges;
  if (static_cast<int>(uniq.size()) <= n_bins) {
    for (std::size_t i = 0; i + 1 < uniq.size(); ++i) edges.push_back(0.5 * (uniq[i] + uniq[i + 1]));
    return edges;
  }
  const std::size_t n = v.size();
  for (int b = 1; b < n_bins; ++b) {
    const double e = v[std::min(n - 1, static_cast<std::size_t>(b) * n / static_cast<std::size_t>(n_bins))];
    if (e < uniq.back() && (edges.empty() || e > edges.back())) edges.push_back(e);
  }
  return edges;
}

inline BinnedMatrix bin_matrix(const Eigen::MatrixXd& x, int n_bins) {
  BinnedMatrix b;
  b.rows = static_cast<int>(x.rows());
  b.cols = static_cast<int>(x.cols());
  b.edges.resize(static_cast<std::size_t>(b.cols));
  b.bins.resize(static_cast<std::size_t>(b.rows) * static_cast<std::size_t>(b.cols));
  std::vector<double> col(static_cast<std::size_t>(b.rows));
  for (int c = 0; c < b.cols; ++c) {
    for (int r = 0; r < b.rows; ++r) col[static_cast<std::size_t>(r)] = x(r, c);
    auto& e = b.edges[static_cast<std::size_t>(c)];
    e = quantile_edges(col, n_bins);
    for (int r = 0; r < b.rows; ++r)
      b.bins[static_cast<std::size_t>(c) * static_cast<std::size_t>(b.rows) + static_cast<std::size_t>(r)] =
          static_cast<std::uint8_t>(std::lower_bound(e.begin(), e.end(), col[static_cast<std::size_t>(r)]) - e.begin());
  }
  return b;
}

struct SplitCandidate {
  int feature = -1;
  int bin = -1;  // left: bin <= this
  double gain = 0.0;
};

// Best squared-error reduction over every (feature, bin boundary) with at least
// `min_leaf` rows on each side. Ties go to the lower feature, then lower bin.
inline SplitCandidate find_best_split(const BinnedMatrix& binned, std::span<const double> residual,
                                      std::span<const int> rows, int min_leaf) {
  SplitCandidate best;
  const auto n = static_cast<double>(rows.size());
  if (static_cast<int>(rows.size()) < 2 * min_leaf) return best;
  double total = 0.0;
  for (int r : rows) total += residual[static_cast<std::size_t>(r)];
  const double parent = total * total / n;
  std::vector<double> sum(256);
  std::vector<int> cnt(256);
  for (int f = 0; f < binned.cols; ++f) {
    const int nb = binned.n_bins(f);
    if (nb < 2) continue;
    std::fill_n(sum.begin(), nb, 0.0);
    std::fill_n(cnt.begin(), nb, 0);
    const std::uint8_t* col = binned.bins.data() + static_cast<std::size_t>(f) * static_cast<std::size_t>(binned.rows);
    for (int r : rows) {
      const auto b = col[r];
      sum[b] += residual[static_cast<std::size_t>(r)];
      ++cnt[b];
    }
    double sl = 0.0;
    int nl = 0;
    for (int b = 0; b + 1 < nb; ++b) {
      sl += sum[static_cast<std::size_t>(b)];
      nl += cnt[static_cast<std::size_t>(b)];
      const int nr = static_cast<int>(rows.size()) - nl;
      if (nl < min_leaf) continue;
      if (nr < min_leaf) break;
      const double sr = total - sl;
      const double gain = sl * sl / nl + sr * sr / nr - parent;
      if (gain > best.gain + 1e-12 * std::max(1.0, std::abs(parent))) best = {f, b, gain};
    }
  }
  return best;
}

struct TreeBuilder {
  const BinnedMatrix& binned;
  std::span<const double> residual;
  const GbtParams& params;
  Tree tree;

  // Returns node index; leaf values are filled in later.
  std::int32_t grow(std::vector<int> rows, int depth) {
    const auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (depth >= params.max_depth) return id;
    const auto split = find_best_split(binned, residual, rows, params.min_samples_leaf);
    if (split.feature < 0) return id;
    std::vector<int> left, right;
    const std::uint8_t* col =
        binned.bins.data() + static_cast<std::size_t>(split.feature) * static_cast<std::size_t>(binned.rows);
    for (int r : rows) (col[r] <= split.bin ? left : right).push_back(r);
    rows = {};
    tree.nodes[static_cast<std::size_t>(id)].feature = split.feature;
    tree.nodes[static_cast<std::size_t>(id)].threshold =
        binned.edges[static_cast<std::size_t>(split.feature)][static_cast<std::size_t>(split.bin)];
    const auto l = grow(std::move(left), depth + 1);
    const auto r = grow(std::move(right), depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].left = l;
    tree.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

inline std::int32_t leaf_of(const Tree& tree, const BinnedMatrix& binned, int row) {
  std::int32_t i = 0;
  while (tree.nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = tree.nodes[static_cast<std::size_t>(i)];
    // Bin b of feature f holds values <= edges[b]; threshold is edges[split bin].
    const auto& e = binned.edges[static_cast<std::size_t>(n.feature)];
    const int split_bin = static_cast<int>(std::lower_bound(e.begin(), e.end(), n.threshold) - e.begin());
    i = binned.at(row, n.feature) <= split_bin ? n.left : n.right;
  }
  return i;
}

// Fits one tree: structure from the subsampled rows, leaf values as the mean
// residual of all training rows reaching the leaf. The full-data leaf means
// make every round a descent step on the full training loss.
inline Tree fit_tree(const BinnedMatrix& binned, std::span<const double> residual, std::vector<int> sample_rows,
                     const GbtParams& params, std::vector<std::int32_t>& leaf_of_row) {
  TreeBuilder builder{binned, residual, params, {}};
  builder.grow(std::move(sample_rows), 0);
  Tree tree = std::move(builder.tree);
  std::vector<double> sum(tree.nodes.size(), 0.0);
  std::vector<int> cnt(tree.nodes.size(), 0);
  leaf_of_row.resize(static_cast<std::size_t>(binned.rows));
  for (int r = 0; r < binned.rows; ++r) {
    const auto leaf = leaf_of(tree, binned, r);
    leaf_of_row[static_cast<std::size_t>(r)] = leaf;
    sum[static_cast<std::size_t>(leaf)] += residual[static_cast<std::size_t>(r)];
    ++cnt[static_cast<std::size_t>(leaf)];
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i)
    if (tree.nodes[i].feature < 0 && cnt[i] > 0) tree.nodes[i].value = sum[i] / cnt[i];
  return tree;
}

inline std::vector<int> subsample_rows(int n, double fraction, std::uint64_t seed) {
  std::vector<int> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), 0);
  if (fraction >= 1.0) return rows;
  const auto m = static_cast<std::size_t>(std::max(1L, std::lround(fraction * n)));
  Rng rng(seed);
  for (std::size_t i = 0; i < m; ++i) std::swap(rows[i], rows[i + rng.below(rows.size() - i)]);
  rows.resize(m);
  std::sort(rows.begin(), rows.end());
  return rows;
}

inline void check_labels_finite(std::span<const double> y, const char* what) {
  for (double v : y)
    if (!std::isfinite(v)) throw DataError(std::string(what) + ": non-finite target");
}

inline double rmse(std::span<const double> pred, std::span<const double> y) {
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) ss += (pred[i] - y[i]) * (pred[i] - y[i]);
  return std::sqrt(ss / static_cast<double>(y.size()));
}

}  // namespace detail

// Squared-error gradient boosting with early stopping on validation RMSE; the
// model keeps the prefix of rounds with the best validation RMSE.
inline GbtModel fit_regressor(const Eigen::MatrixXd& x, std::span<const double> y, const Eigen::MatrixXd& val_x,
                              std::span<const double> val_y, const GbtParams& params, GbtTrace* trace = nullptr) {
  params.validate();
  const int n = static_cast<int>(x.rows());
  if (n < 2) throw FitError("gbt: need at least 2 training samples");
  if (static_cast<std::size_t>(n) != y.size()) throw GeometryError("gbt: X rows != y length");
  detail::check_labels_finite(y, "gbt");
  const bool early = params.early_stop_rounds > 0;
  if (early && val_y.empty()) throw DataError("gbt: early stopping needs a validation set");
  if (static_cast<std::size_t>(val_x.rows()) != val_y.size()) throw GeometryError("gbt: val X rows != val y length");
  if (!val_y.empty() && val_x.cols() != x.cols()) throw GeometryError("gbt: val feature count mismatch");
  detail::check_labels_finite(val_y, "gbt");

  GbtModel model;
  model.n_features = static_cast<int>(x.cols());
  model.n_classes = 1;
  model.learning_rate = params.learning_rate;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double base =
      *lo == *hi ? *lo : std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  model.base_score = {base};

  const auto binned = detail::bin_matrix(x, params.n_bins);
  std::vector<double> f(static_cast<std::size_t>(n), base), residual(static_cast<std::size_t>(n));
  std::vector<double> vf(val_y.size(), base);
  std::vector<std::int32_t> leaf_of_row;

  GbtTrace local;
  GbtTrace& tr = trace ? *trace : local;
  tr = {};
  tr.train_loss.push_back(detail::rmse(f, y));
  double best_val = val_y.empty() ? 0.0 : detail::rmse(vf, val_y);
  tr.val_metric.push_back(best_val);
  int best_rounds = 0;

  std::vector<Tree> trees;
  for (int round = 0; round < params.max_trees; ++round) {
    for (int i = 0; i < n; ++i) residual[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] - f[static_cast<std::size_t>(i)];
    auto rows = detail::subsample_rows(n, params.subsample, mix_seed(params.seed, static_cast<std::uint64_t>(round)));
    Tree tree = detail::fit_tree(binned, residual, std::move(rows), params, leaf_of_row);
    if (tree.nodes.size() == 1 && tree.nodes[0].value == 0.0) break;  // nothing left to fit
    for (int i = 0; i < n; ++i)
      f[static_cast<std::size_t>(i)] += params.learning_rate * tree.nodes[static_cast<std::size_t>(leaf_of_row[static_cast<std::size_t>(i)])].value;
    for (std::size_t i = 0; i < val_y.size(); ++i) {
      Eigen::RowVectorXd row = val_x.row(static_cast<Eigen::Index>(i));
      vf[i] += params.learning_rate * tree.predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    }
    trees.push_back(std::move(tree));
    tr.train_loss.push_back(detail::rmse(f, y));
    const double v = val_y.empty() ? 0.0 : detail::rmse(vf, val_y);
    tr.val_metric.push_back(v);
    if (!early || v < best_val) {
      best_val = v;
      best_rounds = round + 1;
    } else if (round + 1 - best_rounds >= params.early_stop_rounds) {
      break;
    }
  }
  trees.resize(static_cast<std::size_t>(best_rounds));
  model.trees = std::move(trees);
  tr.best_rounds = best_rounds;
  return model;
}

// Softmax boosting: each round fits one tree per class on the cross-entropy
// gradient (one-hot minus probability). Early stopping on validation accuracy;
// the earliest round reaching the best accuracy is kept.
inline GbtModel fit_classifier(const Eigen::MatrixXd& x, std::span<const int> labels, const Eigen::MatrixXd& val_x,
                               std::span<const int> val_labels, int n_classes, const GbtParams& params,
                               GbtTrace* trace = nullptr) {
  params.validate();
  const int n = static_cast<int>(x.rows());
  if (n_classes < 2) throw DataError("gbt: classifier needs at least 2 classes");
  if (n < 2) throw FitError("gbt: need at least 2 training samples");
  if (static_cast<std::size_t>(n) != labels.size()) throw GeometryError("gbt: X rows != label count");
  const bool early = params.early_stop_rounds > 0;
  if (early && val_labels.empty()) throw DataError("gbt: early stopping needs a validation set");
  if (static_cast<std::size_t>(val_x.rows()) != val_labels.size()) throw GeometryError("gbt: val X rows != val label count");
  if (!val_labels.empty() && val_x.cols() != x.cols()) throw GeometryError("gbt: val feature count mismatch");
  const auto k = static_cast<std::size_t>(n_classes);
  std::vector<int> counts(k, 0);
  for (int l : labels) {
    if (l < 0 || l >= n_classes) throw DataError("gbt: label " + std::to_string(l) + " outside [0, K)");
    ++counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] == 0) throw DataError("gbt: class " + std::to_string(c) + " missing from training data");
  for (int l : val_labels)
    if (l < 0 || l >= n_classes) throw DataError("gbt: validation label outside [0, K)");

  GbtModel model;
  model.n_features = static_cast<int>(x.cols());
  model.n_classes = n_classes;
  model.learning_rate = params.learning_rate;
  model.base_score.resize(k);
  for (std::size_t c = 0; c < k; ++c) model.base_score[c] = std::log(static_cast<double>(counts[c]) / n);

  const auto binned = detail::bin_matrix(x, params.n_bins);
  std::vector<double> f(static_cast<std::size_t>(n) * k), vf(val_labels.size() * k);
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i)
    std::copy(model.base_score.begin(), model.base_score.end(), f.begin() + static_cast<std::ptrdiff_t>(i * k));
  for (std::size_t i = 0; i < val_labels.size(); ++i)
    std::copy(model.base_score.begin(), model.base_score.end(), vf.begin() + static_cast<std::ptrdiff_t>(i * k));

  auto evaluate = [&](const std::vector<double>& scores, std::span<const int> lab) {
    double loss = 0.0;
    int correct = 0;
    for (std::size_t i = 0; i < lab.size(); ++i) {
      const std::span<const double> s(scores.data() + i * k, k);
      const auto p = softmax(s);
      loss -= std::log(std::max(p[static_cast<std::size_t>(lab[i])], 1e-300));
      correct += static_cast<int>(argmax_lowest(s)) == lab[i];
    }
    const double m = std::max<double>(1.0, static_cast<double>(lab.size()));
    return std::pair{loss / m, correct / m};
  };

  GbtTrace local;
  GbtTrace& tr = trace ? *trace : local;
  tr = {};
  tr.train_loss.push_back(evaluate(f, labels).first);
  double best_acc = evaluate(vf, val_labels).second;
  tr.val_metric.push_back(best_acc);
  int best_rounds = 0;

  std::vector<Tree> trees;
  std::vector<double> prob(static_cast<std::size_t>(n) * k), residual(static_cast<std::size_t>(n));
  std::vector<std::int32_t> leaf_of_row;
  for (int round = 0; round < params.max_trees; ++round) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
      const auto p = softmax(std::span<const double>(f.data() + i * k, k));
      std::copy(p.begin(), p.end(), prob.begin() + static_cast<std::ptrdiff_t>(i * k));
    }
    const auto rows = detail::subsample_rows(n, params.subsample, mix_seed(params.seed, static_cast<std::uint64_t>(round)));
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i)
        residual[i] = (labels[i] == static_cast<int>(c) ? 1.0 : 0.0) - prob[i * k + c];
      Tree tree = detail::fit_tree(binned, residual, rows, params, leaf_of_row);
      for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i)
        f[i * k + c] += params.learning_rate * tree.nodes[static_cast<std::size_t>(leaf_of_row[i])].value;
      for (std::size_t i = 0; i < val_labels.size(); ++i) {
        Eigen::RowVectorXd row = val_x.row(static_cast<Eigen::Index>(i));
        vf[i * k + c] += params.learning_rate * tree.predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
      }
      trees.push_back(std::move(tree));
    }
    tr.train_loss.push_back(evaluate(f, labels).first);
    const double vacc = evaluate(vf, val_labels).second;
    tr.val_metric.push_back(vacc);
    if (!early || vacc > best_acc) {
      best_acc = vacc;
      best_rounds = round + 1;
    } else if (round + 1 - best_rounds >= params.early_stop_rounds) {
      break;
    }
  }
  trees.resize(static_cast<std::size_t>(best_rounds) * k);
  model.trees = std::move(trees);
  tr.best_rounds = best_rounds;
  return model;
}

}  // namespace greenbiqa
