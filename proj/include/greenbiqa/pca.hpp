#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greenbiqa/error.hpp"

namespace greenbiqa {

namespace detail {

// Flips v so that its largest-magnitude element (lowest index on ties) is positive.
inline void canonical_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v[best] < 0) v = -v;
}

struct SortedEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns match `values`
};

// Eigendecomposition of a symmetric matrix, eigenpairs sorted by decreasing
// eigenvalue with ties kept in solver index order; signs canonicalized.
inline SortedEigen sorted_eigen(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw FitError("eigendecomposition did not converge");
  const Eigen::Index n = sym.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return ev[a] > ev[b]; });
  SortedEigen out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[i] = std::max(0.0, ev[order[static_cast<std::size_t>(i)]]);
    out.vectors.col(i) = solver.eigenvectors().col(order[static_cast<std::size_t>(i)]);
    canonical_sign(out.vectors.col(i));
  }
  return out;
}

// Sample covariance (divides by m - 1) of the rows of `samples` about `mean`.
inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& samples, const Eigen::RowVectorXd& mean) {
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(samples.cols(), samples.cols());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  cov = cov.selfadjointView<Eigen::Lower>();
  return cov / static_cast<double>(samples.rows() - 1);
}

}  // namespace detail

// Mean plus the top-k eigenvectors of the sample covariance.
//
// A basis can be pruned after fitting: slots that no downstream consumer reads
// drop their component row, and projection writes 0 into them. This keeps the
// projected vector layout stable while shrinking the stored model.
struct PcaBasis {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // rows are kept components, rows orthonormal
  Eigen::VectorXd explained_variance;
  std::vector<int> slots;  // output slot of each stored row
  int n_slots = 0;         // projected vector length

  int dim() const noexcept { return static_cast<int>(mean.size()); }
  int output_size() const noexcept { return n_slots; }

  void project_into(std::span<const double> x, std::span<double> out) const {
    if (static_cast<Eigen::Index>(x.size()) != mean.size())
      throw GeometryError("pca_project: input length " + std::to_string(x.size()) +
                          " != basis dimension " + std::to_string(mean.size()));
    if (static_cast<int>(out.size()) != n_slots)
      throw GeometryError("pca_project: output length mismatch");
    std::fill(out.begin(), out.end(), 0.0);
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd centered = v - mean;
    for (Eigen::Index r = 0; r < components.rows(); ++r)
      out[static_cast<std::size_t>(slots[static_cast<std::size_t>(r)])] =
          components.row(r).dot(centered);
  }

  std::vector<double> project(std::span<const double> x) const {
    std::vector<double> out(static_cast<std::size_t>(n_slots));
    project_into(x, out);
    return out;
  }

  // Keeps only the component rows whose slot is flagged in `keep`.
  void retain(const std::vector<bool>& keep) {
    if (static_cast<int>(keep.size()) != n_slots) throw GeometryError("retain: mask length mismatch");
    std::vector<Eigen::Index> rows;
    for (Eigen::Index r = 0; r < components.rows(); ++r)
      if (keep[static_cast<std::size_t>(slots[static_cast<std::size_t>(r)])]) rows.push_back(r);
    Eigen::MatrixXd comp(static_cast<Eigen::Index>(rows.size()), components.cols());
    Eigen::VectorXd var(static_cast<Eigen::Index>(rows.size()));
    std::vector<int> new_slots;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      comp.row(static_cast<Eigen::Index>(i)) = components.row(rows[i]);
      var[static_cast<Eigen::Index>(i)] = explained_variance[rows[i]];
      new_slots.push_back(slots[static_cast<std::size_t>(rows[i])]);
    }
    components = std::move(comp);
    explained_variance = std::move(var);
    slots = std::move(new_slots);
  }
};

// `samples` holds one observation per row.
inline PcaBasis pca_fit(const Eigen::MatrixXd& samples, int k) {
  const auto n = samples.cols();
  if (k < 0 || k > n)
    throw FitError("pca_fit: k=" + std::to_string(k) + " outside [0, " + std::to_string(n) + "]");
  if (samples.rows() < k + 1 || samples.rows() < 2)
    throw FitError("pca_fit: " + std::to_string(samples.rows()) + " samples for k=" +
                   std::to_string(k));
  PcaBasis basis;
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  basis.mean = mean.transpose();
  basis.n_slots = k;
  basis.slots.resize(static_cast<std::size_t>(k));
  std::iota(basis.slots.begin(), basis.slots.end(), 0);
  if (k == 0) {
    basis.components.resize(0, n);
    basis.explained_variance.resize(0);
    return basis;
  }
  const auto eig = detail::sorted_eigen(detail::covariance(samples, mean));
  basis.components = eig.vectors.leftCols(k).transpose();
  basis.explained_variance = eig.values.head(k);
  return basis;
}

inline PcaBasis pca_fit(const std::vector<std::vector<double>>& samples, int k) {
  if (samples.empty()) throw FitError("pca_fit: no samples");
  const auto n = static_cast<Eigen::Index>(samples.front().size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(samples.size()), n);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (static_cast<Eigen::Index>(samples[i].size()) != n)
      throw GeometryError("pca_fit: ragged samples");
    m.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(samples[i].data(), n);
  }
  return pca_fit(m, k);
}

inline std::vector<double> pca_project(const PcaBasis& basis, std::span<const double> x) {
  return basis.project(x);
}

}  // namespace greenbiqa
