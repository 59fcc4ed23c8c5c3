#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greenbiqa/error.hpp"
#include "greenbiqa/feature.hpp"
#include "greenbiqa/gbt.hpp"
#include "greenbiqa/image.hpp"
#include "greenbiqa/kmeans.hpp"

namespace greenbiqa {

inline constexpr int kLowLevelDims = 14;

namespace detail {

using Kernel3 = std::array<std::array<double, 3>, 3>;

inline constexpr Kernel3 kLaplacian = {{{0, 1, 0}, {1, -4, 1}, {0, 1, 0}}};
inline constexpr Kernel3 kSobelX = {{{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}}};
inline constexpr Kernel3 kSobelY = {{{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}}};

// |k * p| with replicated borders.
inline std::vector<double> abs_filter(const Plane& p, const Kernel3& k) {
  std::vector<double> out(p.size());
  const int rows = p.rows(), cols = p.cols();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = std::clamp(r + dr, 0, rows - 1), cc = std::clamp(c + dc, 0, cols - 1);
          s += k[static_cast<std::size_t>(dr + 1)][static_cast<std::size_t>(dc + 1)] * p(rr, cc);
        }
      out[static_cast<std::size_t>(r) * cols + c] = std::abs(s);
    }
  return out;
}

struct CentralMoments {
  double mean = 0.0, var = 0.0, m3 = 0.0, m4 = 0.0;
};

inline CentralMoments central_moments(std::span<const double> v) {
  CentralMoments m;
  const double n = static_cast<double>(v.size());
  for (double x : v) m.mean += x;
  m.mean /= n;
  for (double x : v) {
    const double d = x - m.mean, d2 = d * d;
    m.var += d2;
    m.m3 += d2 * d;
    m.m4 += d2 * d2;
  }
  m.var /= n;
  m.m3 /= n;
  m.m4 /= n;
  return m;
}

}  // namespace detail

// [mean, variance, max] of |Laplacian|, |Sobel-x|, |Sobel-y| on Y; variances of
// Y, U, V; skewness and excess kurtosis of Y (both 0 for flat input).
inline FeatureVector lowlevel_features(const YuvPlanes& planes) {
  FeatureVector out;
  out.origin = FeatureOrigin::lowlevel;
  out.values.reserve(kLowLevelDims);
  for (const auto* k : {&detail::kLaplacian, &detail::kSobelX, &detail::kSobelY}) {
    const auto resp = detail::abs_filter(planes.y, *k);
    const auto m = detail::central_moments(resp);
    out.values.push_back(m.mean);
    out.values.push_back(m.var);
    out.values.push_back(*std::max_element(resp.begin(), resp.end()));
  }
  const auto my = detail::central_moments(planes.y.values());
  out.values.push_back(my.var);
  out.values.push_back(detail::central_moments(planes.u.values()).var);
  out.values.push_back(detail::central_moments(planes.v.values()).var);
  // Relative threshold so float noise on a flat plane does not yield huge ratios.
  const bool flat = my.var <= 1e-12 * std::max(1.0, my.mean * my.mean);
  out.values.push_back(flat ? 0.0 : my.m3 / std::pow(my.var, 1.5));
  out.values.push_back(flat ? 0.0 : my.m4 / (my.var * my.var) - 3.0);
  return out;
}

inline FeatureVector lowlevel_features(const SubImage& sub) { return lowlevel_features(sub.planes); }

// Raw distortion type id -> dense group id in [0, k).
struct MergeMap {
  std::map<int, int> groups;

  int group_count() const {
    int k = 0;
    for (const auto& [raw, g] : groups) k = std::max(k, g + 1);
    return k;
  }

  int group_of(int raw) const {
    const auto it = groups.find(raw);
    if (it == groups.end()) throw ConfigError("merge map has no entry for distortion type " + std::to_string(raw));
    return it->second;
  }

  // Renumbers arbitrary group ids densely, preserving their order.
  static MergeMap densified(const std::map<int, int>& raw_to_group) {
    std::map<int, int> dense;
    for (const auto& [raw, g] : raw_to_group) dense.emplace(g, 0);
    int next = 0;
    for (auto& [g, id] : dense) id = next++;
    MergeMap m;
    for (const auto& [raw, g] : raw_to_group) m.groups[raw] = dense[g];
    return m;
  }

  static MergeMap identity(std::span<const int> raw_types) {
    std::map<int, int> m;
    for (int t : raw_types) m.emplace(t, t);
    return densified(m);
  }

  // Lines of "raw_type_id=group_id"; blank lines and '#' comments ignored.
  static MergeMap parse(std::istream& in) {
    std::map<int, int> m;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto eq = line.find('=');
      try {
        if (eq == std::string::npos) throw std::invalid_argument("missing '='");
        std::size_t used = 0;
        const int raw = std::stoi(line.substr(0, eq), &used);
        const int group = std::stoi(line.substr(eq + 1), &used);
        if (!m.emplace(raw, group).second) throw std::invalid_argument("duplicate type id");
      } catch (const std::exception& e) {
        throw ParseError("merge map line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    return densified(m);
  }

  static MergeMap load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open merge map " + path.string());
    return parse(in);
  }
};

// KADID-10K's 25 types merged within published families: the three blurs;
// color quantization (6) with quantization (22); JPEG2000 (9) with JPEG (10);
// white noise (11) with impulse noise (13); multiplicative noise (14) with
// denoise (15). 19 groups.
inline MergeMap kadid_default_merge_map() {
  std::map<int, int> m;
  for (int t = 1; t <= 25; ++t) m[t] = t;
  m[2] = 1;
  m[3] = 1;
  m[22] = 6;
  m[10] = 9;
  m[13] = 11;
  m[15] = 14;
  return MergeMap::densified(m);
}

enum class RouterKind : std::uint8_t { classifier = 0, clusterer = 1 };

struct DistortionRouter {
  RouterKind kind = RouterKind::classifier;
  int k = 0;
  // classifier
  std::optional<GbtModel> classifier;
  MergeMap merge_map;
  // clusterer
  Eigen::MatrixXd centroids;
  std::vector<double> norm_mean;
  std::vector<double> norm_std;

  // Classifier: features are the selected spatial features. Clusterer:
  // features are the raw low-level features (normalized here).
  int route(std::span<const double> features) const {
    if (kind == RouterKind::classifier) return classifier->predict_class(features).label;
    if (features.size() != norm_mean.size())
      throw GeometryError("route: expected " + std::to_string(norm_mean.size()) + " low-level features");
    Eigen::RowVectorXd z(static_cast<Eigen::Index>(features.size()));
    for (std::size_t i = 0; i < features.size(); ++i)
      z[static_cast<Eigen::Index>(i)] = (features[i] - norm_mean[i]) / norm_std[i];
    return nearest_centroid(centroids, z);
  }
};

// Modal group over sub-images; ties to the lower id.
inline int image_group(std::span<const int> ids) {
  if (ids.empty()) throw DataError("image_group: no sub-image ids");
  std::map<int, int> counts;
  for (int id : ids) ++counts[id];
  int best = counts.begin()->first, best_n = 0;
  for (const auto& [id, n] : counts)
    if (n > best_n) {
      best = id;
      best_n = n;
    }
  return best;
}

inline DistortionRouter fit_router_synthetic(const Eigen::MatrixXd& features, std::span<const int> raw_types,
                                             const Eigen::MatrixXd& val_features, std::span<const int> val_raw_types,
                                             const MergeMap& merge_map, const GbtParams& params) {
  DistortionRouter r;
  r.kind = RouterKind::classifier;
  r.merge_map = merge_map;
  r.k = merge_map.group_count();
  if (r.k < 2) throw ConfigError("merge map yields " + std::to_string(r.k) + " group(s); need at least 2");
  std::vector<int> labels, val_labels;
  labels.reserve(raw_types.size());
  for (int t : raw_types) labels.push_back(merge_map.group_of(t));
  for (int t : val_raw_types) val_labels.push_back(merge_map.group_of(t));
  r.classifier = fit_classifier(features, labels, val_features, val_labels, r.k, params);
  return r;
}

inline DistortionRouter fit_router_authentic(const Eigen::MatrixXd& lowlevel, int k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("router: k must be >= 1");
  if (lowlevel.rows() < static_cast<Eigen::Index>(k) * 10)
    throw FitError("router: " + std::to_string(lowlevel.rows()) + " sub-images for k=" + std::to_string(k) +
                   "; need at least " + std::to_string(k * 10));
  DistortionRouter r;
  r.kind = RouterKind::clusterer;
  r.k = k;
  const auto d = lowlevel.cols();
  r.norm_mean.resize(static_cast<std::size_t>(d));
  r.norm_std.resize(static_cast<std::size_t>(d));
  Eigen::MatrixXd z(lowlevel.rows(), d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double mean = lowlevel.col(c).mean();
    const double sd = std::sqrt((lowlevel.col(c).array() - mean).square().mean());
    r.norm_mean[static_cast<std::size_t>(c)] = mean;
    r.norm_std[static_cast<std::size_t>(c)] = sd > 0.0 ? sd : 1.0;
    z.col(c) = (lowlevel.col(c).array() - mean) / r.norm_std[static_cast<std::size_t>(c)];
  }
  KMeansParams kp;
  kp.k = k;
  kp.seed = seed;
  r.centroids = kmeans(z, kp).centroids;
  return r;
}

}  // namespace greenbiqa
