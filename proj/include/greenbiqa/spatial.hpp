#pragma once

#include <concepts>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greenbiqa/error.hpp"
#include "greenbiqa/feature.hpp"
#include "greenbiqa/pca.hpp"
#include "greenbiqa/saab.hpp"
#include "greenbiqa/transforms.hpp"

namespace greenbiqa {

struct SpatialConfig {
  int side = 32;
  int pca_components = 8;   // P, per aggregated channel
  int min_pca_entries = 8;  // pooled maps smaller than this skip PCA
  int pool = 2;
  int min_train_planes = 100;
  int max_fit_patches = 200000;
  int max_pca_samples = 1500;
};

// Map sizes implied by a sub-image side. Maps entering a 4x4 hop or a pooling
// step are center-cropped to a multiple of the window.
struct SpatialGeometry {
  int side = 0;
  int dct_side = 0;    // DC/AC map side after the 8x8 DCT
  int hop1_in = 0;     // DC map side after cropping to a multiple of 4
  int hop1_side = 0;   // hop1 output side
  bool has_hop2 = false;
  int hop2_in = 0;
  int hop2_side = 0;
  int dct_pooled = 0;  // pooled AC map sides
  int hop1_pooled = 0;

  static SpatialGeometry of(int side, int pool) {
    if (side <= 0 || side % 8 != 0)
      throw GeometryError("spatial: side " + std::to_string(side) + " not divisible by 8");
    SpatialGeometry g;
    g.side = side;
    g.dct_side = side / 8;
    g.hop1_in = g.dct_side / 4 * 4;
    if (g.hop1_in < 4)
      throw GeometryError("spatial: side " + std::to_string(side) + " too small for a Saab hop");
    g.hop1_side = g.hop1_in / 4;
    g.has_hop2 = g.hop1_side >= 4;
    if (g.has_hop2) {
      g.hop2_in = g.hop1_side / 4 * 4;
      g.hop2_side = g.hop2_in / 4;
    }
    auto pooled = [pool](int s) { return s >= pool ? s / pool : s; };
    g.dct_pooled = pooled(g.dct_side);
    g.hop1_pooled = pooled(g.hop1_side);
    return g;
  }

  // Length of the low-frequency block: every hop2 coefficient, or the hop1 DC
  // map when the cascade stops after one hop.
  int low_length() const {
    return has_hop2 ? 16 * hop2_side * hop2_side : hop1_side * hop1_side;
  }
};

inline constexpr int kSpatialDctChannels = 63;   // AC1..AC63
inline constexpr int kSpatialHop1Channels = 15;  // hop1 AC1..AC15
inline constexpr int kSpatialAggChannels = kSpatialDctChannels + kSpatialHop1Channels;

struct SpatialLayout {
  int low = 0;
  int stats = 0;
  std::vector<int> pca;  // per aggregated channel
  int total = 0;
  int pca_offset() const noexcept { return low + stats; }
};

struct SpatialModel {
  SpatialConfig config;
  SaabKernel hop1;
  std::optional<SaabKernel> hop2;
  std::vector<PcaBasis> agg_pca;  // kSpatialAggChannels entries

  SpatialGeometry geometry() const { return SpatialGeometry::of(config.side, config.pool); }

  SpatialLayout layout() const {
    SpatialLayout l;
    l.low = geometry().low_length();
    l.stats = 3 * kSpatialAggChannels;
    int offset = 0;
    for (const auto& b : agg_pca) {
      l.pca.push_back(b.output_size());
      offset += b.output_size();
    }
    l.total = l.low + l.stats + offset;
    return l;
  }
};

namespace detail {

inline Plane pool_map(const Plane& map, int pool) {
  if (map.rows() < pool || map.cols() < pool) return abs_max_pool(map, 1);
  return abs_max_pool(crop_to_multiple(map, pool), pool);
}

struct SpatialCascade {
  ChannelMaps dct;
  ChannelMaps hop1;
  std::optional<ChannelMaps> hop2;
};

inline Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& m, int cap) {
  if (cap <= 0 || m.rows() <= cap) return m;
  Eigen::MatrixXd out(cap, m.cols());
  for (int i = 0; i < cap; ++i)
    out.row(i) = m.row(static_cast<Eigen::Index>(static_cast<double>(i) * m.rows() / cap));
  return out;
}

// Collects patch rows from `count` items, keeping at most about `cap` rows in
// total by striding within each item.
template <typename PatchFn>
Eigen::MatrixXd collect_rows(std::size_t count, int cap, PatchFn&& patches_of) {
  const Eigen::Index per_item =
      cap > 0 ? std::max<Eigen::Index>(1, static_cast<Eigen::Index>(cap / std::max<std::size_t>(1, count)))
              : std::numeric_limits<Eigen::Index>::max();
  std::vector<Eigen::MatrixXd> parts;
  parts.reserve(count);
  Eigen::Index rows = 0;
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::MatrixXd p = patches_of(i);
    if (p.rows() > per_item) p = subsample_rows(p, static_cast<int>(per_item));
    rows += p.rows();
    parts.push_back(std::move(p));
  }
  if (parts.empty()) return {};
  Eigen::MatrixXd all(rows, parts.front().cols());
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    all.middleRows(r, p.rows()) = p;
    r += p.rows();
  }
  return all;
}

inline void check_plane(const SpatialGeometry& g, const Plane& plane) {
  if (plane.rows() != g.side || plane.cols() != g.side)
    throw GeometryError("spatial: plane " + std::to_string(plane.rows()) + "x" +
                        std::to_string(plane.cols()) + " does not match model side " +
                        std::to_string(g.side));
}

// Pooled aggregated channels of one plane: DCT AC1..63 then hop1 AC1..15.
inline std::vector<Plane> aggregated_maps(const SpatialCascade& c, int pool) {
  std::vector<Plane> out;
  out.reserve(kSpatialAggChannels);
  for (int k = 1; k <= kSpatialDctChannels; ++k) out.push_back(pool_map(c.dct.channels[k], pool));
  for (int k = 1; k <= kSpatialHop1Channels; ++k)
    out.push_back(pool_map(c.hop1.channels[k], pool));
  return out;
}

}  // namespace detail

inline detail::SpatialCascade spatial_cascade(const SpatialModel& model, const Plane& plane) {
  const auto g = model.geometry();
  detail::check_plane(g, plane);
  detail::SpatialCascade c;
  c.dct = block_dct_8x8(plane);
  c.hop1 = apply_saab(model.hop1, single_channel(crop_to_multiple(c.dct.channels[0], 4)));
  if (model.hop2) c.hop2 = apply_saab(*model.hop2, single_channel(crop_to_multiple(c.hop1.channels[0], 4)));
  return c;
}

// Random-access collection of planes; elements may be produced on demand.
template <typename S>
concept PlaneSource = requires(const S& s, std::size_t i) {
  { s.size() } -> std::convertible_to<std::size_t>;
  { s[i] } -> std::convertible_to<Plane>;
};

// Unsupervised fit on one plane type (Y, U or V) of the training sub-images.
template <PlaneSource Source>
SpatialModel fit_spatial(const Source& planes, const SpatialConfig& config) {
  if (static_cast<int>(planes.size()) < config.min_train_planes)
    throw FitError("fit_spatial: " + std::to_string(planes.size()) +
                   " training planes, need at least " + std::to_string(config.min_train_planes));
  const auto g = SpatialGeometry::of(config.side, config.pool);

  SpatialModel model;
  model.config = config;
  const PatchShape shape{4, 4, 1};

  // Each pass recomputes the DCT instead of holding 64 channels per plane.
  model.hop1 = fit_saab(detail::collect_rows(planes.size(), config.max_fit_patches,
                                             [&](std::size_t i) {
                                               const Plane p = planes[i];
                                               detail::check_plane(g, p);
                                               const auto dct = block_dct_8x8(p);
                                               return extract_patches(
                                                   single_channel(crop_to_multiple(dct.channels[0], 4)), shape);
                                             }),
                        shape);
  if (g.has_hop2) {
    model.hop2 = fit_saab(
        detail::collect_rows(planes.size(), config.max_fit_patches,
                             [&](std::size_t i) {
                               const auto dct = block_dct_8x8(planes[i]);
                               const auto hop1 = apply_saab(
                                   model.hop1, single_channel(crop_to_multiple(dct.channels[0], 4)));
                               return extract_patches(
                                   single_channel(crop_to_multiple(hop1.channels[0], 4)), shape);
                             }),
        shape);
  }

  // Per-channel PCA over flattened pooled maps of an evenly strided subset.
  const int cap = config.max_pca_samples > 0 ? config.max_pca_samples : static_cast<int>(planes.size());
  const int n_samples = std::min<int>(cap, static_cast<int>(planes.size()));
  std::vector<Eigen::MatrixXd> samples(kSpatialAggChannels);
  SpatialModel partial = model;
  partial.hop2.reset();
  for (int s = 0; s < n_samples; ++s) {
    const Plane plane = planes[static_cast<std::size_t>(static_cast<double>(s) * planes.size() / n_samples)];
    const auto pooled = detail::aggregated_maps(spatial_cascade(partial, plane), config.pool);
    for (int ch = 0; ch < kSpatialAggChannels; ++ch) {
      if (s == 0) samples[ch].resize(n_samples, static_cast<Eigen::Index>(pooled[ch].size()));
      samples[ch].row(s) = Eigen::Map<const Eigen::RowVectorXd>(
          pooled[ch].values().data(), static_cast<Eigen::Index>(pooled[ch].size()));
    }
  }
  model.agg_pca.reserve(kSpatialAggChannels);
  for (int ch = 0; ch < kSpatialAggChannels; ++ch) {
    const int entries = static_cast<int>(samples[ch].cols());
    const int k = entries >= config.min_pca_entries
                      ? std::min({config.pca_components, entries, n_samples - 1})
                      : 0;
    model.agg_pca.push_back(pca_fit(samples[ch], k));
    samples[ch] = {};
  }
  return model;
}

// [low-frequency block | (max, mean, std) per aggregated channel | per-channel
// PCA projections], aggregated channels ordered DCT AC1..63 then hop1 AC1..15.
inline FeatureVector extract_spatial(const SpatialModel& model, const Plane& plane) {
  const auto c = spatial_cascade(model, plane);
  const auto layout = model.layout();
  FeatureVector out;
  out.origin = FeatureOrigin::spatial;
  out.values.reserve(static_cast<std::size_t>(layout.total));

  if (c.hop2) {
    for (const auto& ch : c.hop2->channels)
      out.values.insert(out.values.end(), ch.values().begin(), ch.values().end());
  } else {
    const auto& dc = c.hop1.channels[0].values();
    out.values.insert(out.values.end(), dc.begin(), dc.end());
  }

  const auto pooled = detail::aggregated_maps(c, model.config.pool);
  for (const auto& map : pooled) {
    const auto s = moment_stats(map.values());
    out.values.insert(out.values.end(), {s.max, s.mean, s.std});
  }
  for (std::size_t ch = 0; ch < pooled.size(); ++ch) {
    const auto& basis = model.agg_pca[ch];
    const std::size_t at = out.values.size();
    out.values.resize(at + static_cast<std::size_t>(basis.output_size()));
    basis.project_into(pooled[ch].values(), std::span<double>(out.values).subspan(at));
  }
  return out;
}

// Y, U and V plane models fitted independently.
struct SpatialModels {
  SpatialModel y, u, v;
};

inline FeatureVector extract_spatial_yuv(const SpatialModel& model_y, const SpatialModel& model_u,
                                         const SpatialModel& model_v, const YuvPlanes& planes) {
  FeatureVector out = extract_spatial(model_y, planes.y);
  for (const auto* part : {&model_u, &model_v}) {
    const auto f = extract_spatial(*part, part == &model_u ? planes.u : planes.v);
    out.values.insert(out.values.end(), f.values.begin(), f.values.end());
  }
  return out;
}

inline FeatureVector extract_spatial_yuv(const SpatialModels& m, const YuvPlanes& planes) {
  return extract_spatial_yuv(m.y, m.u, m.v, planes);
}

namespace detail {

// Projects a source of YUV sub-images onto one plane.
template <typename Subs>
struct PlaneOf {
  const Subs& subs;
  Plane YuvPlanes::*which;
  std::size_t size() const { return subs.size(); }
  Plane operator[](std::size_t i) const {
    const YuvPlanes planes = subs[i];
    return planes.*which;
  }
};

}  // namespace detail

template <typename Subs>
SpatialModels fit_spatial_yuv(const Subs& subs, const SpatialConfig& config) {
  return {fit_spatial(detail::PlaneOf<Subs>{subs, &YuvPlanes::y}, config),
          fit_spatial(detail::PlaneOf<Subs>{subs, &YuvPlanes::u}, config),
          fit_spatial(detail::PlaneOf<Subs>{subs, &YuvPlanes::v}, config)};
}

}  // namespace greenbiqa
