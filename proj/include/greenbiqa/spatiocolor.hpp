#pragma once

#include <concepts>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greenbiqa/error.hpp"
#include "greenbiqa/feature.hpp"
#include "greenbiqa/image.hpp"
#include "greenbiqa/pca.hpp"
#include "greenbiqa/saab.hpp"
#include "greenbiqa/spatial.hpp"
#include "greenbiqa/transforms.hpp"

namespace greenbiqa {

struct SpatioColorConfig {
  int side = 224;
  int n_components = 16;  // N, per final channel
  int pool = 4;
  int min_train_cuboids = 100;
  int max_fit_patches = 150000;
  int max_pca_samples = 1500;
};

inline constexpr int kSpatioColorHop1Channels = 48;  // 1 DC + 47 AC
inline constexpr int kSpatioColorFinalChannels = 16 + 47;

struct SpatioColorGeometry {
  int side = 0;
  int hop1_side = 0;
  int final_side = 0;

  static SpatioColorGeometry of(int side, int pool) {
    if (side <= 0 || side % 4 != 0)
      throw GeometryError("spatiocolor: side " + std::to_string(side) + " not divisible by 4");
    SpatioColorGeometry g;
    g.side = side;
    g.hop1_side = side / 4;
    if (g.hop1_side < 4 || g.hop1_side < pool)
      throw GeometryError("spatiocolor: side " + std::to_string(side) + " too small");
    if (pool != 4)
      throw ConfigError("spatiocolor: AC pooling must match the 4x4 hop2 stride");
    g.final_side = g.hop1_side / 4;
    return g;
  }
};

struct SpatioColorModel {
  SpatioColorConfig config;
  SaabKernel hop1;  // 4x4x3
  SaabKernel hop2;  // 4x4 on the hop1 DC channel
  std::vector<PcaBasis> channel_pca;  // kSpatioColorFinalChannels entries

  SpatioColorGeometry geometry() const { return SpatioColorGeometry::of(config.side, config.pool); }

  int output_length() const {
    int n = kSpatioColorFinalChannels;
    for (const auto& b : channel_pca) n += b.output_size();
    return n;
  }
};

template <typename S>
concept CuboidSource = requires(const S& s, std::size_t i) {
  { s.size() } -> std::convertible_to<std::size_t>;
  { s[i] } -> std::convertible_to<RgbCuboid>;
};

namespace detail {

inline ChannelMaps cuboid_channels(const RgbCuboid& cuboid) {
  ChannelMaps m;
  m.channels.assign(3, Plane(cuboid.side, cuboid.side));
  for (int r = 0; r < cuboid.side; ++r)
    for (int c = 0; c < cuboid.side; ++c)
      for (int ch = 0; ch < 3; ++ch) m.channels[ch](r, c) = cuboid(r, c, ch);
  return m;
}

inline void check_cuboid(const SpatioColorGeometry& g, const RgbCuboid& cuboid) {
  if (cuboid.side != g.side || cuboid.data.size() != static_cast<std::size_t>(g.side) * g.side * 3)
    throw GeometryError("spatiocolor: cuboid side " + std::to_string(cuboid.side) +
                        " does not match model side " + std::to_string(g.side));
}

inline ChannelMaps spatiocolor_hop1(const SaabKernel& hop1, const SpatioColorGeometry& g,
                                    const RgbCuboid& cuboid) {
  check_cuboid(g, cuboid);
  return apply_saab(hop1, cuboid_channels(cuboid));
}

// The 63 final channels: 16 hop2 channels then 47 pooled |AC| channels.
inline std::vector<Plane> spatiocolor_final(const SaabKernel& hop2, const ChannelMaps& hop1, int pool) {
  std::vector<Plane> out;
  out.reserve(kSpatioColorFinalChannels);
  auto h2 = apply_saab(hop2, single_channel(crop_to_multiple(hop1.channels[0], 4)));
  for (auto& ch : h2.channels) out.push_back(std::move(ch));
  for (int k = 1; k < kSpatioColorHop1Channels; ++k)
    out.push_back(abs_max_pool(crop_to_multiple(hop1.channels[k], pool), pool));
  return out;
}

}  // namespace detail

template <CuboidSource Source>
SpatioColorModel fit_spatiocolor(const Source& cuboids, const SpatioColorConfig& config) {
  if (static_cast<int>(cuboids.size()) < config.min_train_cuboids)
    throw FitError("fit_spatiocolor: " + std::to_string(cuboids.size()) +
                   " training cuboids, need at least " + std::to_string(config.min_train_cuboids));
  const auto g = SpatioColorGeometry::of(config.side, config.pool);
  SpatioColorModel model;
  model.config = config;

  const PatchShape shape3{4, 4, 3};
  model.hop1 = fit_saab(detail::collect_rows(cuboids.size(), config.max_fit_patches,
                                             [&](std::size_t i) {
                                               const RgbCuboid c = cuboids[i];
                                               detail::check_cuboid(g, c);
                                               return extract_patches(detail::cuboid_channels(c), shape3);
                                             }),
                        shape3);

  const PatchShape shape2{4, 4, 1};
  model.hop2 = fit_saab(detail::collect_rows(cuboids.size(), config.max_fit_patches,
                                             [&](std::size_t i) {
                                               const auto h1 = detail::spatiocolor_hop1(model.hop1, g, cuboids[i]);
                                               return extract_patches(
                                                   single_channel(crop_to_multiple(h1.channels[0], 4)), shape2);
                                             }),
                        shape2);

  const int cap = config.max_pca_samples > 0 ? config.max_pca_samples : static_cast<int>(cuboids.size());
  const int n_samples = std::min<int>(cap, static_cast<int>(cuboids.size()));
  std::vector<Eigen::MatrixXd> samples(kSpatioColorFinalChannels);
  for (int s = 0; s < n_samples; ++s) {
    const auto idx = static_cast<std::size_t>(static_cast<double>(s) * cuboids.size() / n_samples);
    const auto final = detail::spatiocolor_final(
        model.hop2, detail::spatiocolor_hop1(model.hop1, g, cuboids[idx]), config.pool);
    for (int ch = 0; ch < kSpatioColorFinalChannels; ++ch) {
      const auto n = static_cast<Eigen::Index>(final[ch].size());
      if (s == 0) samples[ch].resize(n_samples, n);
      samples[ch].row(s) = Eigen::Map<const Eigen::RowVectorXd>(final[ch].values().data(), n);
    }
  }
  model.channel_pca.reserve(kSpatioColorFinalChannels);
  for (int ch = 0; ch < kSpatioColorFinalChannels; ++ch) {
    const int entries = static_cast<int>(samples[ch].cols());
    const int k = std::min({config.n_components, entries, n_samples - 1});
    model.channel_pca.push_back(pca_fit(samples[ch], k));
    samples[ch] = {};
  }
  return model;
}

// [N PCA coefficients per final channel | std of each final channel].
inline FeatureVector extract_spatiocolor(const SpatioColorModel& model, const RgbCuboid& cuboid) {
  const auto g = model.geometry();
  const auto final =
      detail::spatiocolor_final(model.hop2, detail::spatiocolor_hop1(model.hop1, g, cuboid), model.config.pool);
  FeatureVector out;
  out.origin = FeatureOrigin::spatiocolor;
  out.values.reserve(static_cast<std::size_t>(model.output_length()));
  for (std::size_t ch = 0; ch < final.size(); ++ch) {
    const auto& basis = model.channel_pca[ch];
    const std::size_t at = out.values.size();
    out.values.resize(at + static_cast<std::size_t>(basis.output_size()));
    basis.project_into(final[ch].values(), std::span<double>(out.values).subspan(at));
  }
  for (const auto& ch : final) out.values.push_back(moment_stats(ch.values()).std);
  return out;
}

}  // namespace greenbiqa
