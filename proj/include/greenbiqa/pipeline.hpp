#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "greenbiqa/dataset.hpp"
#include "greenbiqa/distortion.hpp"
#include "greenbiqa/error.hpp"
#include "greenbiqa/gbt.hpp"
#include "greenbiqa/image.hpp"
#include "greenbiqa/image_io.hpp"
#include "greenbiqa/parallel.hpp"
#include "greenbiqa/random.hpp"
#include "greenbiqa/rft.hpp"
#include "greenbiqa/spatial.hpp"
#include "greenbiqa/spatiocolor.hpp"

namespace greenbiqa {

struct CropConfig {
  int train_count = 25;
  int test_count = 25;
  int side = 32;

  friend bool operator==(const CropConfig&, const CropConfig&) = default;
};

struct PipelineConfig {
  Scenario scenario = Scenario::synthetic;
  CropConfig crop;
  SpatialConfig spatial;
  SpatioColorConfig spatiocolor;
  int spatial_select = 2048;      // clamped to the available dimensions
  int spatiocolor_select = 2000;  // authentic only
  int rft_bins = kDefaultRftBins;
  GbtParams regressor;
  GbtParams router;
  int clusters = 4;                // authentic router
  std::optional<MergeMap> merge_map;  // synthetic; identity over training types when absent
  int min_group_subimages = 20;
  double val_fraction = 0.1;  // used when train() draws its own validation images
  int threads = 1;            // 0 = hardware concurrency

  static PipelineConfig defaults(Scenario scenario) {
    PipelineConfig c;
    c.scenario = scenario;
    if (scenario == Scenario::synthetic) {
      c.crop = {25, 25, 32};
    } else {
      c.crop = {15, 25, 224};
      c.spatiocolor.n_components = 16;
    }
    c.spatial.side = c.crop.side;
    c.spatiocolor.side = c.crop.side;
    return c;
  }

  // Applies a crop side to every stage that depends on it.
  void set_crop_side(int side) {
    crop.side = side;
    spatial.side = side;
    spatiocolor.side = side;
  }

  void validate() const {
    if (crop.train_count < 1 || crop.test_count < 1) throw ConfigError("crop counts must be positive");
    if (crop.side != spatial.side) throw ConfigError("crop side must equal the spatial model side");
    SpatialGeometry::of(spatial.side, spatial.pool);
    if (scenario == Scenario::authentic) {
      if (crop.side != spatiocolor.side) throw ConfigError("crop side must equal the spatio-color model side");
      SpatioColorGeometry::of(spatiocolor.side, spatiocolor.pool);
      if (clusters < 1) throw ConfigError("clusters must be >= 1");
    }
    if (spatial_select < 1 || spatiocolor_select < 1) throw ConfigError("selection counts must be positive");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in (0, 1)");
    regressor.validate();
    router.validate();
  }
};

struct TrainedModel {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t format_version = kFormatVersion;
  Scenario scenario = Scenario::synthetic;
  CropConfig crop;
  std::uint64_t seed = 0;  // prediction crop offsets derive from it
  SpatialModels spatial;
  std::optional<SpatioColorModel> spatiocolor;
  std::vector<int> spatial_selected;      // indices into the Y|U|V spatial vector
  std::vector<int> spatiocolor_selected;  // indices into the spatio-color vector
  DistortionRouter router;
  std::vector<GbtModel> forests;
  std::vector<int> group_forest;  // group id -> index into `forests`
  double score_min = 0.0;
  double score_max = 0.0;

  int group_count() const noexcept { return router.k; }
  const GbtModel& regressor(int group) const {
    return forests.at(static_cast<std::size_t>(group_forest.at(static_cast<std::size_t>(group))));
  }
  int regressor_input_size() const {
    return static_cast<int>(spatial_selected.size() + spatiocolor_selected.size());
  }

  // Invariants a usable model satisfies; throws FormatError otherwise.
  void check() const {
    if (static_cast<int>(group_forest.size()) != router.k)
      throw FormatError("model: " + std::to_string(group_forest.size()) + " regressors for " +
                        std::to_string(router.k) + " groups");
    for (int f : group_forest)
      if (f < 0 || f >= static_cast<int>(forests.size())) throw FormatError("model: regressor index out of range");
    for (const auto& f : forests)
      if (f.n_features != regressor_input_size() || f.is_classifier())
        throw FormatError("model: regressor input size does not match the selected features");
    if (scenario == Scenario::authentic && !spatiocolor) throw FormatError("model: authentic model lacks spatio-color");
    if (router.kind == RouterKind::classifier && (!router.classifier ||
                                                  router.classifier->n_features !=
                                                      static_cast<int>(spatial_selected.size())))
      throw FormatError("model: router input size does not match the selected spatial features");
  }
};

struct Prediction {
  std::string image_id;
  double mos_pred = 0.0;
  std::vector<double> per_sub_scores;
  std::vector<int> groups;  // regressor group used for each sub-image
  int image_group = -1;     // synthetic: majority-voted distortion group
};

struct TrainReport {
  RftResult spatial_rft;
  std::optional<RftResult> spatiocolor_rft;
  std::size_t train_images = 0;
  std::size_t val_images = 0;
  std::size_t train_subimages = 0;
  std::vector<int> group_sizes;
  std::vector<bool> group_fallback;
};

// Lower-middle element for even counts.
inline double median_lower(std::vector<double> v) {
  if (v.empty()) throw DataError("median of an empty list");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

inline std::uint64_t crop_seed(std::uint64_t seed, const std::string& source_id) {
  return mix_seed(seed, hash_string(source_id));
}

// Sub-images cut on demand from 8-bit images held in memory.
class CropSet {
 public:
  struct Entry {
    std::size_t image = 0;
    CropOffset offset;
  };

  CropSet(const std::vector<Rgb8Image>& images, std::vector<Entry> entries, int side)
      : images_(&images), entries_(std::move(entries)), side_(side) {}

  // `count` crops of every image, offsets seeded by `seed` and the image id.
  static CropSet random(const std::vector<Rgb8Image>& images, int count, int side, std::uint64_t seed) {
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < images.size(); ++i) {
      const auto& img = images[i];
      for (const auto& o : crop_offsets(img.height, img.width, count, side, crop_seed(seed, img.source_id)))
        entries.push_back({i, o});
    }
    return CropSet(images, std::move(entries), side);
  }

  std::size_t size() const noexcept { return entries_.size(); }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  SubImage sub(std::size_t i) const {
    const auto& e = entries_[i];
    return crop_at((*images_)[e.image], side_, e.offset.top, e.offset.left);
  }
  YuvPlanes operator[](std::size_t i) const { return sub(i).planes; }

 private:
  const std::vector<Rgb8Image>* images_;
  std::vector<Entry> entries_;
  int side_;
};

namespace detail {

struct CuboidsOf {
  const CropSet& crops;
  std::size_t size() const { return crops.size(); }
  RgbCuboid operator[](std::size_t i) const { return yuv_to_rgb(crops[i]); }
};

inline std::vector<double> gather(std::span<const double> v, const std::vector<int>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
  return out;
}

struct SubFeatures {
  std::vector<double> regress;  // selected spatial (+ selected spatio-color)
  std::vector<double> route;    // router input
};

inline SubFeatures sub_features(const TrainedModel& m, const SubImage& sub) {
  SubFeatures f;
  const auto spatial = extract_spatial_yuv(m.spatial, sub.planes);
  f.regress = gather(spatial.values, m.spatial_selected);
  if (m.spatiocolor) {
    const auto sc = extract_spatiocolor(*m.spatiocolor, yuv_to_rgb(sub.planes));
    for (int i : m.spatiocolor_selected) f.regress.push_back(sc.values[static_cast<std::size_t>(i)]);
  }
  if (m.router.kind == RouterKind::classifier) {
    f.route.assign(f.regress.begin(), f.regress.begin() + static_cast<std::ptrdiff_t>(m.spatial_selected.size()));
  } else {
    f.route = lowlevel_features(sub).values;
  }
  return f;
}

template <typename RowFn>
Eigen::MatrixXd feature_matrix(std::size_t rows, int threads, RowFn&& row_of) {
  std::vector<std::vector<double>> data(rows);
  parallel_for(rows, threads, [&](std::size_t i) { data[i] = row_of(i); });
  const auto cols = rows ? static_cast<Eigen::Index>(data[0].size()) : 0;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(data[i].size()) != cols) throw GeometryError("feature rows differ in length");
    m.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(data[i].data(), cols);
    data[i] = {};
  }
  return m;
}

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<int>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  return out;
}

inline Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

// Drops PCA components whose feature slot is not selected; the serialized
// model then stores only what prediction reads.
inline void prune_spatial(SpatialModel& model, int offset, const std::vector<bool>& used) {
  const auto layout = model.layout();
  int at = offset + layout.pca_offset();
  for (auto& basis : model.agg_pca) {
    std::vector<bool> keep(static_cast<std::size_t>(basis.output_size()));
    for (std::size_t k = 0; k < keep.size(); ++k) keep[k] = used[static_cast<std::size_t>(at) + k];
    basis.retain(keep);
    at += basis.output_size();
  }
}

inline void prune_spatiocolor(SpatioColorModel& model, const std::vector<bool>& used) {
  std::size_t at = 0;
  for (auto& basis : model.channel_pca) {
    std::vector<bool> keep(static_cast<std::size_t>(basis.output_size()));
    for (std::size_t k = 0; k < keep.size(); ++k) keep[k] = used[at + k];
    basis.retain(keep);
    at += static_cast<std::size_t>(basis.output_size());
  }
}

inline std::vector<Rgb8Image> decode_all(const Dataset& records, int threads) {
  std::vector<Rgb8Image> out(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) { out[i] = decode_rgb8(records[i].image_path); });
  return out;
}

}  // namespace detail

// Image-wise validation draw used by train() when no validation set is given.
inline std::pair<Dataset, Dataset> draw_validation(const Dataset& records, double fraction, std::uint64_t seed) {
  if (records.size() < 2) throw DataError("training needs at least 2 images");
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(seed, hash_string("validation")));
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t n_val =
      std::clamp<std::size_t>(static_cast<std::size_t>(static_cast<double>(records.size()) * fraction), 1,
                              records.size() - 1);
  std::vector<bool> is_val(records.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
  Dataset train, val;
  for (std::size_t i = 0; i < records.size(); ++i) (is_val[i] ? val : train).push_back(records[i]);
  return {std::move(train), std::move(val)};
}

// Crop -> fit representations -> RFT selection -> router -> per-group
// regressors. `val_records` empty draws an image-wise validation split from
// `train_records`.
inline TrainedModel train(const Dataset& train_records, const Dataset& val_records, const PipelineConfig& config,
                          std::uint64_t seed, TrainReport* report = nullptr) {
  with_stage("config", [&] { config.validate(); });
  if (train_records.empty()) throw StageError("data", "training set is empty");
  const bool synthetic = config.scenario == Scenario::synthetic;
  Dataset train_set = train_records, val_set = val_records;
  if (val_set.empty())
    std::tie(train_set, val_set) = with_stage("data", [&] {
      return draw_validation(train_records, config.val_fraction, seed);
    });
  if (synthetic)
    with_stage("data", [&] {
      for (const auto* set : {&train_set, &val_set})
        for (const auto& r : *set)
          if (!r.distortion_type)
            throw DataError("synthetic training requires distortion labels: " + r.image_path.string());
    });

  const int threads = config.threads;
  const auto [train_images, val_images] = with_stage("decode", [&] {
    return std::pair{detail::decode_all(train_set, threads), detail::decode_all(val_set, threads)};
  });
  const auto [train_crops, val_crops] = with_stage("crop", [&] {
    return std::pair{CropSet::random(train_images, config.crop.train_count, config.crop.side, seed),
                     CropSet::random(val_images, config.crop.train_count, config.crop.side, seed)};
  });
  auto targets_of = [](const CropSet& crops, const Dataset& set) {
    std::vector<double> t;
    t.reserve(crops.size());
    for (std::size_t i = 0; i < crops.size(); ++i) t.push_back(set[crops.entry(i).image].mos);
    return t;
  };
  const auto y = targets_of(train_crops, train_set);
  const auto val_y = targets_of(val_crops, val_set);

  TrainedModel model;
  model.scenario = config.scenario;
  model.crop = config.crop;
  model.seed = seed;

  // Spatial representation and selection.
  model.spatial = with_stage("fit_spatial", [&] { return fit_spatial_yuv(train_crops, config.spatial); });
  auto spatial_rows = [&](const CropSet& crops) {
    return detail::feature_matrix(crops.size(), threads,
                                  [&](std::size_t i) { return extract_spatial_yuv(model.spatial, crops[i]).values; });
  };
  const Eigen::MatrixXd spatial_train = with_stage("extract_spatial", [&] { return spatial_rows(train_crops); });
  RftResult spatial_rft = with_stage("rft_spatial", [&] {
    const int count = std::min(config.spatial_select, static_cast<int>(spatial_train.cols()));
    return rft_select(spatial_train, y, count, config.rft_bins);
  });
  model.spatial_selected = spatial_rft.selected;
  Eigen::MatrixXd x = detail::select_columns(spatial_train, model.spatial_selected);
  Eigen::MatrixXd val_x = with_stage("extract_spatial", [&] {
    return detail::select_columns(spatial_rows(val_crops), model.spatial_selected);
  });

  std::optional<RftResult> sc_rft;
  if (!synthetic) {
    const detail::CuboidsOf train_cuboids{train_crops};
    model.spatiocolor = with_stage("fit_spatiocolor", [&] { return fit_spatiocolor(train_cuboids, config.spatiocolor); });
    auto sc_rows = [&](const CropSet& crops) {
      return detail::feature_matrix(crops.size(), threads, [&](std::size_t i) {
        return extract_spatiocolor(*model.spatiocolor, yuv_to_rgb(crops[i])).values;
      });
    };
    const Eigen::MatrixXd sc_train = with_stage("extract_spatiocolor", [&] { return sc_rows(train_crops); });
    sc_rft = with_stage("rft_spatiocolor", [&] {
      const int count = std::min(config.spatiocolor_select, static_cast<int>(sc_train.cols()));
      return rft_select(sc_train, y, count, config.rft_bins);
    });
    model.spatiocolor_selected = sc_rft->selected;
    const Eigen::MatrixXd sc_val = with_stage("extract_spatiocolor", [&] {
      return detail::select_columns(sc_rows(val_crops), model.spatiocolor_selected);
    });
    Eigen::MatrixXd joined(x.rows(), x.cols() + static_cast<Eigen::Index>(model.spatiocolor_selected.size()));
    joined << x, detail::select_columns(sc_train, model.spatiocolor_selected);
    x = std::move(joined);
    Eigen::MatrixXd val_joined(val_x.rows(), x.cols());
    val_joined << val_x, sc_val;
    val_x = std::move(val_joined);
  }

  // Router and group assignment of every training / validation sub-image.
  std::vector<int> groups(train_crops.size()), val_groups(val_crops.size());
  if (synthetic) {
    with_stage("router", [&] {
      std::vector<int> types, val_types;
      for (std::size_t i = 0; i < train_crops.size(); ++i)
        types.push_back(*train_set[train_crops.entry(i).image].distortion_type);
      for (std::size_t i = 0; i < val_crops.size(); ++i)
        val_types.push_back(*val_set[val_crops.entry(i).image].distortion_type);
      const MergeMap merge = config.merge_map ? *config.merge_map : MergeMap::identity(types);
      // Validation images of a type the merge map does not cover take no part
      // in router or per-group early stopping (group -1).
      std::vector<int> known_val;
      std::vector<int> known_types;
      for (std::size_t i = 0; i < val_types.size(); ++i) {
        const bool known = merge.groups.count(val_types[i]) > 0;
        val_groups[i] = known ? merge.group_of(val_types[i]) : -1;
        if (known) {
          known_val.push_back(static_cast<int>(i));
          known_types.push_back(val_types[i]);
        }
      }
      GbtParams params = config.router;
      params.seed = mix_seed(seed, hash_string("router"));
      const auto n_spatial = static_cast<Eigen::Index>(model.spatial_selected.size());
      model.router = fit_router_synthetic(x.leftCols(n_spatial), types,
                                          detail::select_rows(val_x.leftCols(n_spatial), known_val), known_types,
                                          merge, params);
      for (std::size_t i = 0; i < types.size(); ++i) groups[i] = merge.group_of(types[i]);
    });
  } else {
    with_stage("router", [&] {
      auto lowlevel = [&](const CropSet& crops) {
        return detail::feature_matrix(crops.size(), threads,
                                      [&](std::size_t i) { return lowlevel_features(crops.sub(i)).values; });
      };
      const Eigen::MatrixXd low = lowlevel(train_crops);
      model.router = fit_router_authentic(low, config.clusters, mix_seed(seed, hash_string("router")));
      const Eigen::MatrixXd val_low = lowlevel(val_crops);
      for (Eigen::Index i = 0; i < low.rows(); ++i) {
        const Eigen::RowVectorXd row = low.row(i);
        groups[static_cast<std::size_t>(i)] = model.router.route(std::span<const double>(row.data(), row.size()));
      }
      for (Eigen::Index i = 0; i < val_low.rows(); ++i) {
        const Eigen::RowVectorXd row = val_low.row(i);
        val_groups[static_cast<std::size_t>(i)] = model.router.route(std::span<const double>(row.data(), row.size()));
      }
    });
  }

  // Per-group regressors with small-group fallback to a global one.
  with_stage("regress", [&] {
    const int k = model.router.k;
    std::vector<std::vector<int>> rows(static_cast<std::size_t>(k)), val_rows(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < groups.size(); ++i) rows[static_cast<std::size_t>(groups[i])].push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < val_groups.size(); ++i)
      if (val_groups[i] >= 0) val_rows[static_cast<std::size_t>(val_groups[i])].push_back(static_cast<int>(i));
    auto fit = [&](const std::vector<int>& r, const std::vector<int>& vr, std::uint64_t s) {
      GbtParams params = config.regressor;
      params.seed = s;
      std::vector<double> ty, vy;
      for (int i : r) ty.push_back(y[static_cast<std::size_t>(i)]);
      for (int i : vr) vy.push_back(val_y[static_cast<std::size_t>(i)]);
      return fit_regressor(detail::select_rows(x, r), ty, detail::select_rows(val_x, vr), vy, params);
    };
    std::vector<int> all_val(val_y.size());
    for (std::size_t i = 0; i < all_val.size(); ++i) all_val[i] = static_cast<int>(i);
    std::optional<int> global;
    model.group_forest.assign(static_cast<std::size_t>(k), -1);
    if (report) {
      report->group_sizes.assign(static_cast<std::size_t>(k), 0);
      report->group_fallback.assign(static_cast<std::size_t>(k), false);
    }
    for (int g = 0; g < k; ++g) {
      const auto& r = rows[static_cast<std::size_t>(g)];
      if (report) report->group_sizes[static_cast<std::size_t>(g)] = static_cast<int>(r.size());
      if (static_cast<int>(r.size()) < config.min_group_subimages) {
        if (!global) {
          std::vector<int> all(y.size());
          for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
          model.forests.push_back(fit(all, all_val, mix_seed(seed, hash_string("global"))));
          global = static_cast<int>(model.forests.size()) - 1;
        }
        model.group_forest[static_cast<std::size_t>(g)] = *global;
        if (report) report->group_fallback[static_cast<std::size_t>(g)] = true;
        continue;
      }
      // A group absent from the validation images early-stops on all of them.
      const auto& vr = val_rows[static_cast<std::size_t>(g)].empty() ? all_val : val_rows[static_cast<std::size_t>(g)];
      model.forests.push_back(fit(r, vr, mix_seed(seed, static_cast<std::uint64_t>(g))));
      model.group_forest[static_cast<std::size_t>(g)] = static_cast<int>(model.forests.size()) - 1;
    }
  });

  model.score_min = *std::min_element(y.begin(), y.end());
  model.score_max = *std::max_element(y.begin(), y.end());

  const int spatial_total = static_cast<int>(spatial_train.cols());
  std::vector<bool> used(static_cast<std::size_t>(spatial_total), false);
  for (int i : model.spatial_selected) used[static_cast<std::size_t>(i)] = true;
  const int per_y = model.spatial.y.layout().total, per_u = model.spatial.u.layout().total;
  detail::prune_spatial(model.spatial.y, 0, used);
  detail::prune_spatial(model.spatial.u, per_y, used);
  detail::prune_spatial(model.spatial.v, per_y + per_u, used);
  if (model.spatiocolor) {
    std::vector<bool> sc_used(static_cast<std::size_t>(model.spatiocolor->output_length()), false);
    for (int i : model.spatiocolor_selected) sc_used[static_cast<std::size_t>(i)] = true;
    detail::prune_spatiocolor(*model.spatiocolor, sc_used);
  }

  if (report) {
    report->spatial_rft = std::move(spatial_rft);
    report->spatiocolor_rft = std::move(sc_rft);
    report->train_images = train_set.size();
    report->val_images = val_set.size();
    report->train_subimages = train_crops.size();
  }
  return model;
}

inline Prediction predict_subimages(const TrainedModel& model, const std::vector<SubImage>& subs, std::string id) {
  if (subs.empty()) throw DataError("predict: no sub-images");
  Prediction p;
  p.image_id = std::move(id);
  std::vector<detail::SubFeatures> feats;
  feats.reserve(subs.size());
  for (const auto& s : subs) feats.push_back(detail::sub_features(model, s));
  p.groups.reserve(subs.size());
  for (const auto& f : feats) p.groups.push_back(model.router.route(f.route));
  if (model.router.kind == RouterKind::classifier) {
    p.image_group = image_group(p.groups);
    std::fill(p.groups.begin(), p.groups.end(), p.image_group);
  }
  p.per_sub_scores.reserve(subs.size());
  for (std::size_t i = 0; i < subs.size(); ++i) p.per_sub_scores.push_back(model.regressor(p.groups[i]).predict(feats[i].regress));
  p.mos_pred = std::clamp(median_lower(p.per_sub_scores), model.score_min, model.score_max);
  return p;
}

inline Prediction predict_image(const TrainedModel& model, const Rgb8Image& image) {
  const auto offsets = with_stage("crop", [&] {
    return crop_offsets(image.height, image.width, model.crop.test_count, model.crop.side,
                        crop_seed(model.seed, image.source_id));
  });
  std::vector<SubImage> subs;
  subs.reserve(offsets.size());
  for (const auto& o : offsets) subs.push_back(crop_at(image, model.crop.side, o.top, o.left));
  return with_stage("predict", [&] { return predict_subimages(model, subs, image.source_id); });
}

inline Prediction predict_image(const TrainedModel& model, const std::filesystem::path& path) {
  return predict_image(model, with_stage("decode", [&] { return decode_rgb8(path); }));
}

// Predictions for every record, in record order.
inline std::vector<Prediction> predict_all(const TrainedModel& model, const Dataset& records, int threads = 1) {
  std::vector<Prediction> out(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) { out[i] = predict_image(model, records[i].image_path); });
  return out;
}

}  // namespace greenbiqa
