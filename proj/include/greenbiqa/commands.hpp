#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "greenbiqa/dataset.hpp"
#include "greenbiqa/metrics.hpp"
#include "greenbiqa/model_io.hpp"
#include "greenbiqa/pipeline.hpp"

namespace greenbiqa {

inline constexpr const char* kReportSchema = "greenbiqa.report/1";

struct RunOptions {
  std::filesystem::path manifest;
  std::filesystem::path images_dir;  // empty: the manifest's directory
  std::filesystem::path test_manifest;
  std::filesystem::path test_images_dir;
  Scenario scenario = Scenario::synthetic;
  std::optional<Scenario> test_scenario;
  std::filesystem::path model;
  std::vector<std::filesystem::path> images;  // predict without a manifest
  std::uint64_t seed = 0;
  int repeats = 10;
  std::vector<double> fractions = {0.1, 0.2, 0.5, 1.0};
  double al_initial = 0.1;
  double al_step = 0.1;
  int al_steps = 8;
  std::optional<int> crop_train;
  std::optional<int> crop_test;
  std::optional<int> crop_side;
  std::filesystem::path merge_map;
  std::filesystem::path dump_rft;
  int parallel_runs = 1;
  int threads = 1;
  double test_fraction = 0.2;
  // gen-mini
  std::filesystem::path out_dir;
  int seed_count = 8;
  std::filesystem::path seed_images_dir;

  void validate() const {
    if (repeats < 1) throw ConfigError("--repeats must be >= 1");
    for (double f : fractions)
      if (!(f > 0.0 && f <= 1.0)) throw ConfigError("fractions must lie in (0, 1]");
    if (!(al_initial > 0.0 && al_initial < 1.0)) throw ConfigError("active-learning initial fraction must lie in (0, 1)");
    if (!(al_step > 0.0 && al_step <= 1.0)) throw ConfigError("--al-step must lie in (0, 1]");
    if (al_steps < 1) throw ConfigError("--al-steps must be >= 1");
    if (parallel_runs < 1) throw ConfigError("--parallel-runs must be >= 1");
  }
};

// Pipeline configuration for the options' scenario with flag overrides.
inline PipelineConfig pipeline_config(const RunOptions& o) {
  auto c = PipelineConfig::defaults(o.scenario);
  if (o.crop_side) c.set_crop_side(*o.crop_side);
  if (o.crop_train) c.crop.train_count = *o.crop_train;
  if (o.crop_test) c.crop.test_count = *o.crop_test;
  if (!o.merge_map.empty()) c.merge_map = with_stage("merge_map", [&] { return MergeMap::load(o.merge_map); });
  c.threads = o.threads;
  with_stage("config", [&] { c.validate(); });
  return c;
}

inline Dataset load_records(const std::filesystem::path& manifest, const std::filesystem::path& images_dir,
                            Scenario scenario) {
  return with_stage("manifest", [&] {
    return load_manifest(manifest, images_dir.empty() ? manifest.parent_path() : images_dir, scenario);
  });
}

namespace detail {

// Sample median; mean of the middle pair for even counts.
inline double sample_median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1); 0 for a single value.
inline double stdev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double population_stdev(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

template <typename F>
void run_indexed(std::size_t n, int parallel, F&& f) {
  parallel_for(n, parallel, std::forward<F>(f));
}

inline SplitPolicy policy_for(Scenario s) {
  return s == Scenario::synthetic ? SplitPolicy::by_reference : SplitPolicy::by_image;
}

}  // namespace detail

struct EvalRun {
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double plcc = 0.0;
  double srocc = 0.0;
  std::optional<double> classifier_accuracy;  // synthetic: image-level routing accuracy
};

inline nlohmann::json to_json(const EvalRun& r) {
  nlohmann::json j = {{"seed", r.seed}, {"n_train", r.n_train}, {"n_test", r.n_test},
                      {"plcc", r.plcc}, {"srocc", r.srocc}};
  if (r.classifier_accuracy) j["classifier_accuracy"] = *r.classifier_accuracy;
  return j;
}

inline std::vector<double> mos_of(const Dataset& d) {
  std::vector<double> v;
  v.reserve(d.size());
  for (const auto& r : d) v.push_back(r.mos);
  return v;
}

// Trains on `train_set`, predicts `test_set`, and scores the predictions.
inline EvalRun train_and_score(const Dataset& train_set, const Dataset& test_set, const PipelineConfig& config,
                               std::uint64_t seed, TrainReport* report = nullptr, TrainedModel* model_out = nullptr) {
  const auto model = train(train_set, {}, config, seed, report);
  const auto preds = predict_all(model, test_set, config.threads);
  std::vector<double> pred;
  for (const auto& p : preds) pred.push_back(p.mos_pred);
  const auto truth = mos_of(test_set);
  EvalRun run;
  run.seed = seed;
  run.n_train = train_set.size();
  run.n_test = test_set.size();
  const auto rep = with_stage("evaluate", [&] { return evaluate(pred, truth); });
  run.plcc = rep.plcc;
  run.srocc = rep.srocc;
  if (model.router.kind == RouterKind::classifier) {
    std::size_t hits = 0, known = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const auto& t = test_set[i].distortion_type;
      if (!t || !model.router.merge_map.groups.count(*t)) continue;
      ++known;
      hits += preds[i].image_group == model.router.merge_map.group_of(*t);
    }
    if (known) run.classifier_accuracy = static_cast<double>(hits) / static_cast<double>(known);
  }
  if (model_out) *model_out = model;
  return run;
}

inline void write_rft_dump(const std::filesystem::path& path, const TrainReport& report) {
  auto write = [](const std::filesystem::path& p, const RftResult& r) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    out.precision(17);
    r.write_cost_curve_csv(out);
  };
  write(path, report.spatial_rft);
  if (report.spatiocolor_rft) {
    auto sc = path;
    sc.replace_filename(path.stem().string() + "_spatiocolor" + path.extension().string());
    write(sc, *report.spatiocolor_rft);
  }
}

inline nlohmann::json cmd_train(const RunOptions& o) {
  const auto config = pipeline_config(o);
  if (o.model.empty()) throw ConfigError("train: --model is required");
  const auto records = load_records(o.manifest, o.images_dir, o.scenario);
  TrainReport report;
  const auto model = train(records, {}, config, o.seed, &report);
  with_stage("save", [&] { save(model, o.model); });
  if (!o.dump_rft.empty()) with_stage("dump_rft", [&] { write_rft_dump(o.dump_rft, report); });
  nlohmann::json groups = nlohmann::json::array();
  for (std::size_t g = 0; g < report.group_sizes.size(); ++g)
    groups.push_back(nlohmann::json{{"group", g}, {"subimages", report.group_sizes[g]}, {"fallback", static_cast<bool>(report.group_fallback[g])}});
  return {{"schema", kReportSchema},
          {"command", "train"},
          {"scenario", to_string(o.scenario)},
          {"seed", o.seed},
          {"model", o.model.string()},
          {"model_bytes", std::filesystem::file_size(o.model)},
          {"train_images", report.train_images},
          {"val_images", report.val_images},
          {"train_subimages", report.train_subimages},
          {"spatial_selected", model.spatial_selected.size()},
          {"spatiocolor_selected", model.spatiocolor_selected.size()},
          {"groups", groups}};
}

inline nlohmann::json to_json(const Prediction& p) {
  nlohmann::json j = {{"image", p.image_id}, {"mos_pred", p.mos_pred}, {"per_sub_scores", p.per_sub_scores}};
  if (p.image_group >= 0)
    j["group"] = p.image_group;
  else
    j["group"] = p.groups;
  return j;
}

// One JSON object per image, in input order.
inline std::vector<nlohmann::json> cmd_predict(const RunOptions& o) {
  if (o.model.empty()) throw ConfigError("predict: --model is required");
  const auto model = with_stage("load", [&] { return load(o.model); });
  std::vector<std::filesystem::path> paths = o.images;
  if (!o.manifest.empty())
    for (const auto& r : load_records(o.manifest, o.images_dir, model.scenario)) paths.push_back(r.image_path);
  if (paths.empty()) throw ConfigError("predict: no images given (use --manifest or image paths)");
  std::vector<nlohmann::json> out(paths.size());
  parallel_for(paths.size(), o.threads, [&](std::size_t i) { out[i] = to_json(predict_image(model, paths[i])); });
  return out;
}

inline nlohmann::json eval_summary(const char* command, const RunOptions& o, const std::vector<EvalRun>& runs) {
  std::vector<double> p, s;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : runs) {
    p.push_back(r.plcc);
    s.push_back(r.srocc);
    arr.push_back(to_json(r));
  }
  nlohmann::json j = {{"schema", kReportSchema},
                      {"command", command},
                      {"scenario", to_string(o.scenario)},
                      {"seed", o.seed},
                      {"repeats", runs.size()},
                      {"plcc", detail::sample_median(p)},
                      {"srocc", detail::sample_median(s)},
                      {"runs", arr}};
  std::vector<double> acc;
  for (const auto& r : runs)
    if (r.classifier_accuracy) acc.push_back(*r.classifier_accuracy);
  if (!acc.empty()) j["classifier_accuracy"] = detail::sample_median(acc);
  return j;
}

// R runs with seeds seed..seed+R-1, each on a fresh 80/20 split (by reference
// for synthetic data, by image otherwise).
inline nlohmann::json cmd_eval(const RunOptions& o) {
  o.validate();
  auto config = pipeline_config(o);
  const auto records = load_records(o.manifest, o.images_dir, o.scenario);
  std::vector<EvalRun> runs(static_cast<std::size_t>(o.repeats));
  if (o.parallel_runs > 1) config.threads = 1;
  detail::run_indexed(runs.size(), o.parallel_runs, [&](std::size_t r) {
    const std::uint64_t seed = o.seed + r;
    const auto plan = with_stage("split", [&] {
      return split(records, {o.test_fraction, 0.0}, detail::policy_for(o.scenario), seed);
    });
    TrainReport report;
    runs[r] = train_and_score(subset(records, plan.train), subset(records, plan.test), config, seed, &report);
    if (r == 0 && !o.dump_rft.empty()) with_stage("dump_rft", [&] { write_rft_dump(o.dump_rft, report); });
  });
  return eval_summary("eval", o, runs);
}

// Trains on the whole of one manifest and tests on the whole of another.
inline nlohmann::json cmd_xdomain(const RunOptions& o) {
  o.validate();
  const Scenario test_scenario = o.test_scenario.value_or(o.scenario);
  if (o.scenario != Scenario::authentic || test_scenario != Scenario::authentic)
    throw StageError("config", "cross-domain evaluation needs the authentic scenario for both manifests (got " +
                                   std::string(to_string(o.scenario)) + " vs " + to_string(test_scenario) + ")");
  if (o.test_manifest.empty()) throw ConfigError("xdomain: --test-manifest is required");
  auto config = pipeline_config(o);
  nlohmann::json warnings = nlohmann::json::array();
  std::error_code ec;
  if (std::filesystem::equivalent(o.manifest, o.test_manifest, ec)) {
    const std::string w = "train and test manifests are the same file; the score is not a cross-domain estimate";
    std::cerr << "warning: " << w << '\n';
    warnings.push_back(w);
  }
  const auto train_set = load_records(o.manifest, o.images_dir, o.scenario);
  const auto test_set = load_records(o.test_manifest, o.test_images_dir, test_scenario);
  std::vector<EvalRun> runs(static_cast<std::size_t>(o.repeats));
  if (o.parallel_runs > 1) config.threads = 1;
  detail::run_indexed(runs.size(), o.parallel_runs, [&](std::size_t r) {
    runs[r] = train_and_score(train_set, test_set, config, o.seed + r);
  });
  auto j = eval_summary("xdomain", o, runs);
  j["train_manifest"] = o.manifest.string();
  j["test_manifest"] = o.test_manifest.string();
  j["warnings"] = warnings;
  return j;
}

// Deterministic size-m subset of `indices`, returned in ascending order, so
// the full fraction reproduces the original training list exactly.
inline std::vector<std::size_t> subsample_ordered(const std::vector<std::size_t>& indices, std::size_t m,
                                                  std::uint64_t seed) {
  std::vector<std::size_t> pick = indices;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(pick));
  pick.resize(std::min(m, pick.size()));
  std::sort(pick.begin(), pick.end());
  return pick;
}

inline constexpr std::size_t kMinWeakImages = 10;

inline nlohmann::json cmd_weak(const RunOptions& o) {
  o.validate();
  auto config = pipeline_config(o);
  if (o.parallel_runs > 1) config.threads = 1;
  const auto records = load_records(o.manifest, o.images_dir, o.scenario);
  nlohmann::json rows = nlohmann::json::array(), warnings = nlohmann::json::array();
  for (double f : o.fractions) {
    std::vector<std::optional<EvalRun>> runs(static_cast<std::size_t>(o.repeats));
    std::vector<std::size_t> sizes(runs.size());
    detail::run_indexed(runs.size(), o.parallel_runs, [&](std::size_t r) {
      const std::uint64_t seed = o.seed + r;
      const auto plan = with_stage("split", [&] {
        return split(records, {o.test_fraction, 0.0}, detail::policy_for(o.scenario), seed);
      });
      const auto m = static_cast<std::size_t>(std::floor(f * static_cast<double>(plan.train.size()) + 1e-9));
      sizes[r] = m;
      if (m < kMinWeakImages) return;
      const auto pick = subsample_ordered(plan.train, m, mix_seed(seed, hash_string("weak")));
      runs[r] = train_and_score(subset(records, pick), subset(records, plan.test), config, seed);
    });
    std::vector<double> p, s;
    nlohmann::json per_run = nlohmann::json::array();
    for (const auto& r : runs)
      if (r) {
        p.push_back(r->plcc);
        s.push_back(r->srocc);
        per_run.push_back(to_json(*r));
      }
    if (p.empty()) {
      const std::string w = "fraction " + std::to_string(f) + " yields " + std::to_string(sizes.front()) +
                            " training image(s) (< " + std::to_string(kMinWeakImages) + "); skipped";
      std::cerr << "warning: " << w << '\n';
      warnings.push_back(w);
      continue;
    }
    rows.push_back(nlohmann::json{{"fraction", f},
                    {"n_train", sizes.front()},
                    {"plcc_mean", detail::mean_of(p)},
                    {"plcc_std", detail::stdev_of(p)},
                    {"srocc_mean", detail::mean_of(s)},
                    {"srocc_std", detail::stdev_of(s)},
                    {"plcc_median", detail::sample_median(p)},
                    {"srocc_median", detail::sample_median(s)},
                    {"runs", per_run}});
  }
  return {{"schema", kReportSchema}, {"command", "weak"},   {"scenario", to_string(o.scenario)},
          {"seed", o.seed},          {"repeats", o.repeats}, {"rows", rows},
          {"warnings", warnings}};
}

// Ranks pool images by the spread of their sub-image predictions, highest
// first; ties keep pool order.
inline std::vector<std::size_t> rank_by_uncertainty(const std::vector<Prediction>& preds) {
  std::vector<double> u;
  u.reserve(preds.size());
  for (const auto& p : preds) u.push_back(detail::population_stdev(p.per_sub_scores));
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
  return order;
}

struct ActiveCheckpoint {
  std::size_t labeled = 0;
  double active_plcc = 0.0;
  double random_plcc = 0.0;
  double active_srocc = 0.0;
  double random_srocc = 0.0;
};

// Checkpoints M1..M(steps+1) train on the initial set grown by `step` of the
// pool per round; the last checkpoint always trains on the whole pool. The
// random baseline grows by the same budgets from the same initial set.
inline std::vector<ActiveCheckpoint> active_learning_run(const Dataset& records, const SplitPlan& plan,
                                                         const RunOptions& o, const PipelineConfig& config,
                                                         std::uint64_t seed) {
  const auto& pool = plan.train;
  const auto test = subset(records, plan.test);
  const std::size_t n = pool.size();
  const auto budget = [&](double frac) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9)));
  };
  std::vector<std::size_t> initial = subsample_ordered(pool, budget(o.al_initial), mix_seed(seed, hash_string("al-init")));
  std::vector<std::size_t> active = initial, random = initial;
  Rng random_stream(mix_seed(seed, hash_string("al-random")));

  auto remaining_of = [&](const std::vector<std::size_t>& chosen) {
    std::vector<std::size_t> rest;
    std::set_difference(pool.begin(), pool.end(), chosen.begin(), chosen.end(), std::back_inserter(rest));
    return rest;
  };
  std::vector<ActiveCheckpoint> out;
  for (int step = 0; step <= o.al_steps; ++step) {
    const bool last = step == o.al_steps;
    if (last) active = random = pool;
    ActiveCheckpoint cp;
    cp.labeled = active.size();
    TrainedModel model;
    const auto a = train_and_score(subset(records, active), test, config, seed, nullptr, &model);
    cp.active_plcc = a.plcc;
    cp.active_srocc = a.srocc;
    if (random == active) {
      cp.random_plcc = a.plcc;
      cp.random_srocc = a.srocc;
    } else {
      const auto r = train_and_score(subset(records, random), test, config, seed);
      cp.random_plcc = r.plcc;
      cp.random_srocc = r.srocc;
    }
    out.push_back(cp);
    if (last) break;

    const std::size_t take = budget(o.al_step);
    const auto rest = remaining_of(active);
    if (rest.empty()) break;
    const auto preds = predict_all(model, subset(records, rest), config.threads);
    const auto order = rank_by_uncertainty(preds);
    for (std::size_t i = 0; i < std::min(take, order.size()); ++i) active.push_back(rest[order[i]]);
    std::sort(active.begin(), active.end());

    auto rest_random = remaining_of(random);
    random_stream.shuffle(std::span<std::size_t>(rest_random));
    for (std::size_t i = 0; i < std::min(take, rest_random.size()); ++i) random.push_back(rest_random[i]);
    std::sort(random.begin(), random.end());
  }
  return out;
}

inline nlohmann::json cmd_active(const RunOptions& o) {
  o.validate();
  auto config = pipeline_config(o);
  if (o.parallel_runs > 1) config.threads = 1;
  const auto records = load_records(o.manifest, o.images_dir, o.scenario);
  std::vector<std::vector<ActiveCheckpoint>> curves(static_cast<std::size_t>(o.repeats));
  detail::run_indexed(curves.size(), o.parallel_runs, [&](std::size_t r) {
    const std::uint64_t seed = o.seed + r;
    const auto plan = with_stage("split", [&] {
      return split(records, {o.test_fraction, 0.0}, detail::policy_for(o.scenario), seed);
    });
    curves[r] = active_learning_run(records, plan, o, config, seed);
  });
  nlohmann::json runs = nlohmann::json::array();
  std::size_t steps = curves.front().size();
  for (const auto& c : curves) steps = std::min(steps, c.size());
  for (std::size_t r = 0; r < curves.size(); ++r) {
    nlohmann::json cps = nlohmann::json::array();
    for (const auto& cp : curves[r])
      cps.push_back(nlohmann::json{{"labeled", cp.labeled},
                     {"active_plcc", cp.active_plcc},
                     {"random_plcc", cp.random_plcc},
                     {"active_srocc", cp.active_srocc},
                     {"random_srocc", cp.random_srocc}});
    runs.push_back(nlohmann::json{{"seed", o.seed + r}, {"checkpoints", cps}});
  }
  nlohmann::json summary = nlohmann::json::array();
  for (std::size_t i = 0; i < steps; ++i) {
    std::vector<double> a, b;
    for (const auto& c : curves) {
      a.push_back(c[i].active_plcc);
      b.push_back(c[i].random_plcc);
    }
    summary.push_back(nlohmann::json{{"step", i + 1}, {"labeled", curves.front()[i].labeled},
                       {"active_plcc", detail::sample_median(a)}, {"random_plcc", detail::sample_median(b)}});
  }
  return {{"schema", kReportSchema},
          {"command", "active"},
          {"scenario", to_string(o.scenario)},
          {"seed", o.seed},
          {"repeats", o.repeats},
          {"initial", o.al_initial},
          {"step", o.al_step},
          {"steps", o.al_steps},
          {"checkpoints", summary},
          {"runs", runs}};
}

inline nlohmann::json cmd_gen_mini(const RunOptions& o) {
  if (o.out_dir.empty()) throw ConfigError("gen-mini: --out is required");
  std::vector<RgbImage> seeds;
  if (!o.seed_images_dir.empty()) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(o.seed_images_dir))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) seeds.push_back(with_stage("decode", [&] { return load_rgb(f); }));
  } else {
    seeds = make_pristine_seeds(o.seed_count, 256, o.seed);
  }
  const auto manifest = with_stage("generate", [&] { return synth_minidataset(seeds, o.out_dir, o.seed); });
  return {{"schema", kReportSchema},
          {"command", "gen-mini"},
          {"manifest", manifest.string()},
          {"images", seeds.size() * 16},
          {"seed", o.seed}};
}

}  // namespace greenbiqa
