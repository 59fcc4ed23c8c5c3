#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "greenbiqa/commands.hpp"

namespace {

using greenbiqa::RunOptions;

void emit(const nlohmann::json& j, const std::filesystem::path& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw greenbiqa::IoError("cannot write " + out.string());
  f << j.dump(2) << '\n';
}

void emit_lines(const std::vector<nlohmann::json>& lines, const std::filesystem::path& out) {
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw greenbiqa::IoError("cannot write " + out.string());
  }
  std::ostream& os = out.empty() ? std::cout : file;
  for (const auto& j : lines) os << j.dump() << '\n';
}

void add_common(CLI::App* cmd, RunOptions& o, std::string& scenario) {
  cmd->add_option("--manifest", o.manifest, "CSV manifest: image,mos[,reference,dist_type,dist_level]");
  cmd->add_option("--images-dir", o.images_dir, "Directory image paths are relative to (default: manifest dir)");
  cmd->add_option("--scenario", scenario, "synthetic | authentic")->check(CLI::IsMember({"synthetic", "authentic"}));
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("--threads", o.threads, "Worker threads inside one run (0 = all cores)");
}

void add_pipeline(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--crop-train", o.crop_train, "Sub-images cropped per training image");
  cmd->add_option("--crop-test", o.crop_test, "Sub-images cropped per test image");
  cmd->add_option("--crop-side", o.crop_side, "Sub-image side in pixels");
  cmd->add_option("--merge-map", o.merge_map, "Distortion merge map (lines of raw_type=group)");
  cmd->add_option("--dump-rft", o.dump_rft, "Write the RFT cost curve CSV here");
}

void add_repeats(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--repeats", o.repeats, "Number of runs (seeds seed..seed+R-1)");
  cmd->add_option("--parallel-runs", o.parallel_runs, "Runs executed concurrently");
  cmd->add_option("--test-fraction", o.test_fraction, "Held-out fraction per run");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GreenBIQA: blind image quality assessment"};
  app.require_subcommand(1);
  RunOptions o;
  std::string scenario = "synthetic", test_scenario;
  std::filesystem::path out;

  auto* train = app.add_subcommand("train", "Train a model on a manifest and save it");
  add_common(train, o, scenario);
  add_pipeline(train, o);
  train->add_option("--model", o.model, "Output model file")->required();
  train->add_option("--out", out, "Write the JSON report here instead of stdout");

  auto* predict = app.add_subcommand("predict", "Predict MOS for images; one JSON line per image");
  predict->add_option("--model", o.model, "Model file")->required();
  predict->add_option("--manifest", o.manifest, "Manifest listing the images");
  predict->add_option("--images-dir", o.images_dir, "Directory image paths are relative to");
  predict->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  predict->add_option("--out", out, "Write JSON lines here instead of stdout");
  predict->add_option("images", o.images, "Image files");

  auto* eval = app.add_subcommand("eval", "Repeated train/test evaluation");
  add_common(eval, o, scenario);
  add_pipeline(eval, o);
  add_repeats(eval, o);
  eval->add_option("--out", out, "Write the JSON report here instead of stdout");

  auto* xdomain = app.add_subcommand("xdomain", "Train on one manifest, test on another");
  add_common(xdomain, o, scenario);
  add_pipeline(xdomain, o);
  add_repeats(xdomain, o);
  xdomain->add_option("--test-manifest", o.test_manifest, "Manifest of the test domain")->required();
  xdomain->add_option("--test-images-dir", o.test_images_dir, "Image directory of the test manifest");
  xdomain->add_option("--test-scenario", test_scenario, "Scenario of the test manifest (default: --scenario)")
      ->check(CLI::IsMember({"synthetic", "authentic"}));
  xdomain->add_option("--out", out, "Write the JSON report here instead of stdout");

  auto* weak = app.add_subcommand("weak", "Weak-supervision sweep over training fractions");
  add_common(weak, o, scenario);
  add_pipeline(weak, o);
  add_repeats(weak, o);
  weak->add_option("--fractions", o.fractions, "Training fractions in (0, 1]")->delimiter(',');
  weak->add_option("--out", out, "Write the JSON report here instead of stdout");

  auto* active = app.add_subcommand("active", "Uncertainty-driven active learning versus random selection");
  add_common(active, o, scenario);
  add_pipeline(active, o);
  add_repeats(active, o);
  active->add_option("--al-initial", o.al_initial, "Initial labeled fraction of the pool");
  active->add_option("--al-step", o.al_step, "Fraction of the pool added per step");
  active->add_option("--al-steps", o.al_steps, "Number of selection steps");
  active->add_option("--out", out, "Write the JSON report here instead of stdout");

  auto* gen = app.add_subcommand("gen-mini", "Generate the synthetic mini-dataset");
  gen->add_option("--out", o.out_dir, "Output directory")->required();
  gen->add_option("--seed", o.seed, "Generation seed");
  gen->add_option("--count", o.seed_count, "Number of procedural pristine images");
  gen->add_option("--seed-images", o.seed_images_dir, "Use the images in this directory as pristine seeds");

  for (auto* cmd : {eval, xdomain, weak, active}) cmd->get_option("--repeats")->default_val(10);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    o.scenario = greenbiqa::parse_scenario(scenario);
    if (!test_scenario.empty()) o.test_scenario = greenbiqa::parse_scenario(test_scenario);
    if (*train) emit(greenbiqa::cmd_train(o), out);
    if (*predict) emit_lines(greenbiqa::cmd_predict(o), out);
    if (*eval) emit(greenbiqa::cmd_eval(o), out);
    if (*xdomain) emit(greenbiqa::cmd_xdomain(o), out);
    if (*weak) emit(greenbiqa::cmd_weak(o), out);
    if (*active) emit(greenbiqa::cmd_active(o), out);
    if (*gen) emit(greenbiqa::cmd_gen_mini(o), {});
  } catch (const greenbiqa::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: [cli] " << e.what() << '\n';
    return 1;
  }
  return 0;
}
