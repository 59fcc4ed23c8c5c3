#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_support.hpp"

#ifndef GREENBIQA_CLI_PATH
#error "GREENBIQA_CLI_PATH must point at the built command-line tool"
#endif

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result run(const std::string& args) {
  static int counter = 0;
  const auto dir = fs::path(::testing::TempDir());
  const auto out = dir / ("greenbiqa_cli_out_" + std::to_string(counter) + ".txt");
  const auto err = dir / ("greenbiqa_cli_err_" + std::to_string(counter++) + ".txt");
  const std::string cmd = std::string("\"") + GREENBIQA_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  Result r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

const fs::path& mini() {
  static const fs::path manifest = [] {
    const auto dir = testsupport::scratch("cli_mini");
    const auto r = run("gen-mini --out \"" + dir.string() + "\" --seed 3");
    EXPECT_EQ(r.status, 0) << r.err;
    return dir / "manifest.csv";
  }();
  return manifest;
}

const std::string kFast = " --crop-train 4 --crop-test 5 ";

}  // namespace

TEST(Cli, GenMiniReportsManifest) {
  ASSERT_TRUE(fs::exists(mini()));
  const auto d = greenbiqa::load_manifest(mini(), mini().parent_path(), greenbiqa::Scenario::synthetic);
  EXPECT_EQ(d.size(), 128u);
}

TEST(Cli, EvalReportsMediansAndRuns) {
  const auto r = run("eval --manifest \"" + mini().string() + "\" --repeats 3" + kFast);
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["command"], "eval");
  EXPECT_EQ(j["runs"].size(), 3u);
  EXPECT_TRUE(j["plcc"].is_number());
  EXPECT_TRUE(j["srocc"].is_number());
  EXPECT_TRUE(j.contains("classifier_accuracy"));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(j["runs"][i]["seed"], i);
}

TEST(Cli, TrainThenPredict) {
  const auto dir = testsupport::scratch("cli_predict");
  const auto model = dir / "m.gbqa";
  const auto t = run("train --manifest \"" + mini().string() + "\" --model \"" + model.string() + "\"" + kFast);
  ASSERT_EQ(t.status, 0) << t.err;
  EXPECT_EQ(nlohmann::json::parse(t.out)["model_bytes"], fs::file_size(model));
  const auto img = mini().parent_path() / "ref00_t1_l1.png";
  const auto p = run("predict --model \"" + model.string() + "\" \"" + img.string() + "\"");
  ASSERT_EQ(p.status, 0) << p.err;
  const auto j = nlohmann::json::parse(p.out);
  EXPECT_EQ(j["per_sub_scores"].size(), 5u);
  EXPECT_GE(j["mos_pred"].get<double>(), 1.0);
  EXPECT_LE(j["mos_pred"].get<double>(), 4.0);
}

TEST(Cli, MissingManifestExitsOneAndNamesThePath) {
  const auto r = run("eval --manifest /nonexistent/dir/m.csv --repeats 1");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("/nonexistent/dir/m.csv"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("[manifest]"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrorIsNonZero) {
  EXPECT_NE(run("").status, 0);
  EXPECT_NE(run("eval --scenario bogus").status, 0);
}

TEST(Cli, XdomainRejectsSyntheticScenario) {
  const auto r = run("xdomain --manifest \"" + mini().string() + "\" --test-manifest \"" + mini().string() +
                     "\" --repeats 1");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("[config]"), std::string::npos) << r.err;
}

TEST(Cli, WeakSkipsTinyFractionsWithWarning) {
  const auto r = run("weak --manifest \"" + mini().string() + "\" --repeats 1 --fractions 0.05" + kFast);
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["rows"].empty());
  EXPECT_EQ(j["warnings"].size(), 1u);
  EXPECT_NE(r.err.find("warning:"), std::string::npos);
}

TEST(Cli, ActiveReportsCheckpointsPerStep) {
  const auto r = run("active --manifest \"" + mini().string() +
                     "\" --repeats 1 --al-initial 0.5 --al-step 0.25 --al-steps 1" + kFast);
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j["checkpoints"].size(), 2u);
  EXPECT_EQ(j["checkpoints"][0]["step"], 1);
  const auto& cps = j["runs"][0]["checkpoints"];
  ASSERT_EQ(cps.size(), 2u);
  EXPECT_LT(cps[0]["labeled"].get<int>(), cps[1]["labeled"].get<int>());
  EXPECT_EQ(cps[1]["active_plcc"], cps[1]["random_plcc"]);
}

TEST(Cli, ReportIndependentOfThreadCounts) {
  const std::string base = "eval --manifest \"" + mini().string() + "\" --repeats 2" + kFast;
  const auto serial = run(base);
  const auto threaded = run(base + " --threads 3 --parallel-runs 2");
  ASSERT_EQ(serial.status, 0) << serial.err;
  ASSERT_EQ(threaded.status, 0) << threaded.err;
  EXPECT_EQ(serial.out, threaded.out);
}
