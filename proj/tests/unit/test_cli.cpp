#include <gtest/gtest.h>

#include "../support/fixtures.hpp"
#include "gridcast/cli.hpp"
#include "gridcast/dataset.hpp"
#include "gridcast/report.hpp"

#include <sstream>

using namespace gridcast;
using fixtures::read_file;
using fixtures::TempDir;
using fixtures::write_file;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kSmallConfig = R"({
  "model_configs": {
    "gbrt": {"trees": 10},
    "lightgbm": {"trees": 10},
    "catboost": {"trees": 5, "depth": 3},
    "lstm": {"hidden": 3, "epochs": 1},
    "awmlstm": {"hidden": 3, "epochs": 1}
  }
})";

}  // namespace

TEST(Cli, HelpExitsZero) {
  const auto r = cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("run"), std::string::npos);
  EXPECT_EQ(cli({"run", "--help"}).code, 0);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"frobnicate"}).code, 1);
  const auto r = cli({"run"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--synthetic"), std::string::npos);
  EXPECT_EQ(cli({"run", "--synthetic", "300", "--models", "gbrt,xgb"}).code, 1);
  EXPECT_EQ(cli({"run", "--synthetic", "300", "--format", "xml"}).code, 1);
}

TEST(Cli, MissingInputIsDataError) {
  TempDir dir;
  const auto r = cli({"run", "--input", (dir / "missing.csv").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("missing.csv"), std::string::npos);
}

TEST(Cli, SynthRejectsTooFewRows) {
  TempDir dir;
  EXPECT_EQ(cli({"synth", "--rows", "100", "--out", (dir / "s.csv").string()}).code, 1);
}

TEST(Cli, SynthIsDeterministicAndLoadable) {
  TempDir dir;
  ASSERT_EQ(cli({"synth", "--rows", "300", "--seed", "8", "--out", (dir / "a.csv").string()}).code, 0);
  ASSERT_EQ(cli({"synth", "--rows", "300", "--seed", "8", "--out", (dir / "b.csv").string()}).code, 0);
  EXPECT_EQ(read_file(dir / "a.csv"), read_file(dir / "b.csv"));
  EXPECT_EQ(load_csv(dir / "a.csv").size(), 300u);
}

TEST(Cli, SeedFlagOverridesEnvironment) {
  TempDir dir;
  setenv("GRIDCAST_SEED", "8", 1);
  ASSERT_EQ(cli({"synth", "--rows", "300", "--out", (dir / "env.csv").string()}).code, 0);
  ASSERT_EQ(cli({"synth", "--rows", "300", "--seed", "9", "--out", (dir / "flag.csv").string()}).code, 0);
  setenv("GRIDCAST_SEED", "not-a-number", 1);
  EXPECT_EQ(cli({"synth", "--rows", "300", "--out", (dir / "bad.csv").string()}).code, 1);
  unsetenv("GRIDCAST_SEED");
  ASSERT_EQ(cli({"synth", "--rows", "300", "--seed", "8", "--out", (dir / "ref.csv").string()}).code, 0);
  EXPECT_EQ(read_file(dir / "env.csv"), read_file(dir / "ref.csv"));
  EXPECT_NE(read_file(dir / "flag.csv"), read_file(dir / "ref.csv"));
}

TEST(Cli, RunThenReport) {
  TempDir dir;
  write_file(dir / "cfg.json", kSmallConfig);
  const std::string out = (dir / "run").string();
  const auto r = cli({"run", "--synthetic", "400", "--seed", "4", "--config", (dir / "cfg.json").string(), "--out",
                      out, "--format", "csv", "--threads", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string summary = read_file(dir / "run" / kSummaryFile);
  EXPECT_EQ(r.out, summary);
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "accuracy_price.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "errors_svr_demand.csv"));

  const auto again = cli({"report", "--run", out, "--format", "csv"});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(again.out, summary);
  const auto json = cli({"report", "--run", out, "--format", "json"});
  EXPECT_EQ(json.out, read_file(dir / "run" / kReportFile));

  const auto svg = cli({"report", "--run", out, "--svg"});
  ASSERT_EQ(svg.code, 0) << svg.err;
  std::size_t charts = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "run")) charts += e.path().extension() == ".svg";
  EXPECT_EQ(charts, 24u);
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "prediction_gbrt_price.svg"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "error_awmlstm_demand.svg"));

  EXPECT_EQ(cli({"report", "--run", (dir / "nothing").string()}).code, 2);
}

TEST(Cli, TrainAndEvaluateMatchRun) {
  TempDir dir;
  write_file(dir / "cfg.json", kSmallConfig);
  const std::string cfg = (dir / "cfg.json").string();
  const std::string model = (dir / "gbrt.model").string();
  ASSERT_EQ(cli({"train", "--synthetic", "400", "--seed", "4", "--config", cfg, "--model", "gbrt", "--target",
                 "demand", "--out", model})
                .code,
            0);
  const auto e = cli({"evaluate", "--synthetic", "400", "--seed", "4", "--config", cfg, "--model-file", model,
                      "--target", "demand", "--format", "json"});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto j = nlohmann::json::parse(e.out);

  const auto r = cli({"run", "--synthetic", "400", "--seed", "4", "--config", cfg, "--models", "gbrt", "--out",
                      (dir / "run").string(), "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(r.out);
  const auto& cells = report.at("cells");
  bool found = false;
  for (const auto& c : cells) {
    if (c.at("target") != "demand") continue;
    found = true;
    EXPECT_EQ(c.at("metrics").at("mse"), j.at("mse"));
    EXPECT_EQ(c.at("metrics").at("r2"), j.at("r2"));
  }
  EXPECT_TRUE(found);
}

TEST(Cli, FeaturizeWritesTable) {
  TempDir dir;
  const auto r = cli({"featurize", "--synthetic", "300", "--out", (dir / "f.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string text = read_file(dir / "f.csv");
  EXPECT_EQ(text.rfind("row_timestamp,", 0), 0u);
}
