#include "cli.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mpecbt::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string config_path(const std::string& name) { return std::string(MPECBT_CONFIG_DIR) + "/" + name; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("mpecbt_cli_") + info->name());
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string out_dir(const std::string& sub) const { return (dir_ / sub).string(); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  json report(const std::string& sub) const { return json::parse(slurp(dir_ / sub / "report.json")); }

  fs::path dir_;
};

TEST_F(CliTest, LcpToySolvesToUpperBound) {
  SolveArgs args;
  args.config = config_path("lcp_toy.json");
  args.out = out_dir("lcp");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_solve(args, out, err), kExitOk) << err.str();
  const json r = report("lcp");
  EXPECT_EQ(r["schema_version"], 1);
  EXPECT_EQ(r["problem"], "lcp_toy");
  EXPECT_EQ(r["solver"], "bt");
  EXPECT_EQ(r["status"], "converged");
  EXPECT_NEAR(r["x"][0].get<double>(), 1.0, 1e-6);
  EXPECT_FALSE(r.contains("wall_time"));
  EXPECT_TRUE(fs::exists(dir_ / "lcp" / "trace.csv"));
}

TEST_F(CliTest, ProjectionRunWritesReport) {
  SolveArgs args;
  args.config = config_path("projection_run1.json");
  args.out = out_dir("proj");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_solve(args, out, err), kExitOk) << err.str();
  const json r = report("proj");
  EXPECT_EQ(r["kind"], "projection_bilevel");
  EXPECT_GE(r["x"][2].get<double>(), 49.99);
  EXPECT_LE(r["max_lower_residual"].get<double>(), 1e-8);
}

TEST_F(CliTest, MissingConfigExitsWithError) {
  SolveArgs args;
  args.config = config_path("no_such_file.json");
  args.out = out_dir("missing");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_solve(args, out, err), kExitError);
  EXPECT_NE(err.str().find("error:"), std::string::npos);
  CheckArgs check;
  check.config = args.config;
  check.point = {0.0};
  EXPECT_EQ(cmd_check(check, out, err), kExitError);
}

TEST_F(CliTest, IterationLimitExitsWithTwo) {
  SolveArgs args;
  args.config = config_path("projection_run1.json");
  args.maxit = 1;
  args.out = out_dir("maxit");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_solve(args, out, err), kExitMaxIter);
  EXPECT_EQ(report("maxit")["status"], "max_iterations");
}

TEST_F(CliTest, UnknownSolverAndWrongDimensionsAreErrors) {
  std::ostringstream out, err;
  SolveArgs args;
  args.config = config_path("lcp_toy.json");
  args.out = out_dir("bad");
  args.solver = "simplex";
  EXPECT_EQ(cmd_solve(args, out, err), kExitError);
  args.solver = "ssnewton";
  EXPECT_EQ(cmd_solve(args, out, err), kExitError);
  args.solver = "bt";
  args.x0 = std::vector<double>{0.1, 0.2};
  EXPECT_EQ(cmd_solve(args, out, err), kExitError);
}

TEST_F(CliTest, IdenticalRunsAreByteIdentical) {
  for (const char* cfg : {"lcp_toy.json", "projection_run1.json", "oligopoly_synthetic.json"}) {
    SolveArgs args;
    args.config = config_path(cfg);
    args.seed = 42;
    std::ostringstream out, err;
    args.out = out_dir("a");
    ASSERT_EQ(cmd_solve(args, out, err), kExitOk) << err.str();
    args.out = out_dir("b");
    ASSERT_EQ(cmd_solve(args, out, err), kExitOk) << err.str();
    EXPECT_EQ(slurp(dir_ / "a" / "report.json"), slurp(dir_ / "b" / "report.json")) << cfg;
    EXPECT_EQ(slurp(dir_ / "a" / "trace.csv"), slurp(dir_ / "b" / "trace.csv")) << cfg;
  }
}

TEST_F(CliTest, ReportKeysAreSorted) {
  SolveArgs args;
  args.config = config_path("bilevel_toy.json");
  args.out = out_dir("sorted");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_solve(args, out, err), kExitOk);
  std::vector<std::string> keys;
  const json r = report("sorted");
  for (const auto& item : r.items()) keys.push_back(item.key());
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  const std::string text = slurp(dir_ / "sorted" / "report.json");
  EXPECT_LT(text.find("\"iterations\""), text.find("\"value\""));
}

TEST_F(CliTest, TimingIsOptIn) {
  SolveArgs args;
  args.config = config_path("lcp_toy.json");
  args.out = out_dir("timing");
  args.timing = true;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_solve(args, out, err), kExitOk);
  EXPECT_GE(report("timing")["wall_time"].get<double>(), 0.0);
}

TEST_F(CliTest, TraceCsvFormat) {
  SolveArgs args;
  args.config = config_path("lcp_toy.json");
  args.out = out_dir("trace");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_solve(args, out, err), kExitOk);
  const std::string csv = slurp(dir_ / "trace" / "trace.csv");
  EXPECT_EQ(csv.rfind("iter,step_type,value,pred_decrease,radius,stat_residual\n", 0), 0u);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_EQ(csv.back(), '\n');
}

TEST_F(CliTest, EveryShippedConfigSolves) {
  for (const auto& entry : fs::directory_iterator(MPECBT_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    SolveArgs args;
    args.config = entry.path().string();
    args.out = out_dir(entry.path().stem().string());
    std::ostringstream out, err;
    EXPECT_EQ(cmd_solve(args, out, err), kExitOk) << entry.path() << ": " << err.str();
  }
}

TEST_F(CliTest, SsNewtonOnDecomposableConfigs) {
  for (const char* cfg : {"soft_threshold.json", "quadratic_box.json"}) {
    SolveArgs args;
    args.config = config_path(cfg);
    args.solver = "ssnewton";
    args.out = out_dir(cfg);
    std::ostringstream out, err;
    ASSERT_EQ(cmd_solve(args, out, err), kExitOk) << err.str();
    EXPECT_LE(report(cfg)["stationarity_residual"].get<double>(), 1e-10);
  }
}

json run_check(const std::string& cfg, std::vector<double> point, int fd = 0) {
  CheckArgs args;
  args.config = config_path(cfg);
  args.point = std::move(point);
  args.fd_audit = fd;
  args.seed = 3;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_check(args, out, err), kExitOk) << err.str();
  return json::parse(out.str());
}

TEST(CliCheck, LcpOptimumHasZeroResidual) {
  EXPECT_EQ(run_check("lcp_toy.json", {1.0})["stationarity_residual"].get<double>(), 0.0);
}

TEST(CliCheck, LcpInteriorPointResidual) {
  const json r = run_check("lcp_toy.json", {0.5});
  EXPECT_NEAR(r["stationarity_residual"].get<double>(), 0.5, 1e-12);
  EXPECT_NEAR(r["xi"][0].get<double>(), -0.5, 1e-12);
}

TEST(CliCheck, BilevelKinkResidualFollowsReturnedBranch) {
  // Residual vanishes exactly when the oracle picks a branch with xi >= 0.
  const json r = run_check("bilevel_toy.json", {0.0});
  const double xi = r["xi"][0].get<double>();
  const double res = r["stationarity_residual"].get<double>();
  if (xi >= 0.0) {
    EXPECT_EQ(res, 0.0);
  } else {
    EXPECT_NEAR(res, -xi, 1e-15);
  }
}

TEST(CliCheck, FiniteDifferenceAuditIsReported) {
  const json r = run_check("lcp_toy.json", {0.5}, 40);
  EXPECT_EQ(r["fd_audit"]["samples"], 40);
  EXPECT_EQ(r["fd_audit"]["failures"], 0);
  EXPECT_EQ(r["fd_audit"]["seed"], 3);
}

TEST(CliCheck, WrongPointDimensionIsAnError) {
  CheckArgs args;
  args.config = config_path("projection_run1.json");
  args.point = {1.0};
  std::ostringstream out, err;
  EXPECT_EQ(cmd_check(args, out, err), kExitError);
}

TEST(ParseList, ParsesCommaSeparatedNumbers) {
  EXPECT_EQ(parse_list("1,2.5,-3"), (std::vector<double>{1.0, 2.5, -3.0}));
  EXPECT_EQ(parse_list("4"), (std::vector<double>{4.0}));
  EXPECT_THROW(parse_list(""), std::invalid_argument);
  EXPECT_THROW(parse_list("1,x"), std::invalid_argument);
  EXPECT_THROW(parse_list("1,2abc"), std::invalid_argument);
}

}  // namespace
}  // namespace mpecbt::cli
