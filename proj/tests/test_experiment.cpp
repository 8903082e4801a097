#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include <hetsca/errors.hpp>
#include <hetsca/experiment.hpp>

using namespace hetsca;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hetsca_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentPlan small_plan(const fs::path& out) {
  ExperimentPlan plan;
  plan.base = NetworkConfig::uniform(2, 2, 2, 2, 1);
  plan.base.scenario = Scenario::CompFull;
  plan.out_dir = out;
  return plan;
}

constexpr const char* kConfig =
    R"({"num_cells": 2, "bs_per_cell": 2, "users_per_cell": 2, "tx_antennas": 2, "rx_antennas": 1,
        "scenario": "COMP-SPARSE", "rng_seed": 5, "solver": {"tol": 1e-4}})";

}  // namespace

TEST(ParseSweep, FieldAndValues) {
  const auto axis = parse_sweep("num_cells=1,2,3");
  EXPECT_EQ(axis.field, "num_cells");
  EXPECT_EQ(axis.values, (std::vector<std::string>{"1", "2", "3"}));
  EXPECT_THROW((void)parse_sweep("no_equals"), Error);
}

TEST(ParseSeeds, CountAndList) {
  EXPECT_EQ(parse_seeds("3", 10), (std::vector<std::uint64_t>{10, 11, 12}));
  EXPECT_EQ(parse_seeds("1,7,9", 0), (std::vector<std::uint64_t>{1, 7, 9}));
  EXPECT_THROW((void)parse_seeds("0", 0), Error);
  EXPECT_THROW((void)parse_seeds("x", 0), Error);
}

TEST(ExpandGrid, CartesianProductAndLabels) {
  auto plan = small_plan("unused");
  plan.sweeps = {parse_sweep("num_cells=1,2"), parse_sweep("gamma=0.1,0.2,0.3")};
  const auto points = expand_grid(plan);
  ASSERT_EQ(points.size(), 6u);
  EXPECT_EQ(points[0].config.num_cells, 1);
  EXPECT_EQ(points[5].config.num_cells, 2);
  EXPECT_DOUBLE_EQ(*points[4].solver.gamma, 0.2);
  EXPECT_EQ(points[3].label, "num_cells=2;gamma=0.1");
}

TEST(ExpandGrid, UnknownFieldIsValidationError) {
  auto plan = small_plan("unused");
  plan.sweeps = {parse_sweep("wavelength=1")};
  try {
    (void)expand_grid(plan);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ValidationError);
  }
}

TEST(PlanConfig, SolverObjectIsSeparated) {
  const auto pc = parse_plan_config(kConfig);
  EXPECT_EQ(pc.network.scenario, Scenario::CompSparse);
  EXPECT_DOUBLE_EQ(*pc.solver.tol, 1e-4);
  EXPECT_FALSE(pc.solver.beta);
  EXPECT_THROW((void)parse_solver_overrides(R"({"speed": 1})"), Error);
}

TEST(Statistics, StandardErrorRecomputed) {
  std::vector<double> xs(100);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = std::sin(double(i)) * 3.0 + 0.01 * double(i);
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / 100.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const auto a = mean_and_std_error(xs);
  EXPECT_NEAR(a.mean, mean, 1e-12);
  EXPECT_NEAR(a.std_error, std::sqrt(ss / 99.0) / 10.0, 1e-12);
  EXPECT_EQ(mean_and_std_error({4.0}).std_error, 0.0);
}

TEST(Reports, EmptyRecordsGiveHeaderOnly) {
  const auto dir = scratch("empty");
  fs::create_directories(dir);
  write_summary(dir / "summary.csv", {}, false);
  write_trace(dir / "trace.csv", {}, false);
  EXPECT_EQ(slurp(dir / "summary.csv"), std::string(kSummaryHeader) + "\n");
  EXPECT_EQ(slurp(dir / "trace.csv"), std::string(kTraceHeader) + "\n");
  fs::remove_all(dir);
}

TEST(Reports, UnwritablePathIsIoError) {
  try {
    write_summary("/nonexistent/dir/summary.csv", {}, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IoError);
  }
}

TEST(RunExperiment, OnePointOneSeed) {
  const auto dir = scratch("single");
  std::ostringstream log;
  ASSERT_EQ(run_experiment(small_plan(dir), log), kExitOk) << log.str();
  const auto summary = lines(slurp(dir / "summary.csv"));
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(summary[0], kSummaryHeader);
  EXPECT_EQ(std::distance(fs::directory_iterator(dir / "traces"), fs::directory_iterator{}), 1);
  fs::remove_all(dir);
}

TEST(RunExperiment, TraceEndsAtReportedObjective) {
  auto plan = small_plan("unused");
  const auto points = expand_grid(plan);
  const auto rec = execute_run(points[0], 3, Algorithm::InSca, 1);
  ASSERT_TRUE(rec.report);
  EXPECT_EQ(rec.report->trace.back().objective, rec.report->objective);
  EXPECT_EQ(rec.trace_file, "traces/p000_s3_insca.csv");
}

TEST(RunExperiment, ByteIdenticalReruns) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto plan = small_plan(a);
  plan.seeds = {1, 2};
  plan.algorithms = {Algorithm::Sca, Algorithm::InSca};
  plan.jobs = 2;
  std::ostringstream log;
  ASSERT_EQ(run_experiment(plan, log), kExitOk);
  plan.out_dir = b;
  ASSERT_EQ(run_experiment(plan, log), kExitOk);
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
  EXPECT_EQ(slurp(a / "aggregate.csv"), slurp(b / "aggregate.csv"));
  for (const auto& entry : fs::directory_iterator(a / "traces")) {
    EXPECT_EQ(slurp(entry.path()), slurp(b / "traces" / entry.path().filename()));
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(RunExperiment, InvalidPlanExitsWithValidationCode) {
  auto plan = small_plan(scratch("invalid"));
  plan.seeds.clear();
  std::ostringstream log;
  EXPECT_EQ(run_experiment(plan, log), kExitValidation);
  EXPECT_NE(log.str().find("seed"), std::string::npos);
}

TEST(RunExperiment, SolverFailureKeepsOtherRuns) {
  const auto dir = scratch("partial");
  auto plan = small_plan(dir);
  plan.algorithms = {Algorithm::InSca};
  plan.sweeps = {parse_sweep("beta=0.001,0")};
  std::ostringstream log;
  EXPECT_EQ(run_experiment(plan, log), kExitSolverFailure);
  EXPECT_EQ(lines(slurp(dir / "summary.csv")).size(), 2u);
  EXPECT_NE(log.str().find("run failed"), std::string::npos);
  fs::remove_all(dir);
}

TEST(RunExperiment, ClusterSizeShrinksWithGamma) {
  const auto dir = scratch("gamma");
  ExperimentPlan plan;
  plan.base = NetworkConfig::uniform(2, 3, 4, 2, 2, 1);
  plan.base.scenario = Scenario::CompSparse;
  plan.algorithms = {Algorithm::InSca};
  plan.sweeps = {parse_sweep("gamma=0.01,0.05,0.1,0.5")};
  plan.seeds = {0, 1};
  plan.out_dir = dir;
  std::ostringstream log;
  ASSERT_EQ(run_experiment(plan, log), kExitOk) << log.str();
  const auto rows = lines(slurp(dir / "aggregate.csv"));
  ASSERT_EQ(rows.size(), 5u);
  const auto header = fields(rows[0]);
  const auto col = std::size_t(std::find(header.begin(), header.end(), "mean_cluster_size") - header.begin());
  double previous = 1e300;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double c = std::stod(fields(rows[i]).at(col));
    EXPECT_LE(c, previous);
    previous = c;
  }
  fs::remove_all(dir);
}

#ifdef HETSCA_CLI_PATH
namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(HETSCA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "good.json") << kConfig;
    std::ofstream(dir / "bad.json") << R"({"num_cells": 1})";
  }
  EXPECT_EQ(cli("--config " + (dir / "good.json").string() + " --out " + (dir / "out").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.csv"));
  EXPECT_EQ(cli("--config " + (dir / "bad.json").string() + " --out " + (dir / "out2").string()), 1);
  EXPECT_EQ(cli("--config " + (dir / "good.json").string() + " --sweep nope=1 --out " + (dir / "o3").string()), 1);
  EXPECT_EQ(cli("--config " + (dir / "good.json").string() + " --algo insca --sweep beta=0 --out " +
                (dir / "o4").string()),
            2);
  fs::remove_all(dir);
}

TEST(Cli, RepeatedInvocationsAreByteIdentical) {
  const auto dir = scratch("cli_det");
  fs::create_directories(dir);
  { std::ofstream(dir / "c.json") << kConfig; }
  const std::string common = "--config " + (dir / "c.json").string() + " --algo sca --algo insca --seeds 2 --out ";
  ASSERT_EQ(cli(common + (dir / "a").string()), 0);
  ASSERT_EQ(cli(common + (dir / "b").string()), 0);
  for (const auto& entry : fs::directory_iterator(dir / "a" / "traces")) {
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / "traces" / entry.path().filename()));
  }
  EXPECT_EQ(slurp(dir / "a" / "summary.csv"), slurp(dir / "b" / "summary.csv"));
  fs::remove_all(dir);
}
#endif
