#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hetsca/driver.hpp"
#include "hetsca/network.hpp"

namespace hetsca {

/// Solver settings that a config file's "solver" object or a sweep may
/// override. Unset fields fall back to RunSettings defaults.
struct SolverOverrides {
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<double> tol;
  std::optional<double> inner_tol;
  std::optional<int> max_iters;
  std::optional<InitPolicy> init;
};

/// Parses {"beta": .., "gamma": .., "tol": .., "inner_tol": ..,
/// "max_iters": .., "init": ".."}. Throws ParseError / ValidationError.
SolverOverrides parse_solver_overrides(std::string_view json_text);

/// Network config plus the optional "solver" object of the same file.
struct PlanConfig {
  NetworkConfig network;
  SolverOverrides solver;
};
PlanConfig load_plan_config(const std::filesystem::path& path);
PlanConfig parse_plan_config(std::string_view json_text);

/// One swept field with its values. Values are JSON literals; bare words
/// are taken as strings.
struct SweepAxis {
  std::string field;
  std::vector<std::string> values;
};

/// Parses "field=v1,v2,...".
SweepAxis parse_sweep(std::string_view spec);

struct ExperimentPlan {
  NetworkConfig base;
  SolverOverrides solver;
  std::vector<SweepAxis> sweeps;
  std::vector<Algorithm> algorithms{Algorithm::Sca};
  std::vector<std::uint64_t> seeds{0};
  int restarts = 1;
  int jobs = 1;
  /// Record measured wall time. Off by default so outputs are byte-stable.
  bool timing = false;
  std::filesystem::path out_dir = "out";
};

/// "5" means five seeds starting at `base_seed`; "1,7,9" is an explicit list.
std::vector<std::uint64_t> parse_seeds(std::string_view spec, std::uint64_t base_seed);

/// A fully resolved grid point.
struct GridPoint {
  std::size_t index = 0;
  NetworkConfig config;
  SolverOverrides solver;
  std::string label;  // "field=value;..." or "base"
};

/// Cartesian product of the sweep axes in the given order. Throws
/// ValidationError on unknown fields or invalid values.
std::vector<GridPoint> expand_grid(const ExperimentPlan& plan);

RunSettings settings_for(const SolverOverrides& solver, Algorithm algorithm);

struct RunRecord {
  std::size_t point = 0;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::Sca;
  NetworkConfig config;
  std::string trace_file;
  std::optional<SolveReport> report;
  std::string error;
};

/// Best-of-restarts run of one (point, seed, algorithm).
RunRecord execute_run(const GridPoint& point, std::uint64_t seed, Algorithm algorithm, int restarts);

inline constexpr std::string_view kTraceHeader = "iter,objective_nats,surrogate_nats,step_frob,wall_ms,kkt_residual";
inline constexpr std::string_view kSummaryHeader =
    "scenario,algorithm,K,Q,I,M,N,d,seed,beta,gamma,final_sumrate_bits,iters,wall_ms,mean_cluster_size";

void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& rows, bool timing);
void write_summary(const std::filesystem::path& path, const std::vector<RunRecord>& records, bool timing);
/// Mean and standard error (sample std / sqrt(n)) per grid point and
/// algorithm over successful runs.
void write_aggregate(const std::filesystem::path& path, const std::vector<GridPoint>& points,
                     const std::vector<RunRecord>& records, bool timing);

struct Aggregate {
  double mean = 0.0;
  double std_error = 0.0;
};
Aggregate mean_and_std_error(const std::vector<double>& values);

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitSolverFailure = 2 };

/// Runs every grid point x seed x algorithm on a bounded worker pool and
/// writes traces/, summary.csv and aggregate.csv under plan.out_dir.
/// Failed runs are reported on `log` and skipped; the others still run.
int run_experiment(const ExperimentPlan& plan, std::ostream& log);

}  // namespace hetsca
