#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "hetsca/rate.hpp"
#include "hetsca/solvers.hpp"
#include "hetsca/surrogate.hpp"

namespace hetsca {

enum class Algorithm { Sca, InSca };
enum class InitPolicy { ZeroPlusEpsilon, ScaledRandom, ScaledMrt };

std::string_view to_string(Algorithm a) noexcept;
std::string_view to_string(InitPolicy p) noexcept;
/// Accepts "SCA"/"IN-SCA" in any case, plus "insca".
Algorithm parse_algorithm(std::string_view name);
InitPolicy parse_init_policy(std::string_view name);

inline constexpr double kDefaultInScaBeta = 1e-3;
inline constexpr double kDefaultSparseGamma = 0.1;
inline constexpr double kInitEpsilon = 1e-3;
inline constexpr double kInitFill = 1.0 - 1e-6;
inline constexpr double kAscentSlack = 1e-9;

struct RunSettings {
  Algorithm algorithm = Algorithm::Sca;
  /// One entry per cell, or a single entry broadcast to all cells. Empty
  /// selects 0 for SCA and kDefaultInScaBeta for In-SCA.
  std::vector<double> beta;
  double tol = 1e-3;
  double inner_tol = 1e-3;
  int max_iters = 2000;
  InitPolicy init = InitPolicy::ScaledRandom;
  std::uint64_t init_seed = 0;
  /// Group-sparsity weight for ComP scenarios. Empty selects
  /// kDefaultSparseGamma for COMP-SPARSE and 0 otherwise; always 0 for IBC
  /// scenarios.
  std::optional<double> gamma;
  bool record_trace = true;
  bool record_iterates = false;
  int stationarity_directions = 16;
  std::optional<PrecoderSet> initial;
};

struct TraceRow {
  int iter = 0;
  double objective = 0.0;
  double surrogate = 0.0;
  double step = 0.0;
  double wall_ms = 0.0;
  double kkt_residual = 0.0;
};

struct SolveReport {
  std::vector<TraceRow> trace;
  std::vector<PrecoderSet> iterates;  // V(0), V(1), ... when requested
  PrecoderSet precoders;
  std::vector<double> rates;
  std::vector<int> cluster_sizes;
  double objective = 0.0;
  double initial_objective = 0.0;
  double stationarity = 0.0;
  long inner_block_updates = 0;
  int iterations = 0;
  bool converged = false;
  double wall_ms = 0.0;
  /// Largest relative |power - budget| over bisections with lambda > 0.
  double max_active_power_gap = 0.0;
  /// Largest relative power excess over bisections with lambda = 0.
  double max_inactive_power_excess = 0.0;
  double max_zero_block_certificate = -std::numeric_limits<double>::infinity();
  /// Smallest observed margin of the ascent test (>= -kAscentSlack).
  double min_ascent_margin = std::numeric_limits<double>::infinity();
  std::vector<double> beta;
  double gamma = 0.0;

  double sum_rate() const;
  double mean_cluster_size() const;
};

/// Serving pattern implied by the scenario: strongest-BS clusters for
/// COMP-PARTIAL-FIXED, everyone served otherwise.
ServingPattern serving_for(const ChannelSet& ch);
double effective_gamma(const ChannelSet& ch, const std::optional<double>& gamma);
std::vector<double> effective_beta(const ChannelSet& ch, const RunSettings& settings);

/// Feasible starting point for the configured scenario.
PrecoderSet initialize(const ChannelSet& ch, InitPolicy policy, std::uint64_t seed);

/// Random feasible point with each power group filled to a uniform random
/// fraction of its budget.
PrecoderSet random_feasible_point(const ChannelSet& ch, RandomStream& rng);

/// Largest forward directional derivative of u at v over random feasible
/// directions (unit Frobenius norm), clamped at 0 and divided by
/// max(1, |u(v)|).
double stationarity_residual(const ChannelSet& ch, const PrecoderSet& v, const BlockWeights& gamma,
                             int num_directions, std::uint64_t seed);

/// SCA or In-SCA outer loop. Throws AscentViolation when an iteration fails
/// its ascent test.
SolveReport run(const ChannelSet& ch, const RunSettings& settings);

}  // namespace hetsca
