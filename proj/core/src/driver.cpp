#include "hetsca/driver.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "hetsca/errors.hpp"

namespace hetsca {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

bool is_zf(const ChannelSet& ch) { return ch.config().scenario == Scenario::IbcZf; }

void apply_structure(const ChannelSet& ch, PrecoderSet& v, const std::vector<ZfBasis>& zf,
                     const ServingPattern& serving) {
  const Eigen::Index m = ch.tx_antennas();
  for (std::size_t u = 0; u < ch.num_users(); ++u) {
    const std::size_t cell = ch.cell_of(u);
    if (!zf.empty()) {
      const CMatrix& r = zf[cell].bases[u - ch.first_user(cell)];
      v[u] = r * (r.adjoint() * v[u]);
    }
    for (std::size_t q = 0; q < static_cast<std::size_t>(ch.bs_count(cell)); ++q) {
      if (!serving(u, q)) v.block(u, q, m).setZero();
    }
  }
}

// Scales every power group so its power is fraction[k][q] * budget.
void fill_groups(const ChannelSet& ch, PrecoderSet& v, const std::vector<std::vector<double>>& fraction) {
  const auto powers = group_powers(ch, v);
  const auto budgets = group_budgets(ch);
  const bool per_bs = uses_per_bs_power(ch.config().scenario);
  const Eigen::Index m = ch.tx_antennas();
  for (std::size_t k = 0; k < ch.num_cells(); ++k) {
    for (std::size_t q = 0; q < powers[k].size(); ++q) {
      if (powers[k][q] <= 0.0) continue;
      const double scale = std::sqrt(fraction[k][q] * budgets[k][q] / powers[k][q]);
      for (std::size_t u = ch.first_user(k); u < ch.end_user(k); ++u) {
        if (per_bs) {
          v.block(u, q, m) *= scale;
        } else {
          v[u] *= scale;
        }
      }
    }
  }
}

std::vector<std::vector<double>> constant_fraction(const ChannelSet& ch, double value) {
  auto budgets = group_budgets(ch);
  for (auto& row : budgets) std::fill(row.begin(), row.end(), value);
  return budgets;
}

std::vector<ZfBasis> zf_bases(const ChannelSet& ch) {
  std::vector<ZfBasis> out;
  if (!is_zf(ch)) return out;
  for (std::size_t k = 0; k < ch.num_cells(); ++k) out.push_back(zf_basis(ch, k));
  return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

std::string_view to_string(Algorithm a) noexcept {
  return a == Algorithm::Sca ? "SCA" : "IN-SCA";
}

std::string_view to_string(InitPolicy p) noexcept {
  switch (p) {
    case InitPolicy::ZeroPlusEpsilon: return "ZERO-PLUS-EPSILON";
    case InitPolicy::ScaledRandom: return "SCALED-RANDOM";
    case InitPolicy::ScaledMrt: return "SCALED-MRT";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  const auto n = upper(name);
  if (n == "SCA") return Algorithm::Sca;
  if (n == "IN-SCA" || n == "INSCA") return Algorithm::InSca;
  throw Error(Errc::ValidationError, "unknown algorithm '" + std::string(name) + "'", "algorithm");
}

InitPolicy parse_init_policy(std::string_view name) {
  const auto n = upper(name);
  for (auto p : {InitPolicy::ZeroPlusEpsilon, InitPolicy::ScaledRandom, InitPolicy::ScaledMrt}) {
    if (to_string(p) == n) return p;
  }
  throw Error(Errc::ValidationError, "unknown init policy '" + std::string(name) + "'", "init");
}

double SolveReport::sum_rate() const {
  double acc = 0.0;
  for (double r : rates) acc += r;
  return acc;
}

double SolveReport::mean_cluster_size() const {
  if (cluster_sizes.empty()) return 0.0;
  double acc = 0.0;
  for (int c : cluster_sizes) acc += c;
  return acc / static_cast<double>(cluster_sizes.size());
}

ServingPattern serving_for(const ChannelSet& ch) {
  if (ch.config().scenario == Scenario::CompPartialFixed) {
    return ServingPattern::strongest(ch, ch.config().serving_cluster_size);
  }
  return ServingPattern::full(ch);
}

double effective_gamma(const ChannelSet& ch, const std::optional<double>& gamma) {
  const Scenario s = ch.config().scenario;
  if (!uses_per_bs_power(s)) return 0.0;
  if (gamma) {
    if (!(*gamma >= 0.0)) throw Error(Errc::ValidationError, "gamma must be nonnegative", "gamma");
    return *gamma;
  }
  return s == Scenario::CompSparse ? kDefaultSparseGamma : 0.0;
}

std::vector<double> effective_beta(const ChannelSet& ch, const RunSettings& settings) {
  const std::size_t cells = ch.num_cells();
  std::vector<double> beta;
  if (settings.beta.empty()) {
    beta.assign(cells, settings.algorithm == Algorithm::Sca ? 0.0 : kDefaultInScaBeta);
  } else if (settings.beta.size() == 1) {
    beta.assign(cells, settings.beta.front());
  } else if (settings.beta.size() == cells) {
    beta = settings.beta;
  } else {
    throw Error(Errc::ValidationError, "beta needs one entry per cell", "beta");
  }
  for (double b : beta)
    if (!(b >= 0.0) || !std::isfinite(b)) throw Error(Errc::ValidationError, "beta must be nonnegative", "beta");
  if (settings.algorithm == Algorithm::InSca && uses_per_bs_power(ch.config().scenario)) {
    for (double b : beta) {
      if (!(b > 0.0)) throw Error(Errc::ValidationError, "IN-SCA with per-BS block updates needs beta > 0", "beta");
    }
  }
  return beta;
}

PrecoderSet initialize(const ChannelSet& ch, InitPolicy policy, std::uint64_t seed) {
  RandomStream rng(seed, streams::kInitialization);
  PrecoderSet v = PrecoderSet::zeros(ch);
  for (std::size_t u = 0; u < ch.num_users(); ++u) {
    const std::size_t cell = ch.cell_of(u);
    if (policy == InitPolicy::ScaledMrt) {
      const auto d = linalg::svd(ch.stacked(u, cell));
      v[u] = d.right.leftCols(ch.streams(u));
    } else {
      v[u] = rng.complex_gaussian(ch.tx_dim(cell), ch.streams(u), 0.5);
    }
  }
  apply_structure(ch, v, zf_bases(ch), serving_for(ch));
  const double fraction = policy == InitPolicy::ZeroPlusEpsilon ? kInitEpsilon * kInitEpsilon : kInitFill;
  fill_groups(ch, v, constant_fraction(ch, fraction));
  return v;
}

PrecoderSet random_feasible_point(const ChannelSet& ch, RandomStream& rng) {
  PrecoderSet v = PrecoderSet::zeros(ch);
  for (std::size_t u = 0; u < ch.num_users(); ++u) {
    v[u] = rng.complex_gaussian(ch.tx_dim(ch.cell_of(u)), ch.streams(u), 0.5);
  }
  apply_structure(ch, v, zf_bases(ch), serving_for(ch));
  auto fraction = group_budgets(ch);
  for (auto& row : fraction)
    for (auto& x : row) x = rng.uniform();
  fill_groups(ch, v, fraction);
  return v;
}

double stationarity_residual(const ChannelSet& ch, const PrecoderSet& v, const BlockWeights& gamma,
                             int num_directions, std::uint64_t seed) {
  RandomStream rng(seed, streams::kDiagnostics);
  const double u0 = objective(ch, v, gamma);
  const double base_step = 1e-5 * std::max(1.0, std::sqrt(v.squared_norm()));
  double worst = 0.0;
  for (int i = 0; i < num_directions; ++i) {
    const PrecoderSet target = random_feasible_point(ch, rng);
    PrecoderSet dir = target - v;
    const double dist = std::sqrt(dir.squared_norm());
    if (dist == 0.0) continue;
    dir = dir * (1.0 / dist);
    const double r = std::min(base_step, dist);
    // Richardson-extrapolated forward difference, exact for the piecewise
    // linear penalty along a ray.
    const double full = objective(ch, v + dir * r, gamma);
    const double half = objective(ch, v + dir * (0.5 * r), gamma);
    const double slope = (4.0 * half - full - 3.0 * u0) / r;
    worst = std::max(worst, slope);
  }
  return worst / std::max(1.0, std::abs(u0));
}

SolveReport run(const ChannelSet& ch, const RunSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  if (!(settings.tol > 0.0)) throw Error(Errc::ValidationError, "tol must be positive", "tol");
  if (!(settings.inner_tol > 0.0)) throw Error(Errc::ValidationError, "inner_tol must be positive", "inner_tol");
  if (settings.max_iters < 1) throw Error(Errc::ValidationError, "max_iters must be >= 1", "max_iters");

  const Scenario scenario = ch.config().scenario;
  const auto beta = effective_beta(ch, settings);
  const double gamma_value = effective_gamma(ch, settings.gamma);
  const BlockWeights gamma = uniform_block_weights(ch, gamma_value);
  const ServingPattern serving = serving_for(ch);
  const auto zf = zf_bases(ch);
  const double eta = 0.5 * *std::min_element(beta.begin(), beta.end());

  SolveReport report;
  report.beta = beta;
  report.gamma = gamma_value;

  PrecoderSet v = settings.initial ? *settings.initial : initialize(ch, settings.init, settings.init_seed);
  check_shapes(ch, v);
  double u_old = objective(ch, v, gamma);
  report.initial_objective = u_old;
  if (settings.record_iterates) report.iterates.push_back(v);

  for (int t = 1; t <= settings.max_iters; ++t) {
    const SurrogateModel model = build_surrogate(ch, v, beta);
    PrecoderSet next = v;
    SolverStats stats;
    for (std::size_t k = 0; k < ch.num_cells(); ++k) {
      switch (scenario) {
        case Scenario::Ibc:
          stats.merge(ibc_update(model, ch, k, next));
          break;
        case Scenario::IbcZf:
          stats.merge(zf_update(model, ch, zf[k], next));
          break;
        case Scenario::CompFull:
        case Scenario::CompPartialFixed:
        case Scenario::CompSparse:
          if (settings.algorithm == Algorithm::Sca) {
            stats.merge(comp_exact_solve(model, ch, k, next, serving, gamma, settings.inner_tol));
          } else {
            stats.merge(comp_single_pass(model, ch, k, next, serving, gamma));
          }
          break;
      }
    }

    const double surrogate = eval_total_bound(model, ch, next, gamma);
    const double u_new = objective(ch, next, gamma);
    const double step_sq = (next - v).squared_norm();
    const double margin = settings.algorithm == Algorithm::Sca ? u_new - u_old : surrogate - u_old - eta * step_sq;
    if (margin < -kAscentSlack) {
      throw Error(Errc::AscentViolation,
                  fmt::format("iteration {}: ascent margin {:.3e} (objective {:.17g} -> {:.17g}, surrogate {:.17g})",
                              t, margin, u_old, u_new, surrogate));
    }
    report.min_ascent_margin = std::min(report.min_ascent_margin, margin);
    for (const auto& b : stats.bisections) {
      if (b.lambda > 0.0) {
        report.max_active_power_gap = std::max(report.max_active_power_gap, b.relative_gap());
      } else {
        report.max_inactive_power_excess = std::max(report.max_inactive_power_excess, (b.power - b.budget) / b.budget);
      }
    }
    report.max_zero_block_certificate = std::max(report.max_zero_block_certificate, stats.zero_block_certificate);
    report.inner_block_updates += stats.block_updates;

    if (settings.record_trace) {
      report.trace.push_back({t, u_new, surrogate, std::sqrt(step_sq), elapsed_ms(start), stats.kkt_residual()});
    }
    if (settings.record_iterates) report.iterates.push_back(next);
    report.iterations = t;

    const double change = std::abs(u_new - u_old) / std::max(std::abs(u_old), 1e-12);
    v = std::move(next);
    u_old = u_new;
    if (change <= settings.tol) {
      report.converged = true;
      break;
    }
  }

  report.objective = u_old;
  report.rates = user_rates(ch, v);
  for (std::size_t u = 0; u < ch.num_users(); ++u) report.cluster_sizes.push_back(cluster_size(ch, v, u));
  if (settings.stationarity_directions > 0) {
    report.stationarity =
        stationarity_residual(ch, v, gamma, settings.stationarity_directions, settings.init_seed ^ 0x5eedULL);
  }
  report.precoders = std::move(v);
  report.wall_ms = elapsed_ms(start);
  return report;
}

}  // namespace hetsca
