#include "hetsca/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "hetsca/errors.hpp"

namespace hetsca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
// Eigenvalues below this fraction of the largest count as zero when no
// multiplier regularizes them.
constexpr double kDropTol = 1e-12;
// Right-hand-side mass in dropped directions above this fraction makes the
// unregularized problem unbounded.
constexpr double kUnboundedTol = 1e-9;
constexpr double kZeroBlockNorm = 1e-12;

// (A + lambda I)^{-1} B in A's eigenbasis.
struct RotatedSystem {
  RVector eig;
  CMatrix rotated;  // Q^H B

  double drop_threshold() const { return eig.size() ? kDropTol * eig.maxCoeff() : 0.0; }

  bool dropped(Eigen::Index i, double lambda) const { return lambda == 0.0 && eig(i) <= drop_threshold(); }

  double power(double lambda) const {
    double acc = 0.0;
    const double total = rotated.norm();
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
      const double w = rotated.row(i).squaredNorm();
      if (dropped(i, lambda)) {
        if (std::sqrt(w) > kUnboundedTol * total) return kInf;
        continue;
      }
      const double a = eig(i) + lambda;
      acc += w / (a * a);
    }
    return acc;
  }

  CMatrix solve(double lambda) const {
    CMatrix x = rotated;
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
      if (dropped(i, lambda)) {
        x.row(i).setZero();
      } else {
        x.row(i) /= eig(i) + lambda;
      }
    }
    return x;
  }
};

linalg::PsdSpectrum spectrum_of(const CMatrix& a) { return linalg::psd_spectrum(a); }

double relative_residual(const CMatrix& residual, const CMatrix& rhs) {
  return residual.norm() / std::max(1.0, rhs.norm());
}

void record_bisection(SolverStats& stats, const BisectionResult& r) { stats.bisections.push_back(r); }

}  // namespace

double BisectionResult::relative_gap() const {
  if (lambda > 0.0) return std::abs(power - budget) / budget;
  return std::max(0.0, power - budget) / budget;
}

BisectionResult bisect_multiplier(const std::function<double(double)>& power_of_lambda, double budget,
                                  const BisectionSpec& spec) {
  if (!(budget > 0.0)) throw Error(Errc::InvalidArgument, "budget must be positive");
  BisectionResult r;
  r.budget = budget;
  const double p0 = power_of_lambda(0.0);
  if (p0 <= budget) {
    r.power = p0;
    return r;
  }
  auto check_order = [](double l_lo, double pw_lo, double l_hi, double pw_hi) {
    if (pw_hi > pw_lo * (1.0 + 1e-12)) {
      throw Error(Errc::NonMonotone,
                  fmt::format("power({:.6g}) = {:.6g} exceeds power({:.6g}) = {:.6g}", l_hi, pw_hi, l_lo, pw_lo));
    }
  };
  double lo = 0.0;
  double p_lo = p0;
  double hi = spec.lambda_hi > 0.0 ? spec.lambda_hi : 1.0;
  double p_hi = power_of_lambda(hi);
  check_order(lo, p_lo, hi, p_hi);
  int doublings = 0;
  while (p_hi > budget) {
    if (++doublings > spec.max_doublings) {
      throw Error(Errc::BracketFailure, fmt::format("power {:.6g} still above budget {:.6g} at lambda {:.6g}", p_hi,
                                                    budget, hi));
    }
    lo = hi;
    p_lo = p_hi;
    hi *= 2.0;
    p_hi = power_of_lambda(hi);
    check_order(lo, p_lo, hi, p_hi);
  }
  int it = 0;
  while (it < spec.max_iters && hi - lo > std::max(spec.tol_lambda, 4.0 * kEps * hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double p_mid = power_of_lambda(mid);
    check_order(lo, p_lo, mid, p_mid);
    check_order(mid, p_mid, hi, p_hi);
    if (p_mid > budget) {
      lo = mid;
      p_lo = p_mid;
    } else {
      hi = mid;
      p_hi = p_mid;
    }
    ++it;
  }
  r.lambda = hi;
  r.power = p_hi;
  r.iterations = it;
  return r;
}

void SolverStats::merge(const SolverStats& other) {
  block_updates += other.block_updates;
  rounds += other.rounds;
  bisections.insert(bisections.end(), other.bisections.begin(), other.bisections.end());
  stationarity = std::max(stationarity, other.stationarity);
  zero_block_certificate = std::max(zero_block_certificate, other.zero_block_certificate);
  trajectory.insert(trajectory.end(), other.trajectory.begin(), other.trajectory.end());
}

double SolverStats::kkt_residual() const {
  double r = stationarity;
  for (const auto& b : bisections) r = std::max(r, b.relative_gap());
  return r;
}

SolverStats ibc_update(const SurrogateModel& model, const ChannelSet& ch, std::size_t cell, PrecoderSet& v) {
  const CMatrix& j = model.curvature(cell);
  const auto spec = spectrum_of(j);
  std::vector<RotatedSystem> systems;
  for (std::size_t u = ch.first_user(cell); u < ch.end_user(cell); ++u) {
    systems.push_back({spec.values, spec.vectors.adjoint() * model.linear(u)});
  }
  auto power = [&](double lambda) {
    double acc = 0.0;
    for (const auto& s : systems) acc += s.power(lambda);
    return acc;
  };
  SolverStats stats;
  const auto bis = bisect_multiplier(power, ch.cell_budget(cell));
  record_bisection(stats, bis);
  const Eigen::Index dim = j.rows();
  for (std::size_t i = 0; i < systems.size(); ++i) {
    const std::size_t u = ch.first_user(cell) + i;
    v[u] = spec.vectors * systems[i].solve(bis.lambda);
    const CMatrix residual = (j + bis.lambda * CMatrix::Identity(dim, dim)) * v[u] - model.linear(u);
    if (bis.lambda > 0.0 || systems[i].power(0.0) < kInf) {
      stats.stationarity = std::max(stats.stationarity, relative_residual(residual, model.linear(u)));
    }
  }
  stats.block_updates = 1;
  stats.rounds = 1;
  return stats;
}

ZfBasis zf_basis(const ChannelSet& ch, std::size_t cell) {
  const Eigen::Index dim = ch.tx_dim(cell);
  const Eigen::Index n = ch.rx_antennas();
  const auto users = static_cast<Eigen::Index>(ch.users_in_cell(cell));
  if (users * n > dim) {
    throw Error(Errc::InfeasibleZF,
                fmt::format("cell {}: {} users x {} antennas exceed transmit dimension {}", cell, users, n, dim));
  }
  ZfBasis basis;
  basis.cell = cell;
  for (std::size_t i = ch.first_user(cell); i < ch.end_user(cell); ++i) {
    CMatrix others(n * (users - 1), dim);
    Eigen::Index row = 0;
    for (std::size_t j = ch.first_user(cell); j < ch.end_user(cell); ++j) {
      if (j == i) continue;
      others.middleRows(row, n) = ch.stacked(j, cell);
      row += n;
    }
    try {
      CMatrix r = linalg::null_space_basis(others);
      if (r.cols() < ch.streams(i)) {
        throw Error(Errc::InfeasibleZF, fmt::format("user {}: null space of dimension {} cannot carry {} streams", i,
                                                    r.cols(), ch.streams(i)));
      }
      basis.bases.push_back(std::move(r));
    } catch (const Error& e) {
      if (e.code() == Errc::EmptyNullSpace) throw Error(Errc::InfeasibleZF, e.what());
      throw;
    }
  }
  return basis;
}

SolverStats zf_update(const SurrogateModel& model, const ChannelSet& ch, const ZfBasis& basis, PrecoderSet& v) {
  const std::size_t cell = basis.cell;
  const CMatrix& j = model.curvature(cell);
  if (basis.bases.size() != ch.users_in_cell(cell)) throw Error(Errc::ShapeMismatch, "basis does not match cell");
  std::vector<linalg::PsdSpectrum> spectra;
  std::vector<RotatedSystem> systems;
  std::vector<CMatrix> reduced_j;
  std::vector<CMatrix> reduced_s;
  for (std::size_t i = 0; i < basis.bases.size(); ++i) {
    const std::size_t u = ch.first_user(cell) + i;
    const CMatrix& r = basis.bases[i];
    reduced_j.push_back(linalg::hermitian_part(r.adjoint() * j * r));
    reduced_s.push_back(r.adjoint() * model.linear(u));
    spectra.push_back(spectrum_of(reduced_j.back()));
    systems.push_back({spectra.back().values, spectra.back().vectors.adjoint() * reduced_s.back()});
  }
  auto power = [&](double lambda) {
    double acc = 0.0;
    for (const auto& s : systems) acc += s.power(lambda);
    return acc;
  };
  SolverStats stats;
  const auto bis = bisect_multiplier(power, ch.cell_budget(cell));
  record_bisection(stats, bis);
  for (std::size_t i = 0; i < systems.size(); ++i) {
    const std::size_t u = ch.first_user(cell) + i;
    const CMatrix w = spectra[i].vectors * systems[i].solve(bis.lambda);
    v[u] = basis.bases[i] * w;
    const Eigen::Index rd = w.rows();
    const CMatrix residual = (reduced_j[i] + bis.lambda * CMatrix::Identity(rd, rd)) * w - reduced_s[i];
    stats.stationarity = std::max(stats.stationarity, relative_residual(residual, reduced_s[i]));
  }
  stats.block_updates = 1;
  stats.rounds = 1;
  return stats;
}

double cell_subproblem_value(const SurrogateModel& model, const ChannelSet& ch, std::size_t cell,
                             const PrecoderSet& v, const BlockWeights& gamma) {
  const Eigen::Index m = ch.tx_antennas();
  double acc = 0.0;
  for (std::size_t u = ch.first_user(cell); u < ch.end_user(cell); ++u) {
    acc += eval_block_bound(model, ch, u, v[u]);
    if (gamma.empty()) continue;
    for (std::size_t q = 0; q < gamma.at(u).size(); ++q) {
      if (gamma[u][q] != 0.0) acc -= gamma[u][q] * v.block(u, q, m).norm();
    }
  }
  return acc;
}

GroupLassoBlock group_lasso_rotated(const RVector& eigenvalues, const CMatrix& rotated, double shift, double gamma) {
  GroupLassoBlock out;
  const double bnorm = rotated.norm();
  if (2.0 * bnorm <= gamma) {
    out.x = CMatrix::Zero(rotated.rows(), rotated.cols());
    out.zero = true;
    return out;
  }
  const double drop = eigenvalues.size() ? kDropTol * eigenvalues.maxCoeff() : 0.0;
  RVector a(eigenvalues.size());
  RVector w(eigenvalues.size());
  double singular_mass = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a(i) = (shift == 0.0 && eigenvalues(i) <= drop) ? 0.0 : eigenvalues(i) + shift;
    w(i) = rotated.row(i).squaredNorm();
    if (a(i) == 0.0) singular_mass += w(i);
  }
  const double target = 0.25 * gamma * gamma;
  if (singular_mass >= target) {
    out.unbounded = true;
    return out;
  }
  // F(mu) = mu^2 sum w_i / (a_i + mu)^2 increases from singular_mass to ||b||^2.
  auto f = [&](double mu, double& slope) {
    double value = 0.0;
    slope = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double den = a(i) + mu;
      const double ratio = mu / den;
      value += w(i) * ratio * ratio;
      slope += 2.0 * w(i) * mu * a(i) / (den * den * den);
    }
    return value - target;
  };
  double lo = 0.0;
  double hi = std::max(gamma, 1e-300);
  double slope = 0.0;
  for (int i = 0; i < 4000 && f(hi, slope) < 0.0; ++i) hi *= 2.0;
  double mu = 0.5 * (lo + hi);
  for (int it = 0; it < 500; ++it) {
    const double value = f(mu, slope);
    if (value == 0.0) break;
    if (value < 0.0) {
      lo = mu;
    } else {
      hi = mu;
    }
    if (hi - lo <= 4.0 * kEps * hi) break;
    double next = slope > 0.0 ? mu - value / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - mu) <= 2.0 * kEps * mu) {
      mu = next;
      break;
    }
    mu = next;
  }
  if (!(mu > 0.0) || !std::isfinite(mu)) throw Error(Errc::ProxStall, "group-LASSO multiplier search failed");
  out.x = rotated;
  for (Eigen::Index i = 0; i < a.size(); ++i) out.x.row(i) /= a(i) + mu;
  if (out.x.norm() < kZeroBlockNorm) {
    out.x.setZero();
    out.zero = true;
  }
  return out;
}

SolverStats comp_block_update(const SurrogateModel& model, const ChannelSet& ch, std::size_t cell, std::size_t bs,
                              PrecoderSet& v, const ServingPattern& serving, const BlockWeights& gamma) {
  const Eigen::Index m = ch.tx_antennas();
  const Eigen::Index offset = Eigen::Index(bs) * m;
  const CMatrix& j = model.curvature(cell);
  const CMatrix a = j.block(offset, offset, m, m);
  const auto spec = spectrum_of(a);

  struct Target {
    std::size_t user;
    CMatrix rhs;
    RotatedSystem system;
    double gamma;
  };
  std::vector<Target> targets;
  for (std::size_t u = ch.first_user(cell); u < ch.end_user(cell); ++u) {
    if (!serving(u, bs)) continue;
    const CMatrix rhs = model.linear(u).middleRows(offset, m) - j.middleRows(offset, m) * v[u] +
                        a * v[u].middleRows(offset, m);
    const double g = gamma.empty() ? 0.0 : gamma.at(u).at(bs);
    targets.push_back({u, rhs, RotatedSystem{spec.values, spec.vectors.adjoint() * rhs}, g});
  }

  SolverStats stats;
  stats.block_updates = 1;
  if (targets.empty()) return stats;

  auto block_power = [&](const Target& t, double lambda) {
    if (t.gamma == 0.0) return t.system.power(lambda);
    const auto sol = group_lasso_rotated(t.system.eig, t.system.rotated, lambda, t.gamma);
    return sol.unbounded ? kInf : sol.x.squaredNorm();
  };
  auto power = [&](double lambda) {
    double acc = 0.0;
    for (const auto& t : targets) acc += block_power(t, lambda);
    return acc;
  };
  const auto bis = bisect_multiplier(power, ch.bs_budget(cell, bs));
  record_bisection(stats, bis);

  const CMatrix shifted = a + bis.lambda * CMatrix::Identity(m, m);
  for (const auto& t : targets) {
    auto block = v.block(t.user, bs, m);
    if (t.gamma == 0.0) {
      block = spec.vectors * t.system.solve(bis.lambda);
      stats.stationarity = std::max(stats.stationarity, relative_residual(shifted * block - t.rhs, t.rhs));
      continue;
    }
    const auto sol = group_lasso_rotated(t.system.eig, t.system.rotated, bis.lambda, t.gamma);
    if (sol.zero) {
      block.setZero();
      stats.zero_block_certificate = std::max(stats.zero_block_certificate, 2.0 * t.rhs.norm() - t.gamma);
      continue;
    }
    block = spec.vectors * sol.x;
    const CMatrix x = block;
    const CMatrix residual = shifted * x - t.rhs + (0.5 * t.gamma / x.norm()) * x;
    stats.stationarity = std::max(stats.stationarity, relative_residual(residual, t.rhs));
  }
  return stats;
}

namespace {

void check_block_ascent(double before, double after) {
  const double slack = 1e-9 * std::max(1.0, std::abs(before));
  if (after < before - slack) {
    throw Error(Errc::AscentViolation,
                fmt::format("block update lowered the subproblem from {:.17g} to {:.17g}", before, after));
  }
}

}  // namespace

SolverStats comp_exact_solve(const SurrogateModel& model, const ChannelSet& ch, std::size_t cell, PrecoderSet& v,
                             const ServingPattern& serving, const BlockWeights& gamma, double inner_tol,
                             int max_rounds) {
  if (!(inner_tol > 0.0)) throw Error(Errc::InvalidArgument, "inner_tol must be positive");
  SolverStats stats;
  const auto q_count = static_cast<std::size_t>(ch.bs_count(cell));
  double round_start = cell_subproblem_value(model, ch, cell, v, gamma);
  double current = round_start;
  for (int round = 0; round < max_rounds; ++round) {
    for (std::size_t q = 0; q < q_count; ++q) {
      stats.merge(comp_block_update(model, ch, cell, q, v, serving, gamma));
      const double next = cell_subproblem_value(model, ch, cell, v, gamma);
      check_block_ascent(current, next);
      current = next;
      stats.trajectory.push_back(current);
    }
    ++stats.rounds;
    if (q_count == 1) break;
    const double increase = (current - round_start) / std::max(std::abs(round_start), 1e-12);
    if (increase <= inner_tol) break;
    round_start = current;
  }
  return stats;
}

SolverStats comp_single_pass(const SurrogateModel& model, const ChannelSet& ch, std::size_t cell, PrecoderSet& v,
                             const ServingPattern& serving, const BlockWeights& gamma) {
  if (!(model.beta(cell) > 0.0)) {
    throw Error(Errc::InvalidArgument, "single-pass block updates need a positive proximal weight");
  }
  SolverStats stats;
  double current = cell_subproblem_value(model, ch, cell, v, gamma);
  for (std::size_t q = 0; q < static_cast<std::size_t>(ch.bs_count(cell)); ++q) {
    stats.merge(comp_block_update(model, ch, cell, q, v, serving, gamma));
    const double next = cell_subproblem_value(model, ch, cell, v, gamma);
    check_block_ascent(current, next);
    current = next;
    stats.trajectory.push_back(current);
  }
  stats.rounds = 1;
  return stats;
}

}  // namespace hetsca
