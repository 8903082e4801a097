#include "hetsca/rate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "hetsca/errors.hpp"

namespace hetsca {

namespace {

std::size_t user_count(const ChannelSet& ch) { return ch.num_users(); }

linalg::HpdFactor factor_covariance(const CMatrix& c) {
  try {
    return linalg::hpd_factorize(c);
  } catch (const Error& e) {
    throw Error(Errc::SingularCovariance, e.what());
  }
}

// Sum over users j of H V_j V_j^H H^H for the link matrices seen by `user`,
// optionally skipping one user.
CMatrix signal_sum(const ChannelSet& ch, const PrecoderSet& v, std::size_t user, std::ptrdiff_t skip) {
  const Eigen::Index n = ch.rx_antennas();
  CMatrix acc = CMatrix::Zero(n, n);
  for (std::size_t j = 0; j < user_count(ch); ++j) {
    if (static_cast<std::ptrdiff_t>(j) == skip) continue;
    const CMatrix hv = ch.stacked(user, ch.cell_of(j)) * v[j];
    acc.noalias() += hv * hv.adjoint();
  }
  return acc;
}

CMatrix noise_matrix(const ChannelSet& ch, std::size_t user) {
  const Eigen::Index n = ch.rx_antennas();
  return ch.noise(user) * CMatrix::Identity(n, n);
}

}  // namespace

PrecoderSet PrecoderSet::zeros(const ChannelSet& ch) {
  std::vector<CMatrix> users;
  users.reserve(ch.num_users());
  for (std::size_t u = 0; u < ch.num_users(); ++u) {
    users.push_back(CMatrix::Zero(ch.tx_dim(ch.cell_of(u)), ch.streams(u)));
  }
  return PrecoderSet(std::move(users));
}

double PrecoderSet::squared_norm() const {
  double acc = 0.0;
  for (const auto& m : users_) acc += m.squaredNorm();
  return acc;
}

PrecoderSet PrecoderSet::operator-(const PrecoderSet& other) const {
  if (other.size() != size()) throw Error(Errc::ShapeMismatch, "precoder sets differ in size");
  std::vector<CMatrix> out(size());
  for (std::size_t u = 0; u < size(); ++u) out[u] = users_[u] - other.users_[u];
  return PrecoderSet(std::move(out));
}

PrecoderSet PrecoderSet::operator+(const PrecoderSet& other) const {
  if (other.size() != size()) throw Error(Errc::ShapeMismatch, "precoder sets differ in size");
  std::vector<CMatrix> out(size());
  for (std::size_t u = 0; u < size(); ++u) out[u] = users_[u] + other.users_[u];
  return PrecoderSet(std::move(out));
}

PrecoderSet PrecoderSet::operator*(double t) const {
  std::vector<CMatrix> out(size());
  for (std::size_t u = 0; u < size(); ++u) out[u] = t * users_[u];
  return PrecoderSet(std::move(out));
}

void check_shapes(const ChannelSet& ch, const PrecoderSet& v) {
  if (v.size() != ch.num_users()) {
    throw Error(Errc::ShapeMismatch, fmt::format("expected {} precoders, got {}", ch.num_users(), v.size()));
  }
  for (std::size_t u = 0; u < v.size(); ++u) {
    if (v[u].rows() != ch.tx_dim(ch.cell_of(u)) || v[u].cols() != ch.streams(u)) {
      throw Error(Errc::ShapeMismatch, fmt::format("precoder of user {} is {}x{}, expected {}x{}", u, v[u].rows(),
                                                   v[u].cols(), ch.tx_dim(ch.cell_of(u)), ch.streams(u)));
    }
  }
}

BlockWeights uniform_block_weights(const ChannelSet& ch, double gamma) {
  BlockWeights w(ch.num_users());
  for (std::size_t u = 0; u < ch.num_users(); ++u) w[u].assign(ch.bs_count(ch.cell_of(u)), gamma);
  return w;
}

ServingPattern ServingPattern::full(const ChannelSet& ch) {
  ServingPattern p;
  for (std::size_t u = 0; u < ch.num_users(); ++u) p.serves.emplace_back(ch.bs_count(ch.cell_of(u)), true);
  return p;
}

ServingPattern ServingPattern::strongest(const ChannelSet& ch, int cluster_size) {
  ServingPattern p;
  for (std::size_t u = 0; u < ch.num_users(); ++u) {
    const std::size_t cell = ch.cell_of(u);
    const auto q_count = static_cast<std::size_t>(ch.bs_count(cell));
    std::vector<std::size_t> order(q_count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ch.link(u, cell, a).norm() > ch.link(u, cell, b).norm();
    });
    std::vector<bool> serves(q_count, false);
    const auto keep = std::min<std::size_t>(q_count, static_cast<std::size_t>(std::max(cluster_size, 1)));
    for (std::size_t i = 0; i < keep; ++i) serves[order[i]] = true;
    p.serves.push_back(std::move(serves));
  }
  return p;
}

CMatrix covariance(const ChannelSet& ch, const PrecoderSet& v, std::size_t user) {
  check_shapes(ch, v);
  return noise_matrix(ch, user) + signal_sum(ch, v, user, -1);
}

CMatrix interference_covariance(const ChannelSet& ch, const PrecoderSet& v, std::size_t user) {
  check_shapes(ch, v);
  return noise_matrix(ch, user) + signal_sum(ch, v, user, static_cast<std::ptrdiff_t>(user));
}

CMatrix mmse_receiver(const ChannelSet& ch, const PrecoderSet& v, std::size_t user) {
  const auto f = factor_covariance(covariance(ch, v, user));
  return linalg::hpd_solve(f, ch.stacked(user, ch.cell_of(user)) * v[user]);
}

CMatrix mse_matrix(const ChannelSet& ch, const PrecoderSet& v, const CMatrix& receiver, std::size_t user) {
  check_shapes(ch, v);
  const Eigen::Index d = ch.streams(user);
  if (receiver.rows() != ch.rx_antennas() || receiver.cols() != d) {
    throw Error(Errc::ShapeMismatch, "receiver must be N x d");
  }
  const CMatrix own = receiver.adjoint() * ch.stacked(user, ch.cell_of(user)) * v[user];
  const CMatrix gap = CMatrix::Identity(d, d) - own;
  CMatrix e = gap * gap.adjoint() + ch.noise(user) * receiver.adjoint() * receiver;
  for (std::size_t j = 0; j < ch.num_users(); ++j) {
    if (j == user) continue;
    const CMatrix leak = receiver.adjoint() * ch.stacked(user, ch.cell_of(j)) * v[j];
    e.noalias() += leak * leak.adjoint();
  }
  return linalg::hermitian_part(e);
}

CMatrix mmse_matrix(const ChannelSet& ch, const PrecoderSet& v, std::size_t user) {
  const auto f = factor_covariance(covariance(ch, v, user));
  const CMatrix g = linalg::lower_solve(f, ch.stacked(user, ch.cell_of(user)) * v[user]);
  const Eigen::Index d = ch.streams(user);
  return linalg::hermitian_part(CMatrix::Identity(d, d) - g.adjoint() * g);
}

namespace {

struct MmseFactor {
  CMatrix e;
  linalg::HpdFactor factor;
};

MmseFactor factor_mmse(const CMatrix& e) {
  const auto spectrum = linalg::psd_spectrum(e);
  const double smallest = spectrum.values.size() ? spectrum.values.minCoeff() : 1.0;
  const double jitter = smallest < kSingularMmseFloor ? kSingularMmseFloor : 0.0;
  try {
    return {e, linalg::hpd_factorize(e, jitter)};
  } catch (const Error&) {
    // Roundoff pushed an eigenvalue negative; fall back to the floor.
    return {e, linalg::hpd_factorize(e, kSingularMmseFloor + std::max(0.0, -smallest))};
  }
}

}  // namespace

double user_rate(const ChannelSet& ch, const PrecoderSet& v, std::size_t user) {
  const auto m = factor_mmse(mmse_matrix(ch, v, user));
  return std::max(0.0, -linalg::logdet_hpd(m.factor));
}

double user_rate_direct(const ChannelSet& ch, const PrecoderSet& v, std::size_t user) {
  const auto c = factor_covariance(covariance(ch, v, user));
  const auto y = factor_covariance(interference_covariance(ch, v, user));
  return linalg::logdet_hpd(c) - linalg::logdet_hpd(y);
}

ReceiverState receiver_state(const ChannelSet& ch, const PrecoderSet& v, std::size_t user) {
  ReceiverState s;
  s.covariance = covariance(ch, v, user);
  const auto f = factor_covariance(s.covariance);
  const CMatrix hv = ch.stacked(user, ch.cell_of(user)) * v[user];
  const CMatrix g = linalg::lower_solve(f, hv);
  s.receiver = linalg::hpd_solve(f, hv);
  const Eigen::Index d = ch.streams(user);
  s.mmse = linalg::hermitian_part(CMatrix::Identity(d, d) - g.adjoint() * g);
  const auto m = factor_mmse(s.mmse);
  s.mmse_inverse = linalg::hpd_inverse(m.factor);
  s.rate = std::max(0.0, -linalg::logdet_hpd(m.factor));
  const auto util = utility_and_derivative(ch.config().utility, ch.weight(user), s.rate);
  s.utility = util.value;
  s.derivative = util.derivative;
  return s;
}

UtilityValue utility_and_derivative(UtilityKind kind, double weight, double rate) {
  if (!(rate >= 0.0)) throw Error(Errc::InvalidArgument, "rate must be nonnegative");
  switch (kind) {
    case UtilityKind::WeightedSumRate:
      return {weight * rate, weight};
    case UtilityKind::LogOnePlusRate:
      return {weight * std::log1p(rate), weight / (1.0 + rate)};
  }
  throw Error(Errc::UnknownUtility, "unknown utility kind");
}

double penalty(const ChannelSet& ch, const PrecoderSet& v, const BlockWeights& gamma) {
  check_shapes(ch, v);
  if (gamma.empty()) return 0.0;
  if (gamma.size() != ch.num_users()) throw Error(Errc::ShapeMismatch, "gamma needs one row per user");
  const Eigen::Index m = ch.tx_antennas();
  double acc = 0.0;
  for (std::size_t u = 0; u < ch.num_users(); ++u) {
    const auto q_count = static_cast<std::size_t>(ch.bs_count(ch.cell_of(u)));
    if (gamma[u].size() != q_count) throw Error(Errc::ShapeMismatch, "gamma row must have one entry per BS");
    for (std::size_t q = 0; q < q_count; ++q) {
      if (gamma[u][q] != 0.0) acc += gamma[u][q] * v.block(u, q, m).norm();
    }
  }
  return acc;
}

double sum_utility(const ChannelSet& ch, const PrecoderSet& v) {
  check_shapes(ch, v);
  double acc = 0.0;
  for (std::size_t u = 0; u < ch.num_users(); ++u) {
    acc += utility_and_derivative(ch.config().utility, ch.weight(u), user_rate(ch, v, u)).value;
  }
  return acc;
}

double objective(const ChannelSet& ch, const PrecoderSet& v, const BlockWeights& gamma) {
  return sum_utility(ch, v) - penalty(ch, v, gamma);
}

std::vector<double> user_rates(const ChannelSet& ch, const PrecoderSet& v) {
  check_shapes(ch, v);
  std::vector<double> r(ch.num_users());
  for (std::size_t u = 0; u < ch.num_users(); ++u) r[u] = user_rate(ch, v, u);
  return r;
}

std::vector<std::vector<double>> group_powers(const ChannelSet& ch, const PrecoderSet& v) {
  check_shapes(ch, v);
  const bool per_bs = uses_per_bs_power(ch.config().scenario);
  const Eigen::Index m = ch.tx_antennas();
  std::vector<std::vector<double>> p(ch.num_cells());
  for (std::size_t k = 0; k < ch.num_cells(); ++k) {
    p[k].assign(per_bs ? ch.bs_count(k) : 1, 0.0);
    for (std::size_t u = ch.first_user(k); u < ch.end_user(k); ++u) {
      if (!per_bs) {
        p[k][0] += v[u].squaredNorm();
        continue;
      }
      for (std::size_t q = 0; q < p[k].size(); ++q) p[k][q] += v.block(u, q, m).squaredNorm();
    }
  }
  return p;
}

std::vector<std::vector<double>> group_budgets(const ChannelSet& ch) {
  const bool per_bs = uses_per_bs_power(ch.config().scenario);
  std::vector<std::vector<double>> b(ch.num_cells());
  for (std::size_t k = 0; k < ch.num_cells(); ++k) {
    if (!per_bs) {
      b[k] = {ch.cell_budget(k)};
      continue;
    }
    for (int q = 0; q < ch.bs_count(k); ++q) b[k].push_back(ch.bs_budget(k, q));
  }
  return b;
}

FeasibilityReport is_feasible(const ChannelSet& ch, const PrecoderSet& v, double tol, const ServingPattern* serving) {
  FeasibilityReport r;
  check_shapes(ch, v);
  const bool per_bs = uses_per_bs_power(ch.config().scenario);
  const auto powers = group_powers(ch, v);
  const auto budgets = group_budgets(ch);
  for (std::size_t k = 0; k < powers.size(); ++k) {
    for (std::size_t q = 0; q < powers[k].size(); ++q) {
      const double excess = (powers[k][q] - budgets[k][q]) / budgets[k][q];
      r.max_power_excess = std::max(r.max_power_excess, excess);
      if (excess > tol) {
        r.feasible = false;
        r.violations.push_back(per_bs ? fmt::format("power: cell {} BS {} uses {:.6g} of {:.6g}", k, q, powers[k][q],
                                                    budgets[k][q])
                                      : fmt::format("power: cell {} uses {:.6g} of {:.6g}", k, powers[k][q],
                                                    budgets[k][q]));
      }
    }
  }
  if (ch.config().scenario == Scenario::IbcZf) {
    for (std::size_t k = 0; k < ch.num_cells(); ++k) {
      for (std::size_t i = ch.first_user(k); i < ch.end_user(k); ++i) {
        for (std::size_t j = ch.first_user(k); j < ch.end_user(k); ++j) {
          if (i == j) continue;
          const double leak = (ch.stacked(j, k) * v[i]).norm();
          r.max_zf_residual = std::max(r.max_zf_residual, leak);
          if (leak > tol) {
            r.feasible = false;
            r.violations.push_back(fmt::format("zf: user {} leaks {:.3g} into user {}", i, leak, j));
          }
        }
      }
    }
  }
  if (serving != nullptr) {
    const Eigen::Index m = ch.tx_antennas();
    for (std::size_t u = 0; u < ch.num_users(); ++u) {
      for (std::size_t q = 0; q < static_cast<std::size_t>(ch.bs_count(ch.cell_of(u))); ++q) {
        if ((*serving)(u, q)) continue;
        const double norm = v.block(u, q, m).norm();
        r.max_unserved_norm = std::max(r.max_unserved_norm, norm);
        if (norm > tol) {
          r.feasible = false;
          r.violations.push_back(fmt::format("serving: BS {} transmits to unserved user {}", q, u));
        }
      }
    }
  }
  return r;
}

int cluster_size(const ChannelSet& ch, const PrecoderSet& v, std::size_t user) {
  const Eigen::Index m = ch.tx_antennas();
  int count = 0;
  for (std::size_t q = 0; q < static_cast<std::size_t>(ch.bs_count(ch.cell_of(user))); ++q) {
    if (v.block(user, q, m).norm() > 0.0) ++count;
  }
  return count;
}

}  // namespace hetsca
