#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hetsca/linalg.hpp"
#include "hetsca/network.hpp"

namespace hetsca {

/// One stacked precoder per user, (M * Q_cell) x d. Rows [q*M, (q+1)*M) are
/// the block transmitted by BS q of the user's cell.
class PrecoderSet {
 public:
  PrecoderSet() = default;
  explicit PrecoderSet(std::vector<CMatrix> users) : users_(std::move(users)) {}

  /// All-zero precoders with the shapes implied by `ch`.
  static PrecoderSet zeros(const ChannelSet& ch);

  std::size_t size() const noexcept { return users_.size(); }
  CMatrix& operator[](std::size_t u) { return users_.at(u); }
  const CMatrix& operator[](std::size_t u) const { return users_.at(u); }

  auto block(std::size_t u, std::size_t bs, Eigen::Index m) { return users_.at(u).middleRows(Eigen::Index(bs) * m, m); }
  auto block(std::size_t u, std::size_t bs, Eigen::Index m) const {
    return users_.at(u).middleRows(Eigen::Index(bs) * m, m);
  }

  double squared_norm() const;
  PrecoderSet operator-(const PrecoderSet& other) const;
  PrecoderSet operator+(const PrecoderSet& other) const;
  PrecoderSet operator*(double t) const;

 private:
  std::vector<CMatrix> users_;
};

/// Checks the PrecoderSet has one (M Q_k) x d_u matrix per user.
void check_shapes(const ChannelSet& ch, const PrecoderSet& v);

/// gamma[u][q]: group-sparsity weight on user u's block at BS q of its cell.
using BlockWeights = std::vector<std::vector<double>>;
BlockWeights uniform_block_weights(const ChannelSet& ch, double gamma);

/// Which BSs of its own cell may transmit to each user.
struct ServingPattern {
  std::vector<std::vector<bool>> serves;  // [user][bs]

  bool operator()(std::size_t u, std::size_t bs) const { return serves.at(u).at(bs); }
  static ServingPattern full(const ChannelSet& ch);
  /// Each user served by its `cluster_size` strongest BSs (Frobenius norm of
  /// the link), ties broken by lower BS index.
  static ServingPattern strongest(const ChannelSet& ch, int cluster_size);
};

/// C_u = sigma^2 I + sum_j H_u^{cell(j)} V_j V_j^H (H_u^{cell(j)})^H.
CMatrix covariance(const ChannelSet& ch, const PrecoderSet& v, std::size_t user);
/// C_u with user u's own signal removed.
CMatrix interference_covariance(const ChannelSet& ch, const PrecoderSet& v, std::size_t user);

CMatrix mmse_receiver(const ChannelSet& ch, const PrecoderSet& v, std::size_t user);

/// MSE matrix of user u for an arbitrary receiver `receiver` (N x d).
CMatrix mse_matrix(const ChannelSet& ch, const PrecoderSet& v, const CMatrix& receiver, std::size_t user);

/// E = I - V^H H^H C^{-1} H V.
CMatrix mmse_matrix(const ChannelSet& ch, const PrecoderSet& v, std::size_t user);

/// -log|E| in nats.
double user_rate(const ChannelSet& ch, const PrecoderSet& v, std::size_t user);
/// log|C| - log|C - own signal|, the same rate without going through E.
double user_rate_direct(const ChannelSet& ch, const PrecoderSet& v, std::size_t user);

inline constexpr double kSingularMmseFloor = 1e-12;

/// Everything a surrogate needs about one user at a given precoder.
struct ReceiverState {
  CMatrix covariance;
  CMatrix receiver;
  CMatrix mmse;
  CMatrix mmse_inverse;
  double rate = 0.0;
  double utility = 0.0;
  double derivative = 0.0;
};

/// One factorization of C per user. A numerically singular E is floored with
/// kSingularMmseFloor * I before inversion.
ReceiverState receiver_state(const ChannelSet& ch, const PrecoderSet& v, std::size_t user);

struct UtilityValue {
  double value = 0.0;
  double derivative = 0.0;
};

/// f(R) and f'(R) for the configured utility. Throws UnknownUtility.
UtilityValue utility_and_derivative(UtilityKind kind, double weight, double rate);

/// sum gamma[u][q] * ||V_u^q||_F.
double penalty(const ChannelSet& ch, const PrecoderSet& v, const BlockWeights& gamma);

/// sum_u f_u(R_u(V)).
double sum_utility(const ChannelSet& ch, const PrecoderSet& v);

/// u(V) = sum utility - penalty.
double objective(const ChannelSet& ch, const PrecoderSet& v, const BlockWeights& gamma);

std::vector<double> user_rates(const ChannelSet& ch, const PrecoderSet& v);

struct FeasibilityReport {
  bool feasible = true;
  double max_power_excess = 0.0;  // max over power groups of (power - budget) / budget
  double max_zf_residual = 0.0;
  double max_unserved_norm = 0.0;
  std::vector<std::string> violations;
};

/// Power constraints for the configured scenario (per cell for IBC/IBC-ZF,
/// per BS otherwise), in-cell ZF equalities for IBC-ZF, and zero
/// non-serving blocks when `serving` is given. Power is checked relative to
/// the budget, ZF and unserved norms absolutely.
FeasibilityReport is_feasible(const ChannelSet& ch, const PrecoderSet& v, double tol = 1e-6,
                              const ServingPattern* serving = nullptr);

/// Transmit power per power group: [cell][0] for IBC-family scenarios,
/// [cell][bs] otherwise.
std::vector<std::vector<double>> group_powers(const ChannelSet& ch, const PrecoderSet& v);
std::vector<std::vector<double>> group_budgets(const ChannelSet& ch);

/// Number of BSs of the user's cell with a nonzero block.
int cluster_size(const ChannelSet& ch, const PrecoderSet& v, std::size_t user);

}  // namespace hetsca
