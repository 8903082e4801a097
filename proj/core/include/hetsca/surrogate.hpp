#pragma once

#include <cstddef>
#include <vector>

#include "hetsca/rate.hpp"
#include "hetsca/random.hpp"

namespace hetsca {

/// Separable concave quadratic lower bound of the sum utility around an
/// expansion point. For each user u in cell k
///
///   g_u(X) = a_u + 2 Re Tr(S_u^H X) - Tr(X^H J_k X)
///
/// and sum_u g_u(V_u) <= f(V) with equality at the expansion point.
class SurrogateModel {
 public:
  const PrecoderSet& expansion_point() const noexcept { return expansion_; }
  const ReceiverState& state(std::size_t user) const { return states_.at(user); }
  const CMatrix& curvature(std::size_t cell) const { return curvature_.at(cell); }
  const CMatrix& linear(std::size_t user) const { return linear_.at(user); }
  double constant(std::size_t user) const { return constant_.at(user); }
  double beta(std::size_t cell) const { return beta_.at(cell); }
  const std::vector<double>& betas() const noexcept { return beta_; }
  /// f at the expansion point.
  double utility_at_expansion() const noexcept { return utility_; }

  std::size_t num_users() const noexcept { return states_.size(); }
  std::size_t num_cells() const noexcept { return curvature_.size(); }

 private:
  friend SurrogateModel build_surrogate(const ChannelSet&, const PrecoderSet&, const std::vector<double>&);

  PrecoderSet expansion_;
  std::vector<ReceiverState> states_;
  std::vector<CMatrix> curvature_;
  std::vector<CMatrix> linear_;
  std::vector<double> constant_;
  std::vector<double> beta_;
  double utility_ = 0.0;
};

/// `beta` holds one proximal weight per cell.
SurrogateModel build_surrogate(const ChannelSet& ch, const PrecoderSet& expansion, const std::vector<double>& beta);

double eval_block_bound(const SurrogateModel& model, const ChannelSet& ch, std::size_t user, const CMatrix& x);

/// sum_u g_u(V_u) - penalty(V).
double eval_total_bound(const SurrogateModel& model, const ChannelSet& ch, const PrecoderSet& v,
                        const BlockWeights& gamma);

/// Gradient of g_u at x with respect to the real inner product: 2 (S_u - J x).
CMatrix block_bound_gradient(const SurrogateModel& model, const ChannelSet& ch, std::size_t user, const CMatrix& x);

/// Linearization of each user's utility in its exact MMSE matrix, minus the
/// proximal term:
///   f_u(hat V) - c_u Tr[hat E_u^{-1} (E_u(V) - hat E_u)] - beta ||V_u - hat V_u||^2
/// summed over users.
double eval_first_stage_bound(const ChannelSet& ch, const PrecoderSet& v, const PrecoderSet& expansion,
                              const std::vector<double>& beta);

/// Matrix-fractional probe Tr[W^{-1} V^H H^H C^{-1} H V], jointly convex in
/// (V, C) for C positive definite.
double matrix_fractional(const CMatrix& weight, const CMatrix& channel, const CMatrix& v, const CMatrix& c);

/// Closed-form directional derivative of matrix_fractional at (v, c) along
/// (dv, dc).
double matrix_fractional_derivative(const CMatrix& weight, const CMatrix& channel, const CMatrix& v,
                                    const CMatrix& c, const CMatrix& dv, const CMatrix& dc);

/// Samples random pairs (V1, C1), (V2, C2) with C positive definite and a
/// random theta, returns the largest observed
///   l(theta p1 + (1 - theta) p2) - theta l(p1) - (1 - theta) l(p2).
/// Non-positive values certify convexity on the samples.
double convexity_probe(const CMatrix& weight, const CMatrix& channel, Eigen::Index streams, int trials,
                       RandomStream& rng);

}  // namespace hetsca
