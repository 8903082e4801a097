#include "hetsca/surrogate.hpp"

#include <algorithm>
#include <limits>

#include "hetsca/errors.hpp"

namespace hetsca {

SurrogateModel build_surrogate(const ChannelSet& ch, const PrecoderSet& expansion, const std::vector<double>& beta) {
  check_shapes(ch, expansion);
  if (beta.size() != ch.num_cells()) throw Error(Errc::ShapeMismatch, "beta needs one entry per cell");
  for (double b : beta)
    if (!(b >= 0.0)) throw Error(Errc::InvalidArgument, "beta must be nonnegative");

  SurrogateModel model;
  model.expansion_ = expansion;
  model.beta_ = beta;
  model.states_.reserve(ch.num_users());
  for (std::size_t u = 0; u < ch.num_users(); ++u) model.states_.push_back(receiver_state(ch, expansion, u));

  // c_j U_j E_j^{-1} U_j^H, shared by every cell's curvature.
  std::vector<CMatrix> weighted(ch.num_users());
  for (std::size_t j = 0; j < ch.num_users(); ++j) {
    const auto& s = model.states_[j];
    weighted[j] = linalg::hermitian_part(s.derivative * s.receiver * s.mmse_inverse * s.receiver.adjoint());
  }

  model.curvature_.resize(ch.num_cells());
  for (std::size_t k = 0; k < ch.num_cells(); ++k) {
    const Eigen::Index dim = ch.tx_dim(k);
    CMatrix j_k = beta[k] * CMatrix::Identity(dim, dim);
    for (std::size_t j = 0; j < ch.num_users(); ++j) {
      const CMatrix& h = ch.stacked(j, k);
      j_k.noalias() += h.adjoint() * weighted[j] * h;
    }
    model.curvature_[k] = linalg::hermitian_part(j_k);
  }

  model.linear_.resize(ch.num_users());
  model.constant_.resize(ch.num_users());
  model.utility_ = 0.0;
  for (std::size_t u = 0; u < ch.num_users(); ++u) {
    const std::size_t k = ch.cell_of(u);
    const auto& s = model.states_[u];
    model.linear_[u] = s.derivative * ch.stacked(u, k).adjoint() * s.receiver * s.mmse_inverse + beta[k] * expansion[u];
    const CMatrix& x = expansion[u];
    const double varying = 2.0 * linalg::real_inner(model.linear_[u], x) - linalg::real_inner(x, model.curvature_[k] * x);
    model.constant_[u] = s.utility - varying;
    model.utility_ += s.utility;
  }
  return model;
}

double eval_block_bound(const SurrogateModel& model, const ChannelSet& ch, std::size_t user, const CMatrix& x) {
  const CMatrix& s = model.linear(user);
  if (x.rows() != s.rows() || x.cols() != s.cols()) throw Error(Errc::ShapeMismatch, "block shape mismatch");
  const CMatrix& j = model.curvature(ch.cell_of(user));
  return model.constant(user) + 2.0 * linalg::real_inner(s, x) - linalg::real_inner(x, j * x);
}

double eval_total_bound(const SurrogateModel& model, const ChannelSet& ch, const PrecoderSet& v,
                        const BlockWeights& gamma) {
  check_shapes(ch, v);
  double acc = 0.0;
  for (std::size_t u = 0; u < ch.num_users(); ++u) acc += eval_block_bound(model, ch, u, v[u]);
  return acc - penalty(ch, v, gamma);
}

CMatrix block_bound_gradient(const SurrogateModel& model, const ChannelSet& ch, std::size_t user, const CMatrix& x) {
  return 2.0 * (model.linear(user) - model.curvature(ch.cell_of(user)) * x);
}

double eval_first_stage_bound(const ChannelSet& ch, const PrecoderSet& v, const PrecoderSet& expansion,
                              const std::vector<double>& beta) {
  check_shapes(ch, v);
  check_shapes(ch, expansion);
  if (beta.size() != ch.num_cells()) throw Error(Errc::ShapeMismatch, "beta needs one entry per cell");
  double acc = 0.0;
  for (std::size_t u = 0; u < ch.num_users(); ++u) {
    const auto s = receiver_state(ch, expansion, u);
    const CMatrix e = mmse_matrix(ch, v, u);
    const double linear = (s.mmse_inverse * (e - s.mmse)).trace().real();
    acc += s.utility - s.derivative * linear - beta[ch.cell_of(u)] * (v[u] - expansion[u]).squaredNorm();
  }
  return acc;
}

double matrix_fractional(const CMatrix& weight, const CMatrix& channel, const CMatrix& v, const CMatrix& c) {
  const auto wf = linalg::hpd_factorize(weight);
  const auto cf = linalg::hpd_factorize(c);
  const CMatrix g = linalg::lower_solve(cf, channel * v);
  return (linalg::hpd_solve(wf, g.adjoint() * g)).trace().real();
}

double matrix_fractional_derivative(const CMatrix& weight, const CMatrix& channel, const CMatrix& v,
                                    const CMatrix& c, const CMatrix& dv, const CMatrix& dc) {
  const auto wf = linalg::hpd_factorize(weight);
  const auto cf = linalg::hpd_factorize(c);
  const CMatrix hv = channel * v;
  const CMatrix hd = channel * dv;
  const CMatrix cinv_hv = linalg::hpd_solve(cf, hv);
  const CMatrix first = linalg::hpd_solve(wf, hd.adjoint() * cinv_hv);
  const CMatrix second = linalg::hpd_solve(wf, cinv_hv.adjoint() * hd);
  const CMatrix third = linalg::hpd_solve(wf, cinv_hv.adjoint() * dc * cinv_hv);
  return (first.trace() + second.trace() - third.trace()).real();
}

double convexity_probe(const CMatrix& weight, const CMatrix& channel, Eigen::Index streams, int trials,
                       RandomStream& rng) {
  const Eigen::Index n = channel.rows();
  const Eigen::Index m = channel.cols();
  auto random_hpd = [&] {
    const CMatrix g = rng.complex_gaussian(n, n, 0.5);
    return CMatrix(g * g.adjoint() + 0.1 * CMatrix::Identity(n, n));
  };
  double worst = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const CMatrix v1 = rng.complex_gaussian(m, streams, 0.5);
    const CMatrix v2 = rng.complex_gaussian(m, streams, 0.5);
    const CMatrix c1 = random_hpd();
    const CMatrix c2 = random_hpd();
    const double theta = rng.uniform();
    const double mixed =
        matrix_fractional(weight, channel, theta * v1 + (1 - theta) * v2, theta * c1 + (1 - theta) * c2);
    const double chord =
        theta * matrix_fractional(weight, channel, v1, c1) + (1 - theta) * matrix_fractional(weight, channel, v2, c2);
    worst = std::max(worst, mixed - chord);
  }
  return worst;
}

}  // namespace hetsca
