#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "hetsca/rate.hpp"
#include "hetsca/surrogate.hpp"

namespace hetsca {

struct BisectionSpec {
  double lambda_hi = 1.0;     // first upper bracket, doubled as needed
  double tol_power = 1e-8;    // relative; used for the post-check only
  double tol_lambda = 0.0;    // absolute floor on the final bracket width
  int max_iters = 200;
  int max_doublings = 60;
};

struct BisectionResult {
  double lambda = 0.0;
  double power = 0.0;
  double budget = 0.0;
  int iterations = 0;

  /// |power - budget| / budget when the constraint is active, and the
  /// relative excess (clamped at 0) when lambda = 0.
  double relative_gap() const;
};

/// Smallest multiplier lambda >= 0 with power(lambda) <= budget, where
/// power is nonincreasing. lambda = 0 when power(0) <= budget. The bracket
/// is refined until its width reaches machine precision relative to its
/// upper end, and the upper end is returned so the result is feasible.
/// Throws BracketFailure and NonMonotone.
BisectionResult bisect_multiplier(const std::function<double(double)>& power_of_lambda, double budget,
                                  const BisectionSpec& spec = {});

/// Diagnostics from one solver call.
struct SolverStats {
  int block_updates = 0;
  int rounds = 0;
  std::vector<BisectionResult> bisections;
  /// Largest relative first-order residual of any block solve.
  double stationarity = 0.0;
  /// Largest ||gradient at zero||_F - gamma over blocks returned as exact
  /// zeros; -inf when there were none.
  double zero_block_certificate = -std::numeric_limits<double>::infinity();
  /// Cell subproblem value after every block update (exact ComP solves).
  std::vector<double> trajectory;

  void merge(const SolverStats& other);
  /// max(stationarity, largest bisection gap).
  double kkt_residual() const;
};

/// Closed-form sum-power update of every user of `cell`:
///   V_u = (J + lambda I)^{-1} S_u
/// with lambda from bisection on the cell budget. Writes into `v`.
SolverStats ibc_update(const SurrogateModel& model, const ChannelSet& ch, std::size_t cell, PrecoderSet& v);

/// Orthonormal bases of the null spaces of the other in-cell users'
/// stacked channels, one per user of the cell.
struct ZfBasis {
  std::size_t cell = 0;
  std::vector<CMatrix> bases;
};

/// Throws InfeasibleZF when a reduced dimension would be empty.
ZfBasis zf_basis(const ChannelSet& ch, std::size_t cell);

/// V_u = R_u W_u with W_u = (R_u^H J R_u + lambda I)^{-1} R_u^H S_u.
SolverStats zf_update(const SurrogateModel& model, const ChannelSet& ch, const ZfBasis& basis, PrecoderSet& v);

/// Value of the cell's subproblem: sum over its users of g_u(V_u) minus
/// their group-sparsity penalty.
double cell_subproblem_value(const SurrogateModel& model, const ChannelSet& ch, std::size_t cell,
                             const PrecoderSet& v, const BlockWeights& gamma);

/// Optimal update of the blocks transmitted by BS `bs` of `cell`, holding
/// the other BSs' blocks fixed, under that BS's power budget. Blocks with
/// positive gamma are solved as group-LASSO problems; unserved users keep
/// their (zero) blocks.
SolverStats comp_block_update(const SurrogateModel& model, const ChannelSet& ch, std::size_t cell, std::size_t bs,
                              PrecoderSet& v, const ServingPattern& serving, const BlockWeights& gamma);

inline constexpr int kMaxInnerRounds = 100000;

/// Cyclic block updates until one full round raises the cell subproblem by
/// at most inner_tol relative. Throws AscentViolation if a block update
/// lowers the subproblem value.
SolverStats comp_exact_solve(const SurrogateModel& model, const ChannelSet& ch, std::size_t cell, PrecoderSet& v,
                             const ServingPattern& serving, const BlockWeights& gamma, double inner_tol,
                             int max_rounds = kMaxInnerRounds);

/// Exactly one block update per BS in ascending order. Requires beta > 0.
SolverStats comp_single_pass(const SurrogateModel& model, const ChannelSet& ch, std::size_t cell, PrecoderSet& v,
                             const ServingPattern& serving, const BlockWeights& gamma);

/// Solution of max 2 Re Tr(b^H X) - Tr(X^H (A + shift I) X) - gamma ||X||_F
/// with A = Q diag(eigenvalues) Q^H and rotated = Q^H b. Exposed for tests.
struct GroupLassoBlock {
  CMatrix x;           // in the rotated basis
  bool zero = false;
  bool unbounded = false;
};
GroupLassoBlock group_lasso_rotated(const RVector& eigenvalues, const CMatrix& rotated, double shift, double gamma);

}  // namespace hetsca
