#pragma once

#include <complex>

#include <Eigen/Core>

namespace hetsca {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

namespace linalg {

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kDefaultRankTol = 1e-10;

/// Lower-triangular Cholesky factor F of a Hermitian positive-definite
/// matrix A = F F^H. Every inverse and determinant of C, E and friends goes
/// through this type.
class HpdFactor {
 public:
  Eigen::Index dim() const noexcept { return lower_.rows(); }
  const CMatrix& lower() const noexcept { return lower_; }

  /// F F^H.
  CMatrix reconstruct() const;

 private:
  explicit HpdFactor(CMatrix lower) : lower_(std::move(lower)) {}
  friend HpdFactor hpd_factorize(const CMatrix& a, double jitter);

  CMatrix lower_;
};

/// Factorizes A + jitter*I. Throws NotHermitian when A deviates from its
/// adjoint by more than 1e-12 (relative to max(1, max|A_ij|)) and
/// NotPositiveDefinite when a pivot is not strictly positive.
HpdFactor hpd_factorize(const CMatrix& a, double jitter = 0.0);

/// Solves (F F^H) X = B.
CMatrix hpd_solve(const HpdFactor& f, const CMatrix& b);

/// F^{-1} B. Useful for forming B^H A^{-1} B = (F^{-1}B)^H (F^{-1}B).
CMatrix lower_solve(const HpdFactor& f, const CMatrix& b);

CMatrix hpd_inverse(const HpdFactor& f);

/// log|F F^H| = 2 sum log F_ii.
double logdet_hpd(const HpdFactor& f);

struct Svd {
  CMatrix left;            // m x r, orthonormal columns
  RVector singular_values; // r, nonincreasing
  CMatrix right;           // n x r, orthonormal columns
};

/// Thin SVD with r = min(m, n).
Svd svd(const CMatrix& a);

/// Orthonormal basis of the right null space of A. Singular values below
/// rank_tol * max singular value count as zero. A matrix with zero rows has
/// the identity as its null-space basis. Throws EmptyNullSpace when A has
/// full column rank.
CMatrix null_space_basis(const CMatrix& a, double rank_tol = kDefaultRankTol);

/// Eigenpairs of a Hermitian positive semidefinite matrix, taken from its
/// SVD (for PSD input the left singular vectors are eigenvectors).
struct PsdSpectrum {
  CMatrix vectors;
  RVector values;
};
PsdSpectrum psd_spectrum(const CMatrix& a);

/// (A + A^H) / 2.
CMatrix hermitian_part(const CMatrix& a);

/// Re Tr(A^H B): the real inner product on complex matrices.
double real_inner(const CMatrix& a, const CMatrix& b);

bool all_finite(const CMatrix& a);

}  // namespace linalg
}  // namespace hetsca
