#include "hetsca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "hetsca/errors.hpp"

namespace hetsca::linalg {

namespace {

std::string shape(const CMatrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

}  // namespace

CMatrix HpdFactor::reconstruct() const { return lower_ * lower_.adjoint(); }

HpdFactor hpd_factorize(const CMatrix& a, double jitter) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw Error(Errc::DimensionMismatch, "hpd_factorize needs a nonempty square matrix, got " + shape(a));
  }
  if (!all_finite(a)) {
    throw Error(Errc::NotPositiveDefinite, "matrix has non-finite entries");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.adjoint()).cwiseAbs().maxCoeff();
  if (asym > kHermitianTol * scale) {
    throw Error(Errc::NotHermitian, "asymmetry " + std::to_string(asym));
  }
  CMatrix shifted = hermitian_part(a);
  if (jitter > 0.0) shifted.diagonal().array() += jitter;

  Eigen::LLT<CMatrix> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::NotPositiveDefinite, "Cholesky pivot <= 0");
  }
  CMatrix lower = llt.matrixL();
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    const double d = lower(i, i).real();
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw Error(Errc::NotPositiveDefinite, "Cholesky pivot <= 0");
    }
  }
  return HpdFactor(std::move(lower));
}

CMatrix hpd_solve(const HpdFactor& f, const CMatrix& b) {
  if (b.rows() != f.dim()) {
    throw Error(Errc::DimensionMismatch,
                "factor is " + std::to_string(f.dim()) + " but rhs is " + shape(b));
  }
  const auto lower = f.lower().triangularView<Eigen::Lower>();
  CMatrix y = lower.solve(b);
  return f.lower().adjoint().triangularView<Eigen::Upper>().solve(y);
}

CMatrix lower_solve(const HpdFactor& f, const CMatrix& b) {
  if (b.rows() != f.dim()) {
    throw Error(Errc::DimensionMismatch,
                "factor is " + std::to_string(f.dim()) + " but rhs is " + shape(b));
  }
  return f.lower().triangularView<Eigen::Lower>().solve(b);
}

CMatrix hpd_inverse(const HpdFactor& f) {
  return hermitian_part(hpd_solve(f, CMatrix::Identity(f.dim(), f.dim())));
}

double logdet_hpd(const HpdFactor& f) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < f.dim(); ++i) acc += std::log(f.lower()(i, i).real());
  return 2.0 * acc;
}

Svd svd(const CMatrix& a) {
  const Eigen::Index r = std::min(a.rows(), a.cols());
  if (r == 0) {
    return {CMatrix(a.rows(), 0), RVector(0), CMatrix(a.cols(), 0)};
  }
  Eigen::JacobiSVD<CMatrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success || !solver.singularValues().allFinite()) {
    throw Error(Errc::ConvergenceFailure, "SVD did not converge for " + shape(a));
  }
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

CMatrix null_space_basis(const CMatrix& a, double rank_tol) {
  if (!(rank_tol > 0.0)) {
    throw Error(Errc::InvalidArgument, "rank_tol must be positive");
  }
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) return CMatrix::Identity(n, n);

  Eigen::JacobiSVD<CMatrix> solver(a, Eigen::ComputeFullV);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::ConvergenceFailure, "SVD did not converge for " + shape(a));
  }
  const RVector& s = solver.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (smax > 0.0 && s(i) > rank_tol * smax) ++rank;
  }
  if (rank == n) {
    throw Error(Errc::EmptyNullSpace, shape(a) + " has full column rank");
  }
  return solver.matrixV().rightCols(n - rank);
}

PsdSpectrum psd_spectrum(const CMatrix& a) {
  if (a.rows() != a.cols()) {
    throw Error(Errc::DimensionMismatch, "psd_spectrum needs a square matrix, got " + shape(a));
  }
  Svd d = svd(hermitian_part(a));
  return {std::move(d.left), std::move(d.singular_values)};
}

CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

double real_inner(const CMatrix& a, const CMatrix& b) {
  return (a.conjugate().cwiseProduct(b)).sum().real();
}

bool all_finite(const CMatrix& a) {
  return a.real().allFinite() && a.imag().allFinite();
}

}  // namespace hetsca::linalg
