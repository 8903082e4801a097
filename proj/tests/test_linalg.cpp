#include <cmath>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <hetsca/errors.hpp>
#include <hetsca/linalg.hpp>
#include <hetsca/random.hpp>

#include "oracles.hpp"

using namespace hetsca;

namespace {

CMatrix diag(std::initializer_list<double> d) {
  CMatrix m = CMatrix::Zero(Eigen::Index(d.size()), Eigen::Index(d.size()));
  Eigen::Index i = 0;
  for (double x : d) m(i, i) = x, ++i;
  return m;
}

double eigen_logdet(const CMatrix& a) {
  const Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().array().log().sum();
}

}  // namespace

TEST(HpdFactorize, IdentityFactorIsIdentity) {
  const auto f = linalg::hpd_factorize(CMatrix::Identity(2, 2));
  EXPECT_LT((f.lower() - CMatrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(HpdFactorize, DiagonalFactorIsSquareRoot) {
  const auto f = linalg::hpd_factorize(diag({4, 9}));
  EXPECT_LT((f.lower() - diag({2, 3})).norm(), 1e-15);
}

TEST(HpdFactorize, ReconstructsRandomHpd) {
  RandomStream rng(11, 0);
  for (int t = 0; t < 20; ++t) {
    const CMatrix a = oracle::random_hpd(rng, 3);
    const auto f = linalg::hpd_factorize(a);
    EXPECT_LE((f.reconstruct() - a).norm() / a.norm(), 1e-10);
    for (Eigen::Index i = 0; i < 3; ++i) {
      EXPECT_GT(f.lower()(i, i).real(), 0.0);
      EXPECT_EQ(f.lower()(i, i).imag(), 0.0);
    }
  }
}

TEST(HpdFactorize, RejectsAsymmetric) {
  CMatrix a = CMatrix::Identity(2, 2);
  a(0, 1) = 1e-6;
  try {
    (void)linalg::hpd_factorize(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotHermitian);
  }
}

TEST(HpdFactorize, RejectsIndefiniteUnlessJittered) {
  const CMatrix a = diag({1, 0});
  try {
    (void)linalg::hpd_factorize(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotPositiveDefinite);
  }
  const auto f = linalg::hpd_factorize(a, 1e-6);
  EXPECT_NEAR(f.lower()(1, 1).real(), 1e-3, 1e-12);
}

TEST(HpdSolve, IdentityAndScalar) {
  RandomStream rng(2, 0);
  const CMatrix b = rng.complex_gaussian(3, 2, 1.0);
  EXPECT_LT((linalg::hpd_solve(linalg::hpd_factorize(CMatrix::Identity(3, 3)), b) - b).norm(), 1e-15);
  CMatrix six(1, 1);
  six(0, 0) = 6.0;
  EXPECT_NEAR(linalg::hpd_solve(linalg::hpd_factorize(diag({2})), six)(0, 0).real(), 3.0, 1e-15);
}

TEST(HpdSolve, RelativeResidual) {
  RandomStream rng(3, 0);
  for (int t = 0; t < 20; ++t) {
    const CMatrix a = oracle::random_hpd(rng, 4);
    const CMatrix b = rng.complex_gaussian(4, 3, 1.0);
    const CMatrix x = linalg::hpd_solve(linalg::hpd_factorize(a), b);
    EXPECT_LE((a * x - b).norm() / b.norm(), 1e-9);
  }
}

TEST(HpdSolve, DimensionMismatch) {
  const auto f = linalg::hpd_factorize(CMatrix::Identity(2, 2));
  try {
    (void)linalg::hpd_solve(f, CMatrix::Zero(3, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(HpdSolve, SelfSolveGivesIdentity) {
  RandomStream rng(4, 0);
  for (int t = 0; t < 20; ++t) {
    const CMatrix a = oracle::random_hpd(rng, 4, 0.5);
    EXPECT_LE((linalg::hpd_solve(linalg::hpd_factorize(a), a) - CMatrix::Identity(4, 4)).norm(), 1e-9);
  }
}

TEST(LogdetHpd, KnownValues) {
  EXPECT_NEAR(linalg::logdet_hpd(linalg::hpd_factorize(CMatrix::Identity(3, 3))), 0.0, 1e-15);
  EXPECT_NEAR(linalg::logdet_hpd(linalg::hpd_factorize(diag({2, 3}))), 1.791759469228055, 1e-12);
}

TEST(LogdetHpd, MatchesEigenvalueOracle) {
  RandomStream rng(5, 0);
  for (int t = 0; t < 20; ++t) {
    const CMatrix a = oracle::random_hpd(rng, 4);
    EXPECT_NEAR(linalg::logdet_hpd(linalg::hpd_factorize(a)), eigen_logdet(a), 1e-10);
  }
}

TEST(LogdetHpd, InverseCancels) {
  RandomStream rng(6, 0);
  for (int t = 0; t < 20; ++t) {
    const CMatrix a = oracle::random_hpd(rng, 4, 0.3);
    const auto f = linalg::hpd_factorize(a);
    const CMatrix inv = linalg::hpd_inverse(f);
    EXPECT_NEAR(linalg::logdet_hpd(f) + linalg::logdet_hpd(linalg::hpd_factorize(inv)), 0.0, 1e-8);
  }
}

TEST(Svd, SimpleSpectra) {
  auto s = linalg::svd(CMatrix::Identity(2, 2));
  EXPECT_NEAR(s.singular_values(0), 1.0, 1e-15);
  EXPECT_NEAR(s.singular_values(1), 1.0, 1e-15);
  CMatrix nil = CMatrix::Zero(2, 2);
  nil(0, 1) = 1.0;
  s = linalg::svd(nil);
  EXPECT_NEAR(s.singular_values(0), 1.0, 1e-15);
  EXPECT_NEAR(s.singular_values(1), 0.0, 1e-15);
}

TEST(Svd, ReconstructsAndIsOrthonormal) {
  RandomStream rng(7, 0);
  for (int t = 0; t < 20; ++t) {
    const CMatrix a = rng.complex_gaussian(3, 5, 0.5);
    const auto s = linalg::svd(a);
    const CMatrix rebuilt = s.left * s.singular_values.cast<Complex>().asDiagonal() * s.right.adjoint();
    EXPECT_LE((rebuilt - a).norm(), 1e-10);
    for (Eigen::Index i = 1; i < s.singular_values.size(); ++i) {
      EXPECT_GE(s.singular_values(i - 1), s.singular_values(i));
    }
    EXPECT_LE((s.left.adjoint() * s.left - CMatrix::Identity(3, 3)).norm(), 1e-10);
    EXPECT_LE((s.right.adjoint() * s.right - CMatrix::Identity(3, 3)).norm(), 1e-10);
  }
}

TEST(NullSpaceBasis, ZeroMatrixIsAllNull) {
  const CMatrix a = CMatrix::Zero(1, 2);
  const CMatrix r = linalg::null_space_basis(a);
  EXPECT_EQ(r.cols(), 2);
  EXPECT_LE((a * r).norm(), 1e-15);
  EXPECT_LE((r.adjoint() * r - CMatrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(NullSpaceBasis, HandNullSpace) {
  CMatrix a(1, 2);
  a << 1.0, 0.0;
  const CMatrix r = linalg::null_space_basis(a);
  ASSERT_EQ(r.cols(), 1);
  EXPECT_LE((a * r).norm(), 1e-15);
  EXPECT_NEAR(std::abs(r(1, 0)), 1.0, 1e-12);
}

TEST(NullSpaceBasis, RandomFullRowRank) {
  RandomStream rng(8, 0);
  for (int t = 0; t < 20; ++t) {
    const CMatrix a = rng.complex_gaussian(2, 4, 0.5);
    const CMatrix r = linalg::null_space_basis(a);
    ASSERT_EQ(r.rows(), 4);
    ASSERT_EQ(r.cols(), 2);
    EXPECT_LE((a * r).norm(), 1e-9);
    EXPECT_LE((r.adjoint() * r - CMatrix::Identity(2, 2)).norm(), 1e-9);
  }
}

TEST(NullSpaceBasis, FullColumnRankThrows) {
  try {
    (void)linalg::null_space_basis(CMatrix::Identity(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyNullSpace);
  }
}

TEST(NullSpaceBasis, RankTolMustBePositive) {
  EXPECT_THROW((void)linalg::null_space_basis(CMatrix::Zero(1, 2), 0.0), Error);
}
