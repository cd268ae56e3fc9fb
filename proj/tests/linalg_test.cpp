#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "opacity/linalg.hpp"
#include "opacity/system.hpp"
#include "test_support.hpp"

namespace opacity {
namespace {

using testing::example2;
using testing::kExample2Point;
using testing::random_complex;
using testing::random_real;

TEST(PiTransform, RealInputDoublesSingularValues) {
  std::mt19937_64 rng(1);
  const RealMatrix M = random_real(rng, 4, 3);
  const RealVector sv = singular_values(M);
  for (double gamma : {1.0, 0.37, 1e-3}) {
    const RealMatrix P = pi_transform(gamma, M.cast<Complex>());
    const RealVector pv = singular_values(P);
    ASSERT_EQ(pv.size(), 2 * sv.size());
    for (Index i = 0; i < sv.size(); ++i) {
      EXPECT_NEAR(pv(2 * i), sv(i), 1e-12 * sv(0));
      EXPECT_NEAR(pv(2 * i + 1), sv(i), 1e-12 * sv(0));
    }
  }
  RealMatrix block = RealMatrix::Zero(8, 6);
  block.topLeftCorner(4, 3) = M;
  block.bottomRightCorner(4, 3) = M;
  EXPECT_TRUE(pi_transform(1.0, M.cast<Complex>()).isApprox(block));
}

TEST(PiTransform, ScalarImaginaryUnit) {
  ComplexMatrix M(1, 1);
  M(0, 0) = Complex(0.0, 1.0);
  RealMatrix expected(2, 2);
  expected << 0.0, -0.5, 2.0, 0.0;
  EXPECT_TRUE(pi_transform(0.5, M).isApprox(expected));
}

TEST(PiTransform, ConjugationKeepsSingularValues) {
  std::mt19937_64 rng(2);
  const ComplexMatrix M = random_complex(rng, 3, 2);
  const RealVector a = singular_values(pi_transform(0.3, M));
  const RealVector b = singular_values(pi_transform(0.3, M.conjugate()));
  EXPECT_TRUE(a.isApprox(b, 1e-12));
}

TEST(PiTransform, RejectsGammaOutsideUnitInterval) {
  const ComplexMatrix M = ComplexMatrix::Identity(2, 2);
  EXPECT_THROW(pi_transform(0.0, M), std::domain_error);
  EXPECT_THROW(pi_transform(-0.1, M), std::domain_error);
  EXPECT_THROW(pi_transform(1.5, M), std::domain_error);
}

TEST(Gsvd, IdentitySecondFactorGivesSingularValues) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix M = random_complex(rng, 5, 3);
    const GsvdResult g = gsvd_values(M, ComplexMatrix::Identity(3, 3));
    const RealVector sv = singular_values(M);
    ASSERT_EQ(g.values.size(), 3);
    EXPECT_EQ(g.infinite_count(), 0);
    for (Index i = 0; i < 3; ++i) EXPECT_NEAR(g.values(i), sv(i), 1e-12 * sv(0));
  }
}

TEST(Gsvd, EqualFactorsGiveOnes) {
  std::mt19937_64 rng(4);
  const RealMatrix M = random_real(rng, 3, 3);
  const GsvdResult g = gsvd_values(M, M);
  for (Index i = 0; i < g.values.size(); ++i) EXPECT_NEAR(g.values(i), 1.0, 1e-12);
}

TEST(Gsvd, MatchesSymmetricPencilEigenvalues) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const RealMatrix M = random_real(rng, 4, 2);
    const RealMatrix N = random_real(rng, 2, 2);
    Eigen::GeneralizedSelfAdjointEigenSolver<RealMatrix> ges(M.transpose() * M,
                                                             N.transpose() * N);
    RealVector oracle = ges.eigenvalues().cwiseSqrt();
    std::sort(oracle.data(), oracle.data() + oracle.size(), std::greater<>());
    const GsvdResult g = gsvd_values(M, N);
    ASSERT_EQ(g.values.size(), 2);
    for (Index i = 0; i < 2; ++i) EXPECT_NEAR(g.values(i), oracle(i), 1e-9 * oracle(0));
    // det(M^T M - sigma^2 N^T N) vanishes at every value.
    for (Index i = 0; i < 2; ++i) {
      const RealMatrix P = M.transpose() * M - g.values(i) * g.values(i) * N.transpose() * N;
      EXPECT_NEAR(P.determinant(), 0.0, 1e-8 * (M.transpose() * M).norm() * (M.transpose() * M).norm());
    }
  }
}

TEST(Gsvd, ValuesSortedAndNonnegative) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix M = random_complex(rng, 3, 4);
    ComplexMatrix N = random_complex(rng, 2, 4);
    const GsvdResult g = gsvd_values(M, N);
    for (Index i = 0; i < g.values.size(); ++i) {
      EXPECT_GE(g.values(i), 0.0);
      if (i > 0) EXPECT_GE(g.values(i - 1), g.values(i));
    }
    // N has a 2-dimensional kernel in C^4 on which M is generically nonzero.
    EXPECT_EQ(g.infinite_count(), 2);
  }
}

TEST(Gsvd, RejectsMismatchedColumns) {
  EXPECT_THROW(gsvd_values(RealMatrix::Ones(2, 3), RealMatrix::Ones(2, 2)),
               std::invalid_argument);
}

TEST(Nullspace, FullRankIsEmpty) {
  EXPECT_EQ(nullspace_basis(RealMatrix(RealMatrix::Identity(2, 2))).cols(), 0);
}

TEST(Nullspace, SingleRow) {
  RealMatrix M(1, 2);
  M << 1.0, 1.0;
  const RealMatrix Q = nullspace_basis(M);
  ASSERT_EQ(Q.cols(), 1);
  EXPECT_NEAR(std::abs(Q(0, 0)), 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(Q(0, 0), -Q(1, 0), 1e-14);
}

TEST(Nullspace, RandomRankDeficientProperties) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const ComplexMatrix M = random_complex(rng, 4, 2) * random_complex(rng, 2, 6);
    for (bool equilibrate : {false, true}) {
      const ComplexMatrix Q = nullspace_basis(M, NullspaceOptions{kRankTol, equilibrate});
      ASSERT_EQ(Q.cols(), 4);
      EXPECT_LE((M * Q).norm(), 1e-10 * M.norm());
      EXPECT_LE((Q.adjoint() * Q - ComplexMatrix::Identity(4, 4)).norm(), 1e-12);
    }
  }
}

TEST(Nullspace, Example2ComplementRows) {
  const ComplexMatrix L = lambda_pencil(example2(), kExample2Point);
  const std::vector<Index> beta{1, 3, 4};
  const ComplexMatrix Q = nullspace_basis(ComplexMatrix(L(beta, Eigen::all)));
  ASSERT_EQ(Q.cols(), 1);
  // Q2 restricted to the perturbable columns, compared up to a unit phase.
  const Complex a = Q(0, 0), b = Q(2, 0);
  const Complex pa(-0.0441, -0.3712), pb(0.7653, 0.3568);
  EXPECT_NEAR(std::abs(a), std::abs(pa), 1e-3);
  EXPECT_NEAR(std::abs(b), std::abs(pb), 1e-3);
  EXPECT_NEAR(std::abs(b / a - pb / pa), 0.0, 1e-2);
}

TEST(RealLiftSolve, RealIdentityDirection) {
  ComplexMatrix X(3, 1);
  X << Complex(1.0, 0.5), Complex(-2.0, 0.0), Complex(0.3, 1.0);
  const RealMatrix D = real_lift_solve(X, X);
  EXPECT_LE((D.cast<Complex>() * X - X).norm(), 1e-12);
  // Identity on span{Re X, Im X}: a projector.
  EXPECT_TRUE((D * D).isApprox(D, 1e-12));
}

TEST(RealLiftSolve, ZeroTargetGivesZero) {
  ComplexMatrix X(2, 1);
  X << Complex(1.0, 2.0), Complex(0.0, -1.0);
  EXPECT_NEAR(real_lift_solve(ComplexMatrix::Zero(3, 1), X).norm(), 0.0, 1e-15);
}

TEST(RealLiftSolve, ZeroDirectionThrows) {
  EXPECT_THROW(real_lift_solve(ComplexMatrix::Ones(2, 1), ComplexMatrix::Zero(2, 1)),
               std::domain_error);
}

TEST(RealLiftSolve, MatchesKroneckerLeastSquares) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Index q = 3, r = 2 + trial % 3;
    // Feasible by construction: Y = D0 X for a real D0.
    const RealMatrix D0 = random_real(rng, q, r);
    const ComplexMatrix X = random_complex(rng, r, 1);
    const ComplexMatrix Y = D0.cast<Complex>() * X;
    // Oracle: vec(D) from [Re X^T (x) I; Im X^T (x) I] vec D = [Re Y; Im Y].
    RealMatrix K = RealMatrix::Zero(2 * q, q * r);
    RealVector rhs(2 * q);
    for (Index j = 0; j < r; ++j) {
      K.block(0, j * q, q, q) = X(j, 0).real() * RealMatrix::Identity(q, q);
      K.block(q, j * q, q, q) = X(j, 0).imag() * RealMatrix::Identity(q, q);
    }
    rhs << Y.real(), Y.imag();
    const RealVector vec = K.completeOrthogonalDecomposition().solve(rhs);
    ASSERT_LE((K * vec - rhs).norm(), 1e-10 * rhs.norm());
    const RealMatrix oracle = Eigen::Map<const RealMatrix>(vec.data(), q, r);

    const RealMatrix D = real_lift_solve(Y, X);
    EXPECT_LE((D.cast<Complex>() * X - Y).norm(), 1e-10 * Y.norm());
    // Minimum-norm solutions agree.
    EXPECT_LE((D - oracle).norm(), 1e-9 * oracle.norm());
  }
}

TEST(RealLiftSolve, Example2Perturbation) {
  const ComplexMatrix L = lambda_pencil(example2(), kExample2Point);
  const ComplexMatrix Q = nullspace_basis(ComplexMatrix(L({1, 3, 4}, Eigen::all)));
  const ComplexMatrix Y = L({0, 2}, Eigen::all) * Q;
  const ComplexMatrix X = Q({0, 2}, Eigen::all);
  const RealMatrix D = real_lift_solve(Y, X);
  RealMatrix expected(2, 2);
  expected << -0.0341, -0.2048, 0.0682, -0.0307;
  EXPECT_LE((D - expected).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_NEAR(spectral_norm(D), 0.2086, 5e-4);
}

TEST(RankWithTol, Basics) {
  EXPECT_EQ(rank_with_tol(RealMatrix(RealMatrix::Identity(3, 3)), 1e-10), 3);
  EXPECT_EQ(rank_with_tol(RealMatrix(RealMatrix::Zero(3, 2))), 0);
  EXPECT_THROW(rank_with_tol(RealMatrix(RealMatrix::Identity(2, 2)), 0.0), std::domain_error);
}

TEST(RankWithTol, Example2PerturbedPencilDropsRank) {
  RealMatrix delta = RealMatrix::Zero(5, 4);
  delta(0, 0) = -0.0341;
  delta(0, 2) = -0.2048;
  delta(2, 0) = 0.0682;
  delta(2, 2) = -0.0307;
  // Rounded entries: the rank drop shows at the rounding level only.
  const ComplexMatrix L = lambda_pencil(apply_perturbation(example2(), delta), kExample2Point);
  EXPECT_EQ(rank_with_tol(L, 1e-3), 3);
  EXPECT_EQ(rank_with_tol(lambda_pencil(example2(), kExample2Point), 1e-8), 4);
}

TEST(SingularValues, GradedMatrixKeepsSmallValues) {
  // diag(1e150, 1, 1e-150) rotated by exact permutations.
  RealMatrix M = RealMatrix::Zero(3, 3);
  M(0, 1) = 1e150;
  M(1, 2) = 1.0;
  M(2, 0) = 1e-150;
  const RealVector sv = singular_values(M);
  EXPECT_DOUBLE_EQ(sv(0), 1e150);
  EXPECT_DOUBLE_EQ(sv(1), 1.0);
  EXPECT_DOUBLE_EQ(sv(2), 1e-150);
}

TEST(SingularValues, MatchesEigenOnRandomComplex) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix M = random_complex(rng, 4, 6);
    const RealVector oracle = Eigen::JacobiSVD<ComplexMatrix>(M).singularValues();
    const RealVector sv = singular_values(M);
    ASSERT_EQ(sv.size(), oracle.size());
    EXPECT_TRUE(sv.isApprox(oracle, 1e-12));
  }
}

TEST(SingularValues, RejectsNonFinite) {
  RealMatrix M = RealMatrix::Ones(2, 2);
  M(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(singular_values(M), std::domain_error);
}

TEST(Norms, KyFanBetweenSpectralAndNuclear) {
  std::mt19937_64 rng(10);
  const RealMatrix Z = random_real(rng, 5, 4);
  const RealVector sv = singular_values(Z);
  EXPECT_NEAR(ky_fan(Z, 1), spectral_norm(Z), 1e-12);
  EXPECT_NEAR(ky_fan(Z, 4), nuclear_norm(Z), 1e-12);
  EXPECT_NEAR(ky_fan(Z, 2), sv(0) + sv(1), 1e-12);
  EXPECT_THROW(ky_fan(Z, 5), std::out_of_range);
}

TEST(Ruiz, PowerOfTwoScalesBalanceGradedMatrix) {
  RealMatrix M(2, 2);
  M << 1e8, 1.0, 1.0, 1e-8;
  RealVector r, c;
  ruiz_equilibrate<double>(M, r, c);
  for (Index i = 0; i < 2; ++i) {
    int e;
    EXPECT_EQ(std::frexp(r(i), &e), 0.5);
    EXPECT_EQ(std::frexp(c(i), &e), 0.5);
  }
  const RealMatrix S = r.asDiagonal() * M * c.asDiagonal();
  EXPECT_LE(S.cwiseAbs().maxCoeff(), 4.0);
  EXPECT_GE(S.rowwise().lpNorm<Eigen::Infinity>().minCoeff(), 0.25);
}

}  // namespace
}  // namespace opacity
