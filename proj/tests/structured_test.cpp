#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "opacity/structured.hpp"
#include "test_support.hpp"

namespace opacity {
namespace {

using testing::example2;
using testing::four_cell;
using testing::kExample2Point;
using testing::two_cell;

// Rows 2..4 of the pencil have determinant -(1 - s), so only s = 1 can carry
// a zero; there the kernel is (0, 1, -1) and the row-1 residual is
// a12 - b1 = 0.2.
StateSpaceSystem planted() {
  RealMatrix A(2, 2), B(2, 1), C(2, 2), D(2, 1);
  A << 0.3, 0.7, 0.0, 1.0;
  B << 0.5, 0.0;
  C << 1.0, 0.0, 0.0, 1.0;
  D << 0.0, 1.0;
  return StateSpaceSystem(A, B, C, D);
}

StructuredPattern planted_pattern() {
  return StructuredPattern::from_indices(4, 3, {0}, {0, 1});
}

double sigma_min_ratio(const ComplexMatrix& M) {
  const RealVector sv = singular_values(M);
  return sv(sv.size() - 1) / sv(0);
}

TEST(Existence, Example2FourCellFeasible) {
  const ExistenceResult r = existence_check(example2(), four_cell(), kExample2Point);
  EXPECT_TRUE(r.feasible());
  EXPECT_GE(r.nullity, 1);
}

TEST(Existence, Example2TwoCellGenericallyInfeasible) {
  for (Complex s : {Complex(0.3, 0.2), Complex(-1.0, 2.0), kExample2Point}) {
    EXPECT_EQ(existence_check(example2(), two_cell(), s).reason,
              Infeasibility::complement_full_rank);
  }
}

TEST(Existence, AllRowsSelectedAlwaysFeasible) {
  const StructuredPattern all(std::vector<bool>(5, true), std::vector<bool>(4, true));
  for (Complex s : {Complex(0.0, 0.0), Complex(3.0, -1.0)}) {
    EXPECT_TRUE(existence_check(example2(), all, s).feasible());
  }
}

TEST(Existence, KernelMissingPerturbableColumns) {
  const StructuredPattern first_col = StructuredPattern::from_indices(4, 3, {0}, {0});
  EXPECT_EQ(existence_check(planted(), first_col, {1.0, 0.0}).reason,
            Infeasibility::no_perturbable_direction);
}

TEST(FiniteCandidates, Example2TwoCell) {
  std::vector<Complex> c = finite_candidate_set(example2(), two_cell());
  ASSERT_EQ(c.size(), 2u);
  std::sort(c.begin(), c.end(), [](Complex a, Complex b) { return a.imag() < b.imag(); });
  EXPECT_NEAR(c[0].real(), 0.8108, 1e-3);
  EXPECT_NEAR(c[0].imag(), -0.5367, 1e-3);
  EXPECT_NEAR(std::abs(c[1] - std::conj(c[0])), 0.0, 1e-10);
}

TEST(FiniteCandidates, PlantedZero) {
  const std::vector<Complex> c = finite_candidate_set(planted(), planted_pattern());
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(std::abs(c.front() - 1.0), 0.0, 1e-10);
}

TEST(MinNorm, Example2PublishedPoint) {
  const NormAtS r = min_norm_at_s(example2(), four_cell(), kExample2Point);
  EXPECT_FALSE(r.unbounded);
  EXPECT_NEAR(r.norm, 0.2086, 5e-4);
  EXPECT_GT(r.gamma, 0.0);
  EXPECT_LE(r.gamma, 1.0);
}

TEST(MinNorm, TwoCellAtCandidate) {
  // The rounded published point is off the finite set; use the computed one.
  for (const Complex& s : finite_candidate_set(example2(), two_cell())) {
    EXPECT_NEAR(std::abs(s - Complex(0.8108, std::copysign(0.5367, s.imag()))), 0.0, 1e-3);
    EXPECT_NEAR(min_norm_at_s(example2(), two_cell(), s).norm, 0.2097, 5e-4);
  }
}

TEST(MinNorm, PlantedExact) {
  const NormAtS r = min_norm_at_s(planted(), planted_pattern(), {1.0, 0.0});
  EXPECT_NEAR(r.norm, 0.2, 1e-10);
}

TEST(MinNorm, InfeasiblePointThrowsWithReason) {
  try {
    min_norm_at_s(example2(), two_cell(), {0.3, 0.2});
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.reason(), Infeasibility::complement_full_rank);
  }
}

TEST(MinNorm, ExistingZeroGivesZero) {
  const StructuredSolution sol = perturbation_at_s(example2(), four_cell(), kExample2Point);
  const StateSpaceSystem perturbed = apply_perturbation(example2(), sol.delta_full);
  const NormAtS r = min_norm_at_s(perturbed, four_cell(), sol.s_star);
  EXPECT_LE(r.norm, 1e-7);
}

// The returned value is a supremum over gamma.
TEST(MinNorm, DominatesRandomGammaSamples) {
  const StructuredProblem problem(example2(), four_cell());
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(1e-6, 1.0);
  for (Complex s : {kExample2Point, Complex(0.5, 0.9), Complex(-1.2, 0.4)}) {
    const double sup = problem.min_norm(s).norm;
    for (int k = 0; k < 50; ++k) {
      EXPECT_LE(problem.sigma_at(s, unit(rng)), sup * (1.0 + 1e-9)) << s;
    }
  }
}

TEST(Perturbation, Example2PublishedPoint) {
  const StructuredSolution sol = perturbation_at_s(example2(), four_cell(), kExample2Point);
  EXPECT_NEAR(sol.norm, 0.2086, 5e-4);
  RealMatrix expected(2, 2);
  expected << -0.0341, -0.2048, 0.0682, -0.0307;
  EXPECT_LE((sol.delta_r - expected).cwiseAbs().maxCoeff(), 1e-3) << sol.delta_r;
  EXPECT_NEAR(spectral_norm(sol.delta_r), sol.norm, 1e-10 * sol.norm);
  EXPECT_NEAR(spectral_norm(sol.delta_full), sol.norm, 1e-10 * sol.norm);
  EXPECT_GE(sol.witness_slack, -1e-8);
  const ComplexMatrix L = lambda_pencil(example2(), kExample2Point);
  EXPECT_LE(sigma_min_ratio(L - sol.delta_full.cast<Complex>()), 1e-8);
  EXPECT_EQ(reduce(sol.delta_full, four_cell()), sol.delta_r);
}

TEST(Perturbation, TwoCellPublishedEntries) {
  const std::vector<Complex> c = finite_candidate_set(example2(), two_cell());
  for (const Complex& s : c) {
    const StructuredSolution sol = perturbation_at_s(example2(), two_cell(), s);
    EXPECT_NEAR(sol.delta_full(0, 0), -0.0270, 1e-3);
    EXPECT_NEAR(sol.delta_full(0, 2), -0.2079, 1e-3);
    EXPECT_NEAR(sol.norm, 0.2097, 5e-4);
    EXPECT_EQ((sol.delta_full.array() != 0.0).count(), 2);
  }
}

// Random feasible points: the lift solution realizes the sup and drops rank.
TEST(Perturbation, RealizesMinNormAtRandomPoints) {
  const StructuredProblem problem(example2(), four_cell());
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  int checked = 0;
  for (int k = 0; k < 20; ++k) {
    const Complex s(coord(rng), coord(rng));
    const NormAtS r = problem.min_norm(s);
    if (r.unbounded) continue;
    const StructuredSolution sol = problem.perturbation(s);
    EXPECT_NEAR(sol.norm, r.norm, 1e-6 * r.norm) << s;
    const ComplexMatrix L = lambda_pencil(example2(), s);
    EXPECT_LE(sigma_min_ratio(L - sol.delta_full.cast<Complex>()), 1e-8) << s;
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(Approximation, Example2MatchesExact) {
  const StructuredProblem problem(example2(), four_cell());
  const double exact = problem.min_norm(kExample2Point).norm;
  const double approx =
      problem.approx_min_norm(kExample2Point, ApproxConfig::for_delta_M(problem.delta_M()));
  EXPECT_NEAR(approx, exact, 1e-4);
}

TEST(Approximation, EpsilonPolicy) {
  EXPECT_DOUBLE_EQ(epsilon_for(10.0), 1e-8);
  EXPECT_DOUBLE_EQ(ApproxConfig::for_delta_M(1e4).epsilon, 1e-20);
}

TEST(Approximation, OverflowingEpsilonThrows) {
  const StructuredProblem problem(example2(), four_cell());
  EXPECT_ANY_THROW(problem.approx_min_norm(kExample2Point, ApproxConfig{1e-320, 1.0}));
}

// Every reported root is a genuine root, and a dense sampling of the ray finds
// no sign change the search missed.
TEST(RayLevelSet, AgreesWithDenseSampling) {
  const StructuredProblem problem(example2(), four_cell());
  const double gamma = 1e-3;
  for (double theta : {0.2, 0.57, 2.0}) {
    for (double target : {0.25, 0.4}) {
      const std::vector<double> roots = problem.ray_level_set(theta, target, gamma);
      const Complex dir = std::polar(1.0, theta);
      for (double r : roots) {
        EXPECT_LE(std::abs(problem.sigma_at(r * dir, gamma) - target), 1e-6 * target)
            << theta << " " << target << " " << r;
      }
      EXPECT_TRUE(std::is_sorted(roots.begin(), roots.end()));
      const double r_max = 10.0 * (1.0 + 2.89);
      int crossings = 0;
      double prev = problem.sigma_at(0.0, gamma) - target;
      for (int k = 1; k <= 10000; ++k) {
        const double cur = problem.sigma_at(r_max * k / 10000.0 * dir, gamma) - target;
        if ((prev < 0.0) != (cur < 0.0)) ++crossings;
        prev = cur;
      }
      EXPECT_EQ(static_cast<int>(roots.size()), crossings) << theta << " " << target;
    }
  }
}

TEST(RayLevelSet, TargetAboveMaximumIsEmpty) {
  const StructuredProblem problem(example2(), four_cell());
  EXPECT_TRUE(problem.ray_level_set(0.57, 1e6, 1e-3).empty());
}

TEST(Solve, TwoCellFiniteRegime) {
  const StructuredSolution sol = solve_structured(example2(), two_cell());
  EXPECT_EQ(sol.regime, Regime::finite);
  EXPECT_NEAR(sol.s_star.real(), 0.8108, 1e-3);
  EXPECT_NEAR(std::abs(sol.s_star.imag()), 0.5367, 1e-3);
  EXPECT_NEAR(sol.norm, 0.2097, 5e-4);
  const ZeroSet z = invariant_zeros(apply_perturbation(example2(), sol.delta_full));
  EXPECT_FALSE(z.points.empty());
}

TEST(Solve, PlantedFiniteRegime) {
  const StructuredSolution sol = solve_structured(planted(), planted_pattern());
  EXPECT_EQ(sol.regime, Regime::finite);
  EXPECT_NEAR(std::abs(sol.s_star - 1.0), 0.0, 1e-10);
  EXPECT_NEAR(sol.norm, 0.2, 1e-10);
}

TEST(Solve, ExistingZeroNeedsNoPerturbation) {
  const StructuredSolution first = perturbation_at_s(example2(), four_cell(), kExample2Point);
  const StateSpaceSystem perturbed = apply_perturbation(example2(), first.delta_full);
  const StructuredSolution sol = solve_structured(perturbed, four_cell());
  EXPECT_EQ(sol.regime, Regime::existing_zero);
  EXPECT_EQ(sol.norm, 0.0);
  EXPECT_EQ(sol.delta_full, RealMatrix::Zero(5, 4));
  EXPECT_NEAR(std::abs(sol.s_star.real() - kExample2Point.real()), 0.0, 1e-6);
  EXPECT_NEAR(std::abs(sol.s_star.imag()), kExample2Point.imag(), 1e-6);
}

TEST(Solve, InfeasibleEverywhereThrows) {
  const StructuredPattern first_col = StructuredPattern::from_indices(4, 3, {0}, {0});
  EXPECT_THROW(solve_structured(planted(), first_col), InfeasibleError);
}

TEST(Surface, SinglePointAtPublishedOptimum) {
  const SurfaceRegion at{kExample2Point.real(), kExample2Point.real(),
                         kExample2Point.imag(), kExample2Point.imag()};
  const std::vector<SurfacePoint> pts = norm_surface(example2(), four_cell(), at, 1, 1);
  ASSERT_EQ(pts.size(), 1u);
  ASSERT_TRUE(pts.front().norm.has_value());
  EXPECT_NEAR(*pts.front().norm, 0.2086, 5e-4);
}

// Real data: the problem at s and at conj(s) are the same problem.
TEST(Surface, ConjugationSymmetricAndBoundedBelow) {
  const SurfaceRegion region{-2.0, 2.0, -1.5, 1.5};
  const Index nre = 9, nim = 7;
  const std::vector<SurfacePoint> pts = norm_surface(example2(), four_cell(), region, nre, nim);
  ASSERT_EQ(pts.size(), static_cast<size_t>(nre * nim));
  auto at = [&](Index i, Index j) -> const SurfacePoint& {
    for (const SurfacePoint& p : pts) {
      if (std::abs(p.s - Complex(-2.0 + 0.5 * i, -1.5 + 0.5 * j)) < 1e-12) return p;
    }
    throw std::logic_error("lattice point missing");
  };
  for (Index i = 0; i < nre; ++i) {
    for (Index j = 0; j < nim; ++j) {
      const SurfacePoint& a = at(i, j);
      const SurfacePoint& b = at(i, nim - 1 - j);
      ASSERT_EQ(a.norm.has_value(), b.norm.has_value());
      if (a.norm) {
        EXPECT_NEAR(*a.norm, *b.norm, 1e-9 * (1.0 + *a.norm));
        EXPECT_GE(*a.norm, 0.20857 - 1e-5);
      }
    }
  }
}

}  // namespace
}  // namespace opacity
