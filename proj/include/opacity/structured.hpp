#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "opacity/errors.hpp"
#include "opacity/linalg.hpp"
#include "opacity/sparsity.hpp"
#include "opacity/system.hpp"

namespace opacity {

struct StructuredOptions {
  double rank_tol = kRankTol;
  // Supremum over gamma: log grid on [gamma_min, 1], then Brent refinement.
  int gamma_points = 200;
  double gamma_min = 1e-6;
  // Level-set search.
  double theta_step = 0.01;
  Complex s0{1.0, 1.0};
  int max_iterations = 200;
  double min_relative_improvement = 1e-6;
  bool polish = true;
  std::uint64_t seed = 0;
  // Regularization for the ray sampling; defaults to epsilon_for(delta_M)
  // with delta_M the largest entry magnitude of [A B; C D].
  std::optional<double> epsilon;
};

struct ExistenceResult {
  Infeasibility reason = Infeasibility::none;
  Index nullity = 0;  // dim ker Lambda^beta

  bool feasible() const { return reason == Infeasibility::none; }
};

struct NormAtS {
  double norm = 0.0;
  double gamma = 1.0;
  // The supremum grows without bound as gamma -> 0: no real perturbation
  // of the pattern places a zero at s.
  bool unbounded = false;
};

enum class Regime { existing_zero, finite, continuous };

struct StructuredSolution {
  Complex s_star;
  double norm = 0.0;
  RealMatrix delta_r;
  RealMatrix delta_full;
  ComplexVector d;
  double gamma_star = 1.0;
  // d^H H d - |d^T S d| relative to the data scale; nonnegative up to
  // rounding for a valid witness.
  double witness_slack = 0.0;
  Regime regime = Regime::continuous;
  std::vector<Complex> incumbents;
  std::vector<double> norm_history;
  int iterations = 0;
};

struct ApproxConfig {
  double epsilon;
  double delta_M;

  static ApproxConfig for_delta_M(double delta_M);
};

// 1 / (1e4 delta_M^4)
double epsilon_for(double delta_M);

struct RayOptions {
  double r_max = 0.0;  // 0 selects 10 (1 + max |Lambda_0|)
  int uniform_samples = 128;
  int geometric_samples = 160;
  double rel_tol = 1e-6;
  std::optional<double> epsilon;
};

struct SurfaceRegion {
  double re_min, re_max, im_min, im_max;
};

struct SurfacePoint {
  Complex s;
  std::optional<double> norm;  // empty where no real perturbation exists
};

// Problem 1 for a fixed system and structured pattern. The system must have
// m >= p; all operations are const and safe to call concurrently.
class StructuredProblem {
 public:
  StructuredProblem(StateSpaceSystem sys, StructuredPattern pattern,
                    StructuredOptions options = {});

  const StateSpaceSystem& system() const { return sys_; }
  const StructuredPattern& pattern() const { return pattern_; }
  const StructuredOptions& options() const { return options_; }
  double delta_M() const { return delta_M_; }

  ExistenceResult existence(Complex s) const;
  // sigma_{2 delta - 1}(Pi(gamma, M), Pi(gamma, N)) at one gamma; +inf where
  // infeasible.
  double sigma_at(Complex s, double gamma) const;
  NormAtS min_norm(Complex s) const;
  StructuredSolution perturbation(Complex s) const;

  double approx_sigma_at(Complex s, double gamma, double epsilon) const;
  double approx_min_norm(Complex s, const ApproxConfig& config) const;

  std::vector<Complex> finite_candidates() const;
  std::vector<double> ray_level_set(double theta, double target, double gamma,
                                    const RayOptions& options = {}) const;
  StructuredSolution solve() const;
  std::vector<SurfacePoint> surface(const SurfaceRegion& region, Index re_points,
                                    Index im_points) const;

 private:
  struct Reduced;
  Reduced reduce_at(Complex s) const;
  struct RayScan;
  RayScan scan_ray(double theta, double target, double gamma,
                   const RayOptions& options) const;
  StructuredSolution solve_finite() const;
  StructuredSolution solve_continuous() const;

  StateSpaceSystem sys_;
  StructuredPattern pattern_;
  StructuredOptions options_;
  RealMatrix lambda0_;
  RealMatrix shift_;
  double delta_M_;
};

// Free-function forms of the StructuredProblem operations.
ExistenceResult existence_check(const StateSpaceSystem& sys,
                                const StructuredPattern& pattern, Complex s,
                                const StructuredOptions& options = {});
std::vector<Complex> finite_candidate_set(const StateSpaceSystem& sys,
                                          const StructuredPattern& pattern,
                                          const StructuredOptions& options = {});
NormAtS min_norm_at_s(const StateSpaceSystem& sys,
                      const StructuredPattern& pattern, Complex s,
                      const StructuredOptions& options = {});
StructuredSolution perturbation_at_s(const StateSpaceSystem& sys,
                                     const StructuredPattern& pattern, Complex s,
                                     const StructuredOptions& options = {});
double approx_min_norm_at_s(const StateSpaceSystem& sys,
                            const StructuredPattern& pattern, Complex s,
                            const ApproxConfig& config,
                            const StructuredOptions& options = {});
std::vector<double> ray_level_set(const StateSpaceSystem& sys,
                                  const StructuredPattern& pattern, double theta,
                                  double target, double gamma,
                                  const RayOptions& ray = {},
                                  const StructuredOptions& options = {});
StructuredSolution solve_structured(const StateSpaceSystem& sys,
                                    const StructuredPattern& pattern,
                                    const StructuredOptions& options = {});
std::vector<SurfacePoint> norm_surface(const StateSpaceSystem& sys,
                                       const StructuredPattern& pattern,
                                       const SurfaceRegion& region,
                                       Index re_points, Index im_points,
                                       const StructuredOptions& options = {});

}  // namespace opacity
