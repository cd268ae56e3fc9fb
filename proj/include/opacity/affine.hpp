#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "opacity/errors.hpp"
#include "opacity/linalg.hpp"
#include "opacity/sparsity.hpp"
#include "opacity/structured.hpp"
#include "opacity/system.hpp"

namespace opacity {

// Real 2(n+m) x 2(n+p) form of Lambda_s for the perturbed system at
// s = lambda + mu j:
//   [L - lambda K,  -mu K       ]
//   [mu K,           L - lambda K]
// with L = [A B; C D] - delta_full and K = diag(I_n, 0). Singular exactly
// when the complex pencil is singular at lambda +/- mu j.
RealMatrix lifted_pencil(const StateSpaceSystem& sys, const RealMatrix& delta_full,
                         double lambda, double mu);

struct InnerOptions {
  double tol = 1e-9;  // primal and dual residuals, relative to the data scale
  int max_iterations = 50000;
  // Weight of the spectral norm term; 0 gives the initial rank-only solve.
  double norm_weight = 1.0;
};

struct AffinePoint {
  RealMatrix delta;  // full (n+m) x (n+p), zero off the pattern
  double lambda = 0.0;
  double mu = 0.0;
};

// Splitting state carried between consecutive convex solves so each one
// starts where the previous one stopped.
struct InnerState {
  RealMatrix W, Z, Uw, Uz;
  bool valid() const { return Z.size() > 0; }
};

struct InnerResult {
  AffinePoint point;
  RealMatrix Z;        // equals lifted_pencil at point
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
  InnerState state;
};

class InnerIterationLimit : public ConvergenceError {
 public:
  InnerIterationLimit(const std::string& what, InnerResult best)
      : ConvergenceError(what), best_(std::move(best)) {}
  const InnerResult& best() const { return best_; }

 private:
  InnerResult best_;
};

// Minimizes w ||sum_i E_i Delta G_i|| + zeta (||Z||_* - tr(U1^T Z V1)) over
// Z = lifted_pencil(Delta, lambda, mu) by an augmented-Lagrangian splitting.
InnerResult inner_convex_step(const StateSpaceSystem& sys,
                              const AffinePattern& pattern, const RealMatrix& U1,
                              const RealMatrix& V1, double zeta,
                              const AffinePoint& start,
                              const InnerOptions& options = {},
                              const InnerState* warm = nullptr);

struct AffineConfig {
  double tau = 1e-8;
  double eps_zeta = 1e-4;
  std::optional<double> zeta;  // overrides ||Delta0|| / eps_zeta
  int max_outer = 20000;
  InnerOptions inner;
  std::uint64_t seed = 0;
  int multi_start = 0;  // 0 picks 1 when warm-started, else 8
  bool record_history = true;

  static AffineConfig fast() {
    AffineConfig c;
    c.tau = 1e-5;
    return c;
  }
};

enum class AffineStatus { converged, max_iterations };

struct AffineIterate {
  int k;
  double F;
  double norm;
  double lambda;
  double mu;
};

struct AffineSolution {
  double lambda = 0.0;
  double mu = 0.0;
  RealMatrix delta;  // full, zero off the pattern
  double norm = 0.0;
  double zeta = 0.0;
  double sigma_ratio = 0.0;  // sigma_min / sigma_max of the lifted pencil
  std::vector<AffineIterate> history;
  AffineStatus status = AffineStatus::max_iterations;
  int outer_iterations = 0;
  long inner_iterations = 0;
  int inner_limit_hits = 0;

  Complex s() const { return {lambda, mu}; }
  double F() const { return history.empty() ? 0.0 : history.back().F; }
};

class AffineDivergence : public ConvergenceError {
 public:
  AffineDivergence(const std::string& what, AffineSolution partial)
      : ConvergenceError(what), partial_(std::move(partial)) {}
  const AffineSolution& partial() const { return partial_; }

 private:
  AffineSolution partial_;
};

// Rank-relaxation iteration. Without `init`, runs seeded random starts and
// keeps the lowest norm (ties broken by smaller |s|).
AffineSolution solve_affine(const StateSpaceSystem& sys, const AffinePattern& pattern,
                            const std::optional<AffinePoint>& init,
                            const AffineConfig& config = {});

AffinePoint warm_start_from_structured(const StructuredSolution& solution,
                                       const AffinePattern& pattern);

}  // namespace opacity
