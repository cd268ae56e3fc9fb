#include "opacity/affine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "parallel.hpp"

namespace opacity {
namespace {

// Projection of a nonnegative vector onto {v : sum v <= 1, v >= 0}.
RealVector project_l1_ball(const RealVector& v) {
  if (v.sum() <= 1.0) return v;
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    css += u[k];
    const double t = (css - 1.0) / static_cast<double>(k + 1);
    if (u[k] > t) theta = t;
  }
  return (v.array() - theta).max(0.0);
}

// prox of t ||.||_2 by Moreau: V - t * P_{||.||_* <= 1}(V / t).
RealMatrix prox_spectral(const RealMatrix& V, double t) {
  if (t == 0.0) return V;
  Eigen::JacobiSVD<RealMatrix> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& s = svd.singularValues();
  const RealVector shrunk = s - t * project_l1_ball(s / t);
  return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

// prox of t ||.||_*: singular value soft thresholding.
RealMatrix prox_nuclear(const RealMatrix& V, double t) {
  Eigen::JacobiSVD<RealMatrix> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector s = (svd.singularValues().array() - t).max(0.0);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

// The affine maps x = (cells, lambda, mu) -> W (masked Delta) and -> Z.
class LiftedMaps {
 public:
  LiftedMaps(const StateSpaceSystem& sys, const AffinePattern& pattern)
      : sys_(sys), pattern_(pattern) {
    rows_ = sys.states() + sys.outputs();
    cols_ = sys.states() + sys.inputs();
    cells_ = pattern.size();
    const Index nx = cells_ + 2;
    Z0_ = lifted_pencil(sys, RealMatrix::Zero(rows_, cols_), 0.0, 0.0);
    L_.resize(Z0_.size(), nx);
    P_ = RealMatrix::Zero(rows_ * cols_, nx);
    for (Index k = 0; k < nx; ++k) {
      const RealVector e = RealVector::Unit(nx, k);
      const RealMatrix dZ = Z(e) - Z0_;
      L_.col(k) = Eigen::Map<const RealVector>(dZ.data(), dZ.size());
      if (k < cells_) {
        const RealMatrix dW = W(e);
        P_.col(k) = Eigen::Map<const RealVector>(dW.data(), dW.size());
      }
    }
    RealMatrix A(P_.rows() + L_.rows(), nx);
    A << P_, L_;
    AtA_.compute(A.transpose() * A);
  }

  Index cells() const { return cells_; }
  Index nx() const { return cells_ + 2; }

  RealMatrix delta(const RealVector& x) const {
    RealMatrix d = RealMatrix::Zero(rows_, cols_);
    for (Index k = 0; k < cells_; ++k) {
      const Cell& c = pattern_.cells()[k];
      d(c.row, c.col) = x(k);
    }
    return d;
  }
  RealMatrix W(const RealVector& x) const { return delta(x); }
  RealMatrix Z(const RealVector& x) const {
    return lifted_pencil(sys_, delta(x), x(cells_), x(cells_ + 1));
  }

  RealVector pack(const AffinePoint& p) const {
    RealVector x(nx());
    for (Index k = 0; k < cells_; ++k) {
      const Cell& c = pattern_.cells()[k];
      x(k) = p.delta(c.row, c.col);
    }
    x(cells_) = p.lambda;
    x(cells_ + 1) = p.mu;
    return x;
  }
  AffinePoint unpack(const RealVector& x) const {
    return {delta(x), x(cells_), x(cells_ + 1)};
  }

  // argmin_x ||W(x) - Wt||^2 + ||Z(x) - Zt||^2
  RealVector least_squares(const RealMatrix& Wt, const RealMatrix& Zt) const {
    const RealMatrix dz = Zt - Z0_;
    const RealVector rhs =
        P_.transpose() * Eigen::Map<const RealVector>(Wt.data(), Wt.size()) +
        L_.transpose() * Eigen::Map<const RealVector>(dz.data(), dz.size());
    return AtA_.solve(rhs);
  }

  double scale() const { return Z0_.norm(); }

 private:
  const StateSpaceSystem& sys_;
  const AffinePattern& pattern_;
  Index rows_, cols_, cells_;
  RealMatrix Z0_, L_, P_;
  Eigen::LDLT<RealMatrix> AtA_;
};

double objective_F(const RealMatrix& W, const RealMatrix& Z, double zeta) {
  const RealVector s = Eigen::JacobiSVD<RealMatrix>(Z).singularValues();
  return spectral_norm(W) + zeta * s(s.size() - 1);
}

InnerResult run_inner(const LiftedMaps& maps, const RealMatrix& U1,
                      const RealMatrix& V1, double zeta, const RealVector& x0,
                      const InnerOptions& options, const InnerState* warm) {
  const double rho = 0.1 * std::max(1.0, zeta);
  const RealMatrix C = U1 * V1.transpose();
  RealVector x = x0;
  RealMatrix W, Z, Uw, Uz;
  if (warm && warm->valid()) {
    W = warm->W;
    Z = warm->Z;
    Uw = warm->Uw;
    Uz = warm->Uz;
  } else {
    W = maps.W(x);
    Z = maps.Z(x);
    Uw = RealMatrix::Zero(W.rows(), W.cols());
    Uz = RealMatrix::Zero(Z.rows(), Z.cols());
  }
  const double scale = 1.0 + maps.scale();
  InnerResult out;
  int it = 0;
  double pr = 0.0, du = 0.0;
  for (; it < options.max_iterations; ++it) {
    x = maps.least_squares(W - Uw, Z - Uz);
    const RealMatrix Wx = maps.W(x);
    const RealMatrix Zx = maps.Z(x);
    const RealMatrix Wold = W;
    const RealMatrix Zold = Z;
    W = prox_spectral(Wx + Uw, options.norm_weight / rho);
    Z = prox_nuclear(Zx + Uz + (zeta / rho) * C, zeta / rho);
    Uw += Wx - W;
    Uz += Zx - Z;
    pr = std::sqrt((Wx - W).squaredNorm() + (Zx - Z).squaredNorm());
    du = rho * std::sqrt((W - Wold).squaredNorm() + (Z - Zold).squaredNorm());
    if (pr < options.tol * scale && du < options.tol * scale) {
      out.converged = true;
      ++it;
      break;
    }
  }
  out.point = maps.unpack(x);
  out.Z = maps.Z(x);
  out.iterations = it;
  out.primal_residual = pr;
  out.dual_residual = du;
  out.objective = options.norm_weight * spectral_norm(maps.W(x)) +
                  zeta * (nuclear_norm(out.Z) - (U1.transpose() * out.Z * V1).trace());
  out.state = {W, Z, Uw, Uz};
  return out;
}

AffineSolution run_single(const StateSpaceSystem& sys, const AffinePattern& pattern,
                          const AffinePoint& init, const AffineConfig& config) {
  const LiftedMaps maps(sys, pattern);
  const Index r = 2 * (sys.states() + sys.inputs()) - 1;
  AffineSolution sol;

  auto top_vectors = [&](const RealMatrix& Z, RealMatrix& U1, RealMatrix& V1) {
    Eigen::JacobiSVD<RealMatrix> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    U1 = svd.matrixU().leftCols(r);
    V1 = svd.matrixV().leftCols(r);
  };
  auto inner = [&](const RealMatrix& U1, const RealMatrix& V1, double zeta,
                   const RealVector& x, const InnerOptions& opts,
                   const InnerState* warm) {
    InnerResult res = run_inner(maps, U1, V1, zeta, x, opts, warm);
    sol.inner_iterations += res.iterations;
    if (!res.converged) ++sol.inner_limit_hits;
    return res;
  };

  RealVector x = maps.pack(init);
  RealMatrix U1, V1;
  top_vectors(maps.Z(x), U1, V1);

  InnerOptions first = config.inner;
  first.norm_weight = 0.0;
  x = maps.pack(inner(U1, V1, 1.0, x, first, nullptr).point);

  const double norm0 = spectral_norm(maps.W(x));
  sol.zeta = config.zeta.value_or((norm0 > 0.0 ? norm0 : 1.0) / config.eps_zeta);

  double F_prev = objective_F(maps.W(x), maps.Z(x), sol.zeta);
  const double F0 = F_prev;
  auto record = [&](int k, double F) {
    // Without history only the latest iterate is kept, which F() still needs.
    if (!config.record_history && !sol.history.empty()) sol.history.pop_back();
    sol.history.push_back({k, F, spectral_norm(maps.W(x)), x(maps.cells()),
                           x(maps.cells() + 1)});
  };
  record(0, F_prev);

  InnerState state;
  int rises = 0;
  auto finish = [&]() {
    const AffinePoint p = maps.unpack(x);
    sol.delta = p.delta;
    sol.lambda = p.lambda;
    sol.mu = p.mu;
    sol.norm = spectral_norm(p.delta);
    const RealVector s = Eigen::JacobiSVD<RealMatrix>(maps.Z(x)).singularValues();
    sol.sigma_ratio = s(0) > 0.0 ? s(s.size() - 1) / s(0) : 0.0;
  };

  for (int k = 1; k <= config.max_outer; ++k) {
    top_vectors(maps.Z(x), U1, V1);
    const InnerResult res = inner(U1, V1, sol.zeta, x, config.inner, &state);
    state = res.state;
    x = maps.pack(res.point);
    const double F = objective_F(maps.W(x), maps.Z(x), sol.zeta);
    record(k, F);
    sol.outer_iterations = k;
    rises = F > F_prev + 1e-6 * F0 ? rises + 1 : 0;
    if (rises >= 5) {
      finish();
      throw AffineDivergence("solve_affine: objective increased in 5 consecutive iterations",
                             sol);
    }
    if (std::abs(F - F_prev) <= config.tau) {
      sol.status = AffineStatus::converged;
      break;
    }
    F_prev = F;
  }
  finish();
  return sol;
}

}  // namespace

RealMatrix lifted_pencil(const StateSpaceSystem& sys, const RealMatrix& delta_full,
                         double lambda, double mu) {
  const Index n = sys.states();
  const Index rows = n + sys.outputs();
  const Index cols = n + sys.inputs();
  if (delta_full.rows() != rows || delta_full.cols() != cols) {
    throw std::invalid_argument("lifted_pencil: perturbation shape mismatch");
  }
  const RealMatrix K = sys.shift_selector();
  const RealMatrix T = sys.system_matrix() - delta_full - lambda * K;
  RealMatrix Z(2 * rows, 2 * cols);
  Z << T, -mu * K, mu * K, T;
  return Z;
}

InnerResult inner_convex_step(const StateSpaceSystem& sys, const AffinePattern& pattern,
                              const RealMatrix& U1, const RealMatrix& V1, double zeta,
                              const AffinePoint& start, const InnerOptions& options,
                              const InnerState* warm) {
  const Index r = 2 * (sys.states() + sys.inputs()) - 1;
  if (U1.cols() != r || V1.cols() != r) {
    throw std::invalid_argument("inner_convex_step: U1, V1 need 2(n+p)-1 columns");
  }
  const LiftedMaps maps(sys, pattern);
  InnerResult res = run_inner(maps, U1, V1, zeta, maps.pack(start), options, warm);
  if (!res.converged) {
    throw InnerIterationLimit("inner_convex_step: iteration cap reached", res);
  }
  return res;
}

AffinePoint warm_start_from_structured(const StructuredSolution& solution,
                                       const AffinePattern& pattern) {
  return {pattern.apply(solution.delta_full), solution.s_star.real(),
          solution.s_star.imag()};
}

AffineSolution solve_affine(const StateSpaceSystem& sys, const AffinePattern& pattern,
                            const std::optional<AffinePoint>& init,
                            const AffineConfig& config) {
  const Index rows = sys.states() + sys.outputs();
  const Index cols = sys.states() + sys.inputs();
  if (pattern.total_rows() != rows || pattern.total_cols() != cols) {
    throw std::invalid_argument("solve_affine: pattern shape does not match [A B; C D]");
  }

  std::vector<AffinePoint> starts;
  if (init) {
    starts.push_back({pattern.apply(init->delta), init->lambda, init->mu});
  }
  const int count = config.multi_start > 0 ? config.multi_start : (init ? 1 : 8);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal;
  const double amp = std::max(sys.system_matrix().cwiseAbs().maxCoeff(), 1.0);
  while (static_cast<int>(starts.size()) < count) {
    AffinePoint p;
    p.delta = RealMatrix::Zero(rows, cols);
    for (const Cell& c : pattern.cells()) p.delta(c.row, c.col) = 0.1 * amp * normal(rng);
    p.lambda = amp * normal(rng);
    p.mu = amp * normal(rng);
    starts.push_back(p);
  }

  std::vector<std::optional<AffineSolution>> results(starts.size());
  std::vector<std::string> failures(starts.size());
  internal::parallel_for(starts.size(), [&](std::size_t i) {
    try {
      results[i] = run_single(sys, pattern, starts[i], config);
    } catch (const AffineDivergence& e) {
      failures[i] = e.what();
      if (starts.size() == 1) throw;
    }
  });

  // Prefer rank-deficient endpoints; among them lowest norm, then |s|.
  auto better = [](const AffineSolution& a, const AffineSolution& b) {
    const bool fa = a.sigma_ratio <= 1e-6;
    const bool fb = b.sigma_ratio <= 1e-6;
    if (fa != fb) return fa;
    if (!fa) return a.F() < b.F();
    if (std::abs(a.norm - b.norm) > 1e-12 * std::max(a.norm, b.norm)) return a.norm < b.norm;
    return std::abs(a.s()) < std::abs(b.s());
  };
  std::optional<AffineSolution> best;
  for (auto& r : results) {
    if (r && (!best || better(*r, *best))) best = r;
  }
  if (!best) {
    throw ConvergenceError("solve_affine: every start diverged: " + failures.front());
  }
  return *best;
}

}  // namespace opacity
