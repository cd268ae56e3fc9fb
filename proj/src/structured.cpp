#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/tools/minima.hpp>

#include "nelder_mead.hpp"
#include "parallel.hpp"
#include "structured_internal.hpp"

namespace opacity {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double witness_slack(const ComplexMatrix& M, const ComplexMatrix& N,
                     const ComplexVector& d, double norm) {
  const double nu2 = norm * norm;
  const ComplexMatrix H = nu2 * N.adjoint() * N - M.adjoint() * M;
  const ComplexMatrix S = nu2 * N.transpose() * N - M.transpose() * M;
  const double lhs = (d.adjoint() * H * d)(0, 0).real();
  const double rhs = std::abs((d.transpose() * S * d)(0, 0));
  const double scale = (nu2 * N.squaredNorm() + M.squaredNorm()) * d.squaredNorm();
  return scale > 0.0 ? (lhs - rhs) / scale : 0.0;
}

}  // namespace

std::string describe(Infeasibility reason) {
  switch (reason) {
    case Infeasibility::none:
      return "feasible";
    case Infeasibility::complement_full_rank:
      return "the unperturbed rows keep full column rank n+p, so no nonzero "
             "vector survives them";
    case Infeasibility::no_perturbable_direction:
      return "every null vector of the unperturbed rows vanishes on the "
             "perturbable columns";
    case Infeasibility::no_real_perturbation:
      return "only a complex perturbation of the pattern places a zero here";
  }
  return "unknown";
}

double epsilon_for(double delta_M) {
  return 1.0 / (1e4 * std::pow(delta_M, 4));
}

ApproxConfig ApproxConfig::for_delta_M(double delta_M) {
  return {epsilon_for(delta_M), delta_M};
}

namespace internal {

NormAtS gamma_supremum(const std::function<double(double)>& f,
                       const StructuredOptions& options) {
  const int n = std::max(options.gamma_points, 2);
  const double lo = std::log(options.gamma_min);
  std::vector<double> logs(n), vals(n);
  int best = 0;
  for (int k = 0; k < n; ++k) {
    logs[k] = k == n - 1 ? 0.0 : lo - lo * k / (n - 1);
    vals[k] = f(std::exp(logs[k]));
    if (std::isinf(vals[k])) return {kInf, std::exp(logs[k]), true};
    if (vals[k] > vals[best]) best = k;
  }
  if (best == 0) {
    // An unbounded supremum grows like 1/gamma, about 10x over the lowest
    // decade of the grid; a bounded one has flattened out there. Probing
    // below gamma_min instead runs into the rank tolerance.
    const double decade = std::log(10.0);
    int k = 0;
    while (k + 1 < n && logs[k] < lo + decade) ++k;
    if (k > 0 && vals[0] > 3.0 * vals[k]) return {kInf, options.gamma_min, true};
    return {vals[0], options.gamma_min, false};
  }
  const double a = logs[best - 1];
  const double b = logs[std::min(best + 1, n - 1)];
  const auto r = boost::math::tools::brent_find_minima(
      [&](double u) { return -f(std::exp(u)); }, a, b,
      std::numeric_limits<double>::digits / 2);
  if (-r.second > vals[best]) return {-r.second, std::exp(r.first), false};
  return {vals[best], std::exp(logs[best]), false};
}

}  // namespace internal

StructuredProblem::StructuredProblem(StateSpaceSystem sys,
                                     StructuredPattern pattern,
                                     StructuredOptions options)
    : sys_(std::move(sys)), pattern_(std::move(pattern)), options_(options) {
  if (sys_.outputs() < sys_.inputs()) {
    throw std::invalid_argument(
        "StructuredProblem: expects m >= p; normalize the orientation first");
  }
  lambda0_ = sys_.system_matrix();
  shift_ = sys_.shift_selector();
  if (pattern_.total_rows() != lambda0_.rows() ||
      pattern_.total_cols() != lambda0_.cols()) {
    throw std::invalid_argument("StructuredProblem: pattern shape does not match [A B; C D]");
  }
  delta_M_ = std::max(lambda0_.cwiseAbs().maxCoeff(), 1.0);
}

StructuredProblem::Reduced StructuredProblem::reduce_at(Complex s) const {
  Reduced r;
  const ComplexMatrix L = lambda0_.cast<Complex>() - s * shift_.cast<Complex>();
  const NullspaceOptions null_opts{options_.rank_tol, true};
  const Index width = L.cols();
  if (pattern_.other_rows().empty()) {
    r.Q2 = ComplexMatrix::Identity(width, width);
  } else {
    const ComplexMatrix beta = L(pattern_.other_rows(), Eigen::all);
    r.Q2 = nullspace_basis(beta, null_opts);
  }
  r.nullity = r.Q2.cols();
  if (r.nullity == 0) {
    r.reason = Infeasibility::complement_full_rank;
    return r;
  }
  Index rest_nullity = 0;
  if (!pattern_.other_cols().empty()) {
    const auto other = static_cast<Index>(pattern_.other_cols().size());
    if (pattern_.other_rows().empty()) {
      rest_nullity = other;
    } else {
      const ComplexMatrix rest = L(pattern_.other_rows(), pattern_.other_cols());
      rest_nullity = nullspace_basis(rest, null_opts).cols();
    }
  }
  if (rest_nullity >= r.nullity) {
    r.reason = Infeasibility::no_perturbable_direction;
    return r;
  }
  r.M = L(pattern_.rows(), Eigen::all) * r.Q2;
  r.N = r.Q2(pattern_.cols(), Eigen::all);
  r.delta = std::min(r.M.rows(), r.Q2.cols());
  return r;
}

ExistenceResult StructuredProblem::existence(Complex s) const {
  const Reduced r = reduce_at(s);
  return {r.reason, r.nullity};
}

double StructuredProblem::sigma_at(Complex s, double gamma) const {
  const Reduced r = reduce_at(s);
  if (r.reason != Infeasibility::none) return kInf;
  const GsvdResult g = gsvd_values(pi_transform(gamma, r.M), pi_transform(gamma, r.N),
                                   options_.rank_tol);
  return g.values(2 * r.delta - 2);
}

NormAtS StructuredProblem::min_norm(Complex s) const {
  const Reduced r = reduce_at(s);
  if (r.reason != Infeasibility::none) {
    throw InfeasibleError(r.reason, "no structured perturbation at this s: " +
                                        describe(r.reason));
  }
  const Index k = 2 * r.delta - 2;
  const double tol = options_.rank_tol;
  return internal::gamma_supremum(
      [&](double gamma) {
        return gsvd_values(pi_transform(gamma, r.M), pi_transform(gamma, r.N), tol)
            .values(k);
      },
      options_);
}

StructuredSolution StructuredProblem::perturbation(Complex s) const {
  StructuredSolution sol;
  sol.s_star = s;
  const Index rows = static_cast<Index>(pattern_.rows().size());
  const Index cols = static_cast<Index>(pattern_.cols().size());

  const ComplexMatrix L = lambda0_.cast<Complex>() - s * shift_.cast<Complex>();
  if (rank_with_tol(L, options_.rank_tol) < L.cols()) {
    sol.regime = Regime::existing_zero;
    sol.norm = 0.0;
    sol.delta_r = RealMatrix::Zero(rows, cols);
    sol.delta_full = expand(sol.delta_r, pattern_);
    const ComplexMatrix ker = nullspace_basis(L, NullspaceOptions{options_.rank_tol, true});
    sol.d = ker.cols() > 0 ? ComplexVector(ker.col(0)) : ComplexVector::Zero(L.cols());
    return sol;
  }

  const Reduced r = reduce_at(s);
  if (r.reason != Infeasibility::none) {
    throw InfeasibleError(r.reason, "no structured perturbation at this s: " +
                                        describe(r.reason));
  }
  const NormAtS target = min_norm(s);
  if (target.unbounded) {
    throw InfeasibleError(Infeasibility::no_real_perturbation,
                          "no structured perturbation at this s: " +
                              describe(Infeasibility::no_real_perturbation));
  }
  sol.gamma_star = target.gamma;

  // Delta(d) is invariant under complex scaling of d, so a single null
  // vector needs no search at all.
  auto candidate = [&](const ComplexVector& d, RealMatrix& delta) {
    const ComplexVector X = r.N * d;
    const ComplexVector Y = r.M * d;
    try {
      delta = real_lift_solve(Y, X);
    } catch (const std::domain_error&) {
      return kInf;
    }
    const double resid = (delta.cast<Complex>() * X - Y).norm();
    if (resid > 1e-8 * std::max(Y.norm(), 1e-300) + 1e-300) return kInf;
    return spectral_norm(delta);
  };

  const Index t = r.Q2.cols();
  RealMatrix best_delta;
  ComplexVector best_d;
  double best = kInf;
  if (t == 1) {
    best_d = ComplexVector::Ones(1);
    best = candidate(best_d, best_delta);
  } else {
    auto unpack = [t](const RealVector& v) {
      ComplexVector d(t);
      for (Index i = 0; i < t; ++i) d(i) = Complex(v(i), v(t + i));
      const double nrm = d.norm();
      return nrm > 0.0 ? ComplexVector(d / nrm) : d;
    };
    auto objective = [&](const RealVector& v) {
      RealMatrix tmp;
      return candidate(unpack(v), tmp);
    };
    std::mt19937_64 rng(options_.seed + 17);
    std::normal_distribution<double> normal;
    std::vector<RealVector> starts;
    for (Index i = 0; i < t; ++i) {
      RealVector v = RealVector::Zero(2 * t);
      v(i) = 1.0;
      starts.push_back(v);
    }
    for (int i = 0; i < 8; ++i) {
      RealVector v(2 * t);
      for (Index j = 0; j < 2 * t; ++j) v(j) = normal(rng);
      starts.push_back(v);
    }
    for (const RealVector& v0 : starts) {
      const auto res = internal::nelder_mead(objective, v0, 0.3, 1e-10, 4000);
      if (res.value < best) {
        best = res.value;
        best_d = unpack(res.x);
      }
    }
    if (std::isfinite(best)) candidate(best_d, best_delta);
  }
  if (!std::isfinite(best) ||
      std::abs(best - target.norm) > 1e-4 * std::max(target.norm, 1e-300)) {
    throw std::runtime_error("perturbation_at_s: witness search failed");
  }
  sol.delta_r = best_delta;
  sol.delta_full = expand(best_delta, pattern_);
  sol.d = best_d;
  sol.norm = spectral_norm(best_delta);
  sol.witness_slack = witness_slack(r.M, r.N, best_d, sol.norm);
  return sol;
}

double StructuredProblem::approx_sigma_at(Complex s, double gamma,
                                          double epsilon) const {
  if (!(epsilon > 0.0)) throw std::domain_error("approximation: epsilon must be > 0");
  ComplexMatrix L = lambda0_.cast<Complex>() - s * shift_.cast<Complex>();
  const double inv = 1.0 / epsilon;
  for (Index i = 0; i < L.rows(); ++i) {
    if (!pattern_.row_mask()[i]) L.row(i) *= inv;
  }
  for (Index j = 0; j < L.cols(); ++j) {
    if (!pattern_.col_mask()[j]) L.col(j) *= inv;
  }
  if (!std::isfinite(inv) || !L.allFinite()) {
    throw std::overflow_error(
        "approximation: 1/epsilon scaling overflows double range; use a larger epsilon");
  }
  const RealVector sv = singular_values(pi_transform(gamma, L));
  return sv(2 * L.cols() - 2);
}

double StructuredProblem::approx_min_norm(Complex s, const ApproxConfig& config) const {
  const NormAtS r = internal::gamma_supremum(
      [&](double gamma) { return approx_sigma_at(s, gamma, config.epsilon); }, options_);
  return r.norm;
}

std::vector<Complex> StructuredProblem::finite_candidates() const {
  if (pattern_.other_rows().empty()) return {};
  const RealMatrix P0 = lambda0_(pattern_.other_rows(), Eigen::all);
  const RealMatrix K = shift_(pattern_.other_rows(), Eigen::all);
  ZeroOptions zo;
  zo.seed = options_.seed;
  std::vector<Complex> out;
  for (const Complex& s : pencil_zeros(P0, K, zo)) {
    if (existence(s).feasible()) out.push_back(s);
  }
  return out;
}

StructuredSolution StructuredProblem::solve() const {
  ZeroOptions zo;
  zo.seed = options_.seed;
  const ZeroSet zeros = invariant_zeros(sys_, zo);
  if (!zeros.empty()) {
    StructuredSolution sol = perturbation(zeros.entire_plane ? options_.s0 : zeros.points.front());
    sol.regime = Regime::existing_zero;
    return sol;
  }
  std::mt19937_64 rng(options_.seed);
  std::normal_distribution<double> normal;
  const double scale = 1.0 + delta_M_;
  for (int probe = 0; probe < 3; ++probe) {
    const Complex s(scale * normal(rng), scale * normal(rng));
    if (existence(s).feasible()) return solve_continuous();
  }
  return solve_finite();
}

StructuredSolution StructuredProblem::solve_finite() const {
  const std::vector<Complex> candidates = finite_candidates();
  double best = kInf;
  Complex best_s;
  for (const Complex& s : candidates) {
    const NormAtS r = min_norm(s);
    if (r.unbounded) continue;
    // Conjugate pairs give equal norms; prefer the upper half plane.
    if (r.norm < best * (1.0 - 1e-12) ||
        (std::abs(r.norm - best) <= 1e-12 * best && s.imag() > best_s.imag())) {
      best = r.norm;
      best_s = s;
    }
  }
  if (!std::isfinite(best)) {
    throw InfeasibleError(Infeasibility::complement_full_rank,
                          "problem infeasible for this pattern: " +
                              describe(Infeasibility::complement_full_rank) +
                              " at every s, and no finite exception admits a real "
                              "perturbation");
  }
  StructuredSolution sol = perturbation(best_s);
  sol.regime = Regime::finite;
  sol.incumbents = {best_s};
  sol.norm_history = {sol.norm};
  return sol;
}

StructuredSolution StructuredProblem::solve_continuous() const {
  auto evaluate = [&](Complex s) -> NormAtS {
    if (!existence(s).feasible()) return {kInf, 1.0, true};
    return min_norm(s);
  };

  Complex s = options_.s0;
  NormAtS inc = evaluate(s);
  if (!std::isfinite(inc.norm)) {
    std::mt19937_64 rng(options_.seed + 1);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 1000 && !std::isfinite(inc.norm); ++i) {
      s = Complex(normal(rng), normal(rng)) * (1.0 + delta_M_);
      inc = evaluate(s);
    }
    if (!std::isfinite(inc.norm)) {
      throw InfeasibleError(Infeasibility::no_real_perturbation,
                            "no starting point admits a real perturbation");
    }
  }

  std::vector<double> thetas;
  for (int k = 0; k * options_.theta_step < 2.0 * std::numbers::pi; ++k) {
    thetas.push_back(k * options_.theta_step);
  }

  StructuredSolution sol;
  sol.incumbents.push_back(s);
  sol.norm_history.push_back(inc.norm);

  struct RayBest {
    double norm = kInf;
    double gamma = 1.0;
    Complex s;
  };

  int iteration = 0;
  while (iteration < options_.max_iterations && !thetas.empty()) {
    ++iteration;
    const double target = inc.norm;
    // Below ~1e-3 the supremum has flattened out, while the epsilon scaling
    // loses accuracy as gamma shrinks.
    const double gamma = std::max(inc.gamma, 1e-3);
    std::vector<RayBest> rays(thetas.size());
    internal::parallel_for(thetas.size(), [&](std::size_t i) {
      const double theta = thetas[i];
      const Complex dir = std::polar(1.0, theta);
      const RayScan scan = scan_ray(theta, target, gamma, RayOptions{});
      std::vector<double> edges{0.0};
      edges.insert(edges.end(), scan.roots.begin(), scan.roots.end());
      edges.push_back(std::max(scan.r_max, edges.back() * 2.0));
      for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        // Trial point: the lowest sigma inside the interval rather than its
        // midpoint, which can miss a narrow valley crossing the ray.
        const auto low = boost::math::tools::brent_find_minima(
            [&](double r) {
              const double v = sigma_at(r * dir, gamma);
              return std::isfinite(v) ? v : std::numeric_limits<double>::max();
            },
            edges[k], edges[k + 1], 24);
        const Complex trial = low.first * dir;
        // sigma at the incumbent gamma bounds the supremum from below.
        if (!(low.second < target)) continue;
        const NormAtS v = evaluate(trial);
        if (v.norm < target && v.norm < rays[i].norm) rays[i] = {v.norm, v.gamma, trial};
      }
    });

    std::vector<double> kept;
    std::size_t pick = rays.size();
    for (std::size_t i = 0; i < rays.size(); ++i) {
      if (!std::isfinite(rays[i].norm)) continue;
      kept.push_back(thetas[i]);
      if (pick == rays.size() || rays[i].norm < rays[pick].norm) pick = i;
    }
    if (pick == rays.size()) break;
    const double improvement = (inc.norm - rays[pick].norm) / inc.norm;
    s = rays[pick].s;
    inc = {rays[pick].norm, rays[pick].gamma, false};
    sol.incumbents.push_back(s);
    sol.norm_history.push_back(inc.norm);
    thetas = std::move(kept);
    if (thetas.size() <= 1 || improvement < options_.min_relative_improvement) break;
  }

  if (options_.polish) {
    auto f = [&](const RealVector& v) { return evaluate(Complex(v(0), v(1))).norm; };
    RealVector x0(2);
    x0 << s.real(), s.imag();
    const double step = 1e-2 * (1.0 + std::abs(s));
    const auto res = internal::nelder_mead(f, x0, step, 1e-10, 600);
    if (res.value < inc.norm) {
      s = Complex(res.x(0), res.x(1));
      inc = evaluate(s);
      sol.incumbents.push_back(s);
      sol.norm_history.push_back(inc.norm);
    }
  }

  StructuredSolution out = perturbation(s);
  out.regime = Regime::continuous;
  out.incumbents = std::move(sol.incumbents);
  out.norm_history = std::move(sol.norm_history);
  out.iterations = iteration;
  return out;
}

std::vector<SurfacePoint> StructuredProblem::surface(const SurfaceRegion& region,
                                                     Index re_points,
                                                     Index im_points) const {
  if (re_points < 1 || im_points < 1) {
    throw std::invalid_argument("surface: grid counts must be positive");
  }
  auto coord = [](double lo, double hi, Index k, Index count) {
    return count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / (count - 1);
  };
  std::vector<SurfacePoint> out(re_points * im_points);
  internal::parallel_for(out.size(), [&](std::size_t idx) {
    const Index i = static_cast<Index>(idx) / re_points;
    const Index j = static_cast<Index>(idx) % re_points;
    const Complex s(coord(region.re_min, region.re_max, j, re_points),
                    coord(region.im_min, region.im_max, i, im_points));
    out[idx].s = s;
    if (!existence(s).feasible()) return;
    const NormAtS r = min_norm(s);
    if (!r.unbounded) out[idx].norm = r.norm;
  });
  return out;
}

ExistenceResult existence_check(const StateSpaceSystem& sys,
                                const StructuredPattern& pattern, Complex s,
                                const StructuredOptions& options) {
  return StructuredProblem(sys, pattern, options).existence(s);
}

std::vector<Complex> finite_candidate_set(const StateSpaceSystem& sys,
                                          const StructuredPattern& pattern,
                                          const StructuredOptions& options) {
  const StructuredProblem problem(sys, pattern, options);
  std::vector<Complex> out = problem.finite_candidates();
  if (out.empty()) {
    throw InfeasibleError(Infeasibility::complement_full_rank,
                          "problem infeasible for this pattern");
  }
  return out;
}

NormAtS min_norm_at_s(const StateSpaceSystem& sys, const StructuredPattern& pattern,
                      Complex s, const StructuredOptions& options) {
  return StructuredProblem(sys, pattern, options).min_norm(s);
}

StructuredSolution perturbation_at_s(const StateSpaceSystem& sys,
                                     const StructuredPattern& pattern, Complex s,
                                     const StructuredOptions& options) {
  return StructuredProblem(sys, pattern, options).perturbation(s);
}

double approx_min_norm_at_s(const StateSpaceSystem& sys,
                            const StructuredPattern& pattern, Complex s,
                            const ApproxConfig& config,
                            const StructuredOptions& options) {
  return StructuredProblem(sys, pattern, options).approx_min_norm(s, config);
}

std::vector<double> ray_level_set(const StateSpaceSystem& sys,
                                  const StructuredPattern& pattern, double theta,
                                  double target, double gamma, const RayOptions& ray,
                                  const StructuredOptions& options) {
  return StructuredProblem(sys, pattern, options).ray_level_set(theta, target, gamma, ray);
}

StructuredSolution solve_structured(const StateSpaceSystem& sys,
                                    const StructuredPattern& pattern,
                                    const StructuredOptions& options) {
  return StructuredProblem(sys, pattern, options).solve();
}

std::vector<SurfacePoint> norm_surface(const StateSpaceSystem& sys,
                                       const StructuredPattern& pattern,
                                       const SurfaceRegion& region, Index re_points,
                                       Index im_points,
                                       const StructuredOptions& options) {
  return StructuredProblem(sys, pattern, options).surface(region, re_points, im_points);
}

}  // namespace opacity
