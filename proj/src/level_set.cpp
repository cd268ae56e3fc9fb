// Level-set search along rays s = r e^{j theta}: where does the sigma
// expression at a fixed gamma cross a target norm?

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "structured_internal.hpp"

namespace opacity {
namespace {

using Fn = std::function<double(double)>;

// Root of f - target inside [a, b] where the sign changes.
double bracketed_root(const Fn& f, double target, double a, double b, double fa,
                      double fb) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(
      [&](double x) {
        const double v = f(x) - target;
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
      },
      a, b, fa, fb, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

}  // namespace

StructuredProblem::RayScan StructuredProblem::scan_ray(double theta, double target,
                                                       double gamma,
                                                       const RayOptions& ray) const {
  const Complex dir = std::polar(1.0, theta);
  const Fn exact = [&](double r) { return sigma_at(r * dir, gamma); };

  const double epsilon = ray.epsilon.value_or(options_.epsilon.value_or(epsilon_for(delta_M_)));
  Fn sample = [&](double r) { return approx_sigma_at(r * dir, gamma, epsilon); };
  bool approximate = true;
  try {
    sample(0.0);
  } catch (const std::overflow_error&) {
    // 1/epsilon leaves double range: sample the exact expression instead.
    sample = exact;
    approximate = false;
  }
  auto safe = [&](double r) {
    try {
      return sample(r);
    } catch (const std::overflow_error&) {
      return exact(r);
    }
  };

  RayScan scan;
  double r_max = ray.r_max > 0.0 ? ray.r_max : 10.0 * (1.0 + delta_M_);
  for (int k = 0; k < 30 && safe(r_max) < target; ++k) r_max *= 10.0;
  scan.r_max = r_max;

  std::vector<double> rs{0.0};
  for (int k = 1; k <= ray.uniform_samples; ++k) rs.push_back(r_max * k / ray.uniform_samples);
  const double g0 = r_max * 1e-12;
  for (int k = 0; k < ray.geometric_samples; ++k) {
    rs.push_back(g0 * std::pow(r_max / g0, static_cast<double>(k) / (ray.geometric_samples - 1)));
  }
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());

  std::vector<double> fs(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const double v = safe(rs[i]) - target;
    fs[i] = std::isfinite(v) ? v : std::numeric_limits<double>::max();
  }

  std::vector<double> approx_roots;
  for (std::size_t i = 0; i + 1 < rs.size(); ++i) {
    if ((fs[i] < 0.0) != (fs[i + 1] < 0.0) || fs[i] == 0.0) {
      approx_roots.push_back(
          bracketed_root(safe, target, rs[i], rs[i + 1], fs[i], fs[i + 1]));
    }
  }
  // Touching dips and peaks the samples straddle without a sign change.
  for (std::size_t i = 1; i + 1 < rs.size(); ++i) {
    const bool dip = fs[i] > 0.0 && fs[i] < fs[i - 1] && fs[i] <= fs[i + 1];
    const bool peak = fs[i] < 0.0 && fs[i] > fs[i - 1] && fs[i] >= fs[i + 1];
    if (!dip && !peak) continue;
    const double sign = dip ? 1.0 : -1.0;
    const auto ext = boost::math::tools::brent_find_minima(
        [&](double r) { return sign * (safe(r) - target); }, rs[i - 1], rs[i + 1],
        std::numeric_limits<double>::digits / 2);
    if (ext.second >= 0.0) continue;
    const double fe = safe(ext.first) - target;
    approx_roots.push_back(bracketed_root(safe, target, rs[i - 1], ext.first, fs[i - 1], fe));
    approx_roots.push_back(bracketed_root(safe, target, ext.first, rs[i + 1], fe, fs[i + 1]));
  }

  // Polish each root against the exact expression.
  for (double r0 : approx_roots) {
    double r = r0;
    const double e0 = exact(r0) - target;
    if (approximate && std::abs(e0) > 1e-12 * target && r0 > 0.0) {
      // The approximate root sits within a small relative distance of the
      // exact one; a bracket wider than r0 / 2 means it was spurious.
      for (double step = 1e-9 * r0; step <= 0.5 * r0; step *= 2.0) {
        const double lo = std::max(0.0, r0 - step);
        const double hi = r0 + step;
        const double elo = exact(lo) - target;
        const double ehi = exact(hi) - target;
        if ((elo < 0.0) != (e0 < 0.0)) {
          r = bracketed_root(exact, target, lo, r0, elo, e0);
          break;
        }
        if ((ehi < 0.0) != (e0 < 0.0)) {
          r = bracketed_root(exact, target, r0, hi, e0, ehi);
          break;
        }
      }
    }
    if (std::abs(exact(r) - target) <= ray.rel_tol * target) scan.roots.push_back(r);
  }
  std::sort(scan.roots.begin(), scan.roots.end());
  std::vector<double> unique;
  for (double r : scan.roots) {
    if (unique.empty() || r - unique.back() > 1e-9 * std::max(r, 1.0)) unique.push_back(r);
  }
  scan.roots = std::move(unique);
  return scan;
}

std::vector<double> StructuredProblem::ray_level_set(double theta, double target,
                                                     double gamma,
                                                     const RayOptions& options) const {
  if (!(target > 0.0)) throw std::domain_error("ray_level_set: target must be > 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::domain_error("ray_level_set: gamma must lie in (0, 1]");
  }
  return scan_ray(theta, target, gamma, options).roots;
}

}  // namespace opacity
