#include "nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace opacity::internal {

SimplexResult nelder_mead(const std::function<double(const RealVector&)>& f,
                          const RealVector& x0, double step, double xtol,
                          int max_evaluations) {
  const Index n = x0.size();
  std::vector<RealVector> pts(n + 1, x0);
  std::vector<double> val(n + 1);
  for (Index i = 0; i < n; ++i) pts[i + 1](i) += step;
  int evals = 0;
  auto eval = [&](const RealVector& x) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  for (Index i = 0; i <= n; ++i) val[i] = eval(pts[i]);

  std::vector<Index> idx(n + 1);
  while (evals < max_evaluations) {
    std::iota(idx.begin(), idx.end(), Index{0});
    std::sort(idx.begin(), idx.end(), [&](Index a, Index b) { return val[a] < val[b]; });
    const Index best = idx.front();
    const Index worst = idx.back();
    const Index second = idx[n - 1];

    double spread = 0.0;
    for (Index i = 0; i <= n; ++i) spread = std::max(spread, (pts[i] - pts[best]).cwiseAbs().maxCoeff());
    if (spread < xtol) break;

    RealVector centroid = RealVector::Zero(n);
    for (Index i = 0; i <= n; ++i) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= static_cast<double>(n);

    const RealVector xr = centroid + (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < val[best]) {
      const RealVector xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        val[worst] = fe;
      } else {
        pts[worst] = xr;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = xr;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    const RealVector xc = outside ? RealVector(centroid + 0.5 * (xr - centroid))
                                  : RealVector(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : val[worst])) {
      pts[worst] = xc;
      val[worst] = fc;
      continue;
    }
    for (Index i = 0; i <= n; ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      val[i] = eval(pts[i]);
    }
  }
  const Index best = std::min_element(val.begin(), val.end()) - val.begin();
  return {pts[best], val[best], evals};
}

}  // namespace opacity::internal
