#pragma once

#include <functional>

#include "opacity/linalg.hpp"

namespace opacity::internal {

struct SimplexResult {
  RealVector x;
  double value;
  int evaluations;
};

// Derivative-free local minimization. `step` sets the initial simplex edge.
SimplexResult nelder_mead(const std::function<double(const RealVector&)>& f,
                          const RealVector& x0, double step, double xtol,
                          int max_evaluations);

}  // namespace opacity::internal
