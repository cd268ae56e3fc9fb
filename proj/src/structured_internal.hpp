#pragma once

#include <functional>

#include "opacity/structured.hpp"

namespace opacity {

struct StructuredProblem::Reduced {
  Infeasibility reason = Infeasibility::none;
  Index nullity = 0;
  ComplexMatrix Q2;  // basis of ker Lambda^beta
  ComplexMatrix M;   // Lambda^alpha Q2
  ComplexMatrix N;   // J Q2
  Index delta = 0;   // min(rows M, cols Q2)
};

struct StructuredProblem::RayScan {
  std::vector<double> roots;
  double r_max = 0.0;
};

namespace internal {

// sup over gamma in (0, 1] of f(gamma), by a log grid plus Brent refinement.
NormAtS gamma_supremum(const std::function<double(double)>& f,
                       const StructuredOptions& options);

}  // namespace internal
}  // namespace opacity
