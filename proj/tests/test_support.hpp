#pragma once

#include <random>
#include <string>

#include "opacity/sparsity.hpp"
#include "opacity/system.hpp"

namespace opacity::testing {

inline StateSpaceSystem example2() {
  RealMatrix A(3, 3), B(3, 1), C(2, 3), D(2, 1);
  A << 0.74, -0.12, -0.38, -0.69, 1.62, -0.21, -2.08, 0.63, 0.14;
  B << 1.06, 0.71, 0.61;
  C << -1.23, 1.02, -0.66, -0.26, 2.51, 1.13;
  D << 1.33, -2.89;
  return StateSpaceSystem(A, B, C, D);
}

// Perturbable cells A(1,1), A(1,3), A(3,1), A(3,3).
inline StructuredPattern four_cell() {
  return StructuredPattern::from_indices(5, 4, {0, 2}, {0, 2});
}

// A(1,1), A(1,3).
inline StructuredPattern two_cell() {
  return StructuredPattern::from_indices(5, 4, {0}, {0, 2});
}

inline const Complex kExample2Point{0.8297, 0.5583};

inline RealMatrix random_real(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal;
  RealMatrix M(rows, cols);
  for (Index i = 0; i < M.size(); ++i) M(i) = normal(rng);
  return M;
}

inline ComplexMatrix random_complex(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal;
  ComplexMatrix M(rows, cols);
  for (Index i = 0; i < M.size(); ++i) M(i) = Complex(normal(rng), normal(rng));
  return M;
}

inline StateSpaceSystem random_system(std::mt19937_64& rng, Index n, Index m, Index p) {
  return StateSpaceSystem(random_real(rng, n, n), random_real(rng, n, p),
                          random_real(rng, m, n), random_real(rng, m, p));
}

inline std::string data_file(const std::string& name) {
  return std::string(OPACITY_DATA_DIR) + "/" + name;
}

}  // namespace opacity::testing
