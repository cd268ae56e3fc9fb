#pragma once

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

namespace opacity {

using Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Complex = std::complex<double>;
using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<Complex>;
using RealVector = Vector<double>;
using ComplexVector = Vector<Complex>;

// Relative rank threshold used throughout unless a caller overrides it.
inline constexpr double kRankTol = 1e-9;

// Generalized singular values of a pair, largest first. Infinite values
// (directions annihilated by N but not by M) lead the list; directions
// annihilated by both are reported as 0 at the tail.
struct GsvdResult {
  RealVector values;
  Index finite_count = 0;

  Index infinite_count() const { return values.size() - finite_count; }
};

struct NullspaceOptions {
  double rank_tol = kRankTol;
  // Power-of-two row/column balancing before the SVD. Keeps graded
  // matrices (entries spanning many decades) from losing their small
  // null-vector components.
  bool equilibrate = false;
};

namespace detail {

template <typename Scalar>
GsvdResult gsvd_values(const Matrix<Scalar>& M, const Matrix<Scalar>& N,
                       double rank_tol);

template <typename Scalar>
Matrix<Scalar> nullspace_basis(const Matrix<Scalar>& M,
                               const NullspaceOptions& options);

RealMatrix real_lift_solve(const ComplexMatrix& Y, const ComplexMatrix& X,
                           double rank_tol);

}  // namespace detail

// Singular values in nonincreasing order. The real path is a one-sided
// Jacobi method applied after row sorting and a column-pivoted QR, which
// keeps high relative accuracy on graded matrices; the complex path runs
// the same kernel on the real embedding [Re -Im; Im Re].
RealVector singular_values(const RealMatrix& M);
RealVector singular_values(const ComplexMatrix& M);

template <typename Derived>
RealVector singular_values(const Eigen::MatrixBase<Derived>& M) {
  return singular_values(Matrix<typename Derived::Scalar>(M.derived()));
}

// Pi(gamma, M) = [Re M, -gamma Im M; Im M / gamma, Re M].
template <typename Derived>
RealMatrix pi_transform(double gamma, const Eigen::MatrixBase<Derived>& M) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::domain_error("pi_transform: gamma must lie in (0, 1]");
  }
  const Index r = M.rows();
  const Index t = M.cols();
  RealMatrix out(2 * r, 2 * t);
  out.topLeftCorner(r, t) = M.real();
  out.topRightCorner(r, t) = -gamma * M.imag();
  out.bottomLeftCorner(r, t) = M.imag() / gamma;
  out.bottomRightCorner(r, t) = M.real();
  return out;
}

template <typename DerivedM, typename DerivedN>
GsvdResult gsvd_values(const Eigen::MatrixBase<DerivedM>& M,
                       const Eigen::MatrixBase<DerivedN>& N,
                       double rank_tol = kRankTol) {
  using Scalar = typename DerivedM::Scalar;
  static_assert(std::is_same_v<Scalar, typename DerivedN::Scalar>,
                "gsvd_values: M and N must share a scalar type");
  return detail::gsvd_values<Scalar>(M.derived(), N.derived(), rank_tol);
}

template <typename Derived>
Matrix<typename Derived::Scalar> nullspace_basis(
    const Eigen::MatrixBase<Derived>& M, const NullspaceOptions& options = {}) {
  return detail::nullspace_basis<typename Derived::Scalar>(M.derived(),
                                                           options);
}

// Number of singular values above tol * sigma_1.
template <typename Derived>
Index rank_with_tol(const Eigen::MatrixBase<Derived>& M,
                    double tol = kRankTol) {
  if (!(tol > 0.0)) throw std::domain_error("rank_with_tol: tol must be > 0");
  if (M.size() == 0) return 0;
  const RealVector sv = singular_values(M);
  if (!(sv(0) > 0.0)) return 0;
  return (sv.array() > tol * sv(0)).count();
}

// Delta = [Re Y, Im Y] [Re X, Im X]^+; the real matrix of least spectral
// norm mapping X to Y when such a real matrix exists.
template <typename DerivedY, typename DerivedX>
RealMatrix real_lift_solve(const Eigen::MatrixBase<DerivedY>& Y,
                           const Eigen::MatrixBase<DerivedX>& X,
                           double rank_tol = 1e-12) {
  return detail::real_lift_solve(Y.derived().template cast<Complex>(),
                                 X.derived().template cast<Complex>(),
                                 rank_tol);
}

// Power-of-two scalings r, c such that diag(r) M diag(c) has rows and
// columns of comparable size. Exact in floating point.
template <typename Scalar>
void ruiz_equilibrate(const Matrix<Scalar>& M, RealVector& row_scale,
                      RealVector& col_scale);

double spectral_norm(const RealMatrix& M);
double nuclear_norm(const RealMatrix& Z);
// Sum of the r largest singular values.
double ky_fan(const RealMatrix& Z, Index r);

}  // namespace opacity
