#include "opacity/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace opacity {
namespace {

// Hestenes one-sided Jacobi: orthogonalizes the columns of X in place.
// Rotation angles are formed from normalized columns so that columns whose
// norms differ by hundreds of orders of magnitude neither overflow nor
// underflow.
void orthogonalize_columns(RealMatrix& X) {
  const Index k = X.cols();
  const double eps = std::numeric_limits<double>::epsilon();
  const double tol = eps * std::max<Index>(X.rows(), 1);
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (Index i = 0; i < k; ++i) {
      for (Index j = i + 1; j < k; ++j) {
        const double ni = X.col(i).stableNorm();
        const double nj = X.col(j).stableNorm();
        if (ni == 0.0 || nj == 0.0) continue;
        const double c = (X.col(i) / ni).dot(X.col(j) / nj);
        if (!(std::abs(c) > tol)) continue;
        rotated = true;
        const double zeta = (nj / ni - ni / nj) / (2.0 * c);
        double t;
        if (std::isinf(zeta)) {
          t = 0.0;
        } else {
          t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        }
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        const RealVector xi = X.col(i);
        X.col(i) = cs * xi - sn * X.col(j);
        X.col(j) = sn * xi + cs * X.col(j);
      }
    }
    if (!rotated) break;
  }
}

RealVector accurate_singular_values(const RealMatrix& input) {
  RealMatrix A = input.rows() < input.cols() ? RealMatrix(input.transpose())
                                             : input;
  const Index t = A.cols();
  if (t == 0) return RealVector(0);
  if (!A.allFinite()) {
    throw std::domain_error("singular_values: non-finite entries");
  }
  const double amax = A.cwiseAbs().maxCoeff();
  if (amax == 0.0) return RealVector::Zero(t);
  const int shift = -std::ilogb(amax);
  A *= std::ldexp(1.0, shift);

  // Rows in decreasing size so the pivoted QR sees the dominant rows first.
  std::vector<Index> order(A.rows());
  std::iota(order.begin(), order.end(), Index{0});
  RealVector row_size(A.rows());
  for (Index i = 0; i < A.rows(); ++i) row_size(i) = A.row(i).cwiseAbs().maxCoeff();
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return row_size(a) > row_size(b); });
  RealMatrix sorted(A.rows(), t);
  for (Index i = 0; i < A.rows(); ++i) sorted.row(i) = A.row(order[i]);

  Eigen::ColPivHouseholderQR<RealMatrix> qr(sorted);
  RealMatrix R = qr.matrixQR().topRows(t).triangularView<Eigen::Upper>();
  RealMatrix X = R.transpose();
  orthogonalize_columns(X);

  RealVector sv(t);
  for (Index j = 0; j < t; ++j) sv(j) = X.col(j).stableNorm();
  std::sort(sv.data(), sv.data() + t, std::greater<>());
  return sv * std::ldexp(1.0, -shift);
}

template <typename Scalar>
Matrix<Scalar> orthonormal_range(const Matrix<Scalar>& Y) {
  Eigen::HouseholderQR<Matrix<Scalar>> qr(Y);
  return qr.householderQ() * Matrix<Scalar>::Identity(Y.rows(), Y.cols());
}

}  // namespace

RealVector singular_values(const RealMatrix& M) {
  return accurate_singular_values(M);
}

RealVector singular_values(const ComplexMatrix& M) {
  const Index r = M.rows();
  const Index t = M.cols();
  RealMatrix lift(2 * r, 2 * t);
  lift << M.real(), -M.imag(), M.imag(), M.real();
  const RealVector doubled = accurate_singular_values(lift);
  RealVector sv(std::min(r, t));
  for (Index i = 0; i < sv.size(); ++i) sv(i) = doubled(2 * i);
  return sv;
}

template <typename Scalar>
void ruiz_equilibrate(const Matrix<Scalar>& M, RealVector& row_scale,
                      RealVector& col_scale) {
  row_scale = RealVector::Ones(M.rows());
  col_scale = RealVector::Ones(M.cols());
  RealMatrix S = M.cwiseAbs();
  auto power_of_two = [](double v) {
    // 2^round(-log2(sqrt(v)))
    int e;
    std::frexp(v, &e);
    return std::ldexp(1.0, -(e / 2));
  };
  for (int it = 0; it < 40; ++it) {
    bool changed = false;
    for (Index i = 0; i < S.rows(); ++i) {
      const double m = S.row(i).maxCoeff();
      if (m == 0.0) continue;
      const double f = power_of_two(m);
      if (f != 1.0) {
        S.row(i) *= f;
        row_scale(i) *= f;
        changed = true;
      }
    }
    for (Index j = 0; j < S.cols(); ++j) {
      const double m = S.col(j).maxCoeff();
      if (m == 0.0) continue;
      const double f = power_of_two(m);
      if (f != 1.0) {
        S.col(j) *= f;
        col_scale(j) *= f;
        changed = true;
      }
    }
    if (!changed) break;
  }
}

template void ruiz_equilibrate<double>(const RealMatrix&, RealVector&,
                                       RealVector&);
template void ruiz_equilibrate<Complex>(const ComplexMatrix&, RealVector&,
                                        RealVector&);

double spectral_norm(const RealMatrix& M) {
  if (M.size() == 0) return 0.0;
  return Eigen::JacobiSVD<RealMatrix>(M).singularValues()(0);
}

double nuclear_norm(const RealMatrix& Z) {
  if (Z.size() == 0) return 0.0;
  return Eigen::JacobiSVD<RealMatrix>(Z).singularValues().sum();
}

double ky_fan(const RealMatrix& Z, Index r) {
  const Index k = std::min(Z.rows(), Z.cols());
  if (r < 0 || r > k) throw std::out_of_range("ky_fan: r out of range");
  if (r == 0) return 0.0;
  return Eigen::JacobiSVD<RealMatrix>(Z).singularValues().head(r).sum();
}

namespace detail {

template <typename Scalar>
Matrix<Scalar> nullspace_basis(const Matrix<Scalar>& M,
                               const NullspaceOptions& options) {
  const Index n = M.cols();
  if (n == 0) return Matrix<Scalar>(0, 0);
  if (M.rows() == 0) return Matrix<Scalar>::Identity(n, n);

  RealVector rs, cs;
  if (options.equilibrate) {
    ruiz_equilibrate<Scalar>(M, rs, cs);
  } else {
    rs = RealVector::Ones(M.rows());
    cs = RealVector::Ones(n);
  }
  const Matrix<Scalar> S = rs.asDiagonal() * M * cs.asDiagonal();
  Eigen::JacobiSVD<Matrix<Scalar>> svd(S, Eigen::ComputeFullV);
  const RealVector& sv = svd.singularValues();
  Index rank = 0;
  if (sv.size() > 0 && sv(0) > 0.0) {
    rank = (sv.array() > options.rank_tol * sv(0)).count();
  }
  if (rank == n) return Matrix<Scalar>(n, 0);
  Matrix<Scalar> Y = svd.matrixV().rightCols(n - rank);
  if (!options.equilibrate) return Y;
  return orthonormal_range<Scalar>(cs.asDiagonal() * Y);
}

template <typename Scalar>
GsvdResult gsvd_values(const Matrix<Scalar>& M, const Matrix<Scalar>& N,
                       double rank_tol) {
  if (M.cols() != N.cols()) {
    throw std::invalid_argument("gsvd_values: column counts differ");
  }
  const Index t = M.cols();
  GsvdResult out;
  out.values = RealVector::Zero(t);
  if (t == 0) return out;

  const Index rank_n = N.rows() == 0 ? 0 : rank_with_tol(N, rank_tol);
  if (rank_n == t) {
    Eigen::HouseholderQR<Matrix<Scalar>> qr(N);
    const Matrix<Scalar> R =
        qr.matrixQR().topRows(t).template triangularView<Eigen::Upper>();
    // X R = M  <=>  R^T X^T = M^T
    const Matrix<Scalar> X = R.transpose()
                                 .template triangularView<Eigen::Lower>()
                                 .solve(M.transpose())
                                 .transpose();
    if (X.size() > 0) {
      const RealVector sv = singular_values(X);
      out.values.head(sv.size()) = sv;
    }
    out.finite_count = t;
    return out;
  }

  // Deflate the common directions. With W = ker N, M W carries the infinite
  // values; the rest reduces to a full-rank pair on the complement of W.
  Eigen::JacobiSVD<Matrix<Scalar>> svd_n(N, Eigen::ComputeFullV);
  const Matrix<Scalar> W = svd_n.matrixV().rightCols(t - rank_n);
  const Matrix<Scalar> Wp = svd_n.matrixV().leftCols(rank_n);
  const Matrix<Scalar> MW = M * W;
  Index inf_count = 0;
  Matrix<Scalar> Mp = M * Wp;
  if (MW.size() > 0 && MW.cwiseAbs().maxCoeff() > 0.0) {
    const double scale = std::max(singular_values(M)(0), 1e-300);
    Eigen::JacobiSVD<Matrix<Scalar>> svd_mw(MW, Eigen::ComputeFullU);
    const RealVector& sv = svd_mw.singularValues();
    inf_count = (sv.array() > rank_tol * scale).count();
    if (inf_count > 0) {
      const Matrix<Scalar> U = svd_mw.matrixU().leftCols(inf_count);
      Mp -= U * (U.adjoint() * Mp);
    }
  }
  const Index finite = rank_n;
  for (Index i = 0; i < inf_count; ++i) {
    out.values(i) = std::numeric_limits<double>::infinity();
  }
  if (finite > 0) {
    const GsvdResult sub = gsvd_values<Scalar>(Mp, N * Wp, rank_tol);
    out.values.segment(inf_count, finite) = sub.values;
  }
  out.finite_count = t - inf_count;
  return out;
}

template GsvdResult gsvd_values<double>(const RealMatrix&, const RealMatrix&,
                                        double);
template GsvdResult gsvd_values<Complex>(const ComplexMatrix&,
                                         const ComplexMatrix&, double);
template RealMatrix nullspace_basis<double>(const RealMatrix&,
                                            const NullspaceOptions&);
template ComplexMatrix nullspace_basis<Complex>(const ComplexMatrix&,
                                                const NullspaceOptions&);

RealMatrix real_lift_solve(const ComplexMatrix& Y, const ComplexMatrix& X,
                           double rank_tol) {
  if (Y.cols() != X.cols()) {
    throw std::invalid_argument("real_lift_solve: column counts differ");
  }
  const Index w = X.cols();
  RealMatrix Xr(X.rows(), 2 * w);
  Xr << X.real(), X.imag();
  RealMatrix Yr(Y.rows(), 2 * w);
  Yr << Y.real(), Y.imag();
  if (Xr.size() == 0 || !(Xr.cwiseAbs().maxCoeff() > 0.0)) {
    throw std::domain_error("real_lift_solve: no perturbation direction");
  }
  Eigen::JacobiSVD<RealMatrix> svd(Xr, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& sv = svd.singularValues();
  RealVector inv = RealVector::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rank_tol * sv(0)) inv(i) = 1.0 / sv(i);
  }
  // Yr * V diag(inv) U^T
  return ((Yr * svd.matrixV()) * inv.asDiagonal()) * svd.matrixU().transpose();
}

}  // namespace detail
}  // namespace opacity
