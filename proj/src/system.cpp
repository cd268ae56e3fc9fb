#include "opacity/system.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace opacity {
namespace {

bool all_finite(const RealMatrix& M) { return M.allFinite(); }

RealMatrix random_orthonormal_rows(Index k, Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  RealMatrix G(n, k);
  for (Index i = 0; i < G.size(); ++i) G.data()[i] = normal(rng);
  Eigen::HouseholderQR<RealMatrix> qr(G);
  RealMatrix Q = qr.householderQ() * RealMatrix::Identity(n, k);
  return Q.transpose();
}

std::vector<Complex> compressed_eigenvalues(const RealMatrix& P0,
                                            const RealMatrix& K, Index rho,
                                            std::mt19937_64& rng) {
  const RealMatrix L = P0.rows() == rho ? RealMatrix::Identity(rho, rho)
                                        : random_orthonormal_rows(rho, P0.rows(), rng);
  const RealMatrix R = P0.cols() == rho
                           ? RealMatrix::Identity(rho, rho)
                           : RealMatrix(random_orthonormal_rows(rho, P0.cols(), rng).transpose());
  const RealMatrix A = L * P0 * R;
  const RealMatrix B = L * K * R;
  Eigen::GeneralizedEigenSolver<RealMatrix> ges(A, B, false);
  const double scale = 1.0 + A.cwiseAbs().maxCoeff() / std::max(B.cwiseAbs().maxCoeff(), 1e-300);
  std::vector<Complex> out;
  for (Index i = 0; i < rho; ++i) {
    const Complex alpha = ges.alphas()(i);
    const double beta = ges.betas()(i);
    if (beta == 0.0) continue;
    const Complex s = alpha / beta;
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) continue;
    if (std::abs(s) > 1e10 * scale) continue;
    out.push_back(s);
  }
  return out;
}

Complex tidy(Complex s) {
  if (std::abs(s.imag()) <= 1e-12 * (1.0 + std::abs(s))) s.imag(0.0);
  return s;
}

}  // namespace

StateSpaceSystem::StateSpaceSystem(RealMatrix A, RealMatrix B, RealMatrix C,
                                   RealMatrix D, bool transposed)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)),
      transposed_(transposed) {
  const Index n = A_.rows();
  std::string problems;
  if (A_.cols() != n) problems += " A is not square;";
  if (B_.rows() != n) problems += " B row count differs from A;";
  if (C_.cols() != n) problems += " C column count differs from A;";
  if (D_.rows() != C_.rows()) problems += " D row count differs from C;";
  if (D_.cols() != B_.cols()) problems += " D column count differs from B;";
  if (n == 0) problems += " no states;";
  if (!all_finite(A_) || !all_finite(B_) || !all_finite(C_) || !all_finite(D_)) {
    problems += " non-finite entries;";
  }
  if (!problems.empty()) {
    throw std::invalid_argument("StateSpaceSystem:" + problems);
  }
}

RealMatrix StateSpaceSystem::system_matrix() const {
  RealMatrix L(states() + outputs(), states() + inputs());
  L << A_, B_, C_, D_;
  return L;
}

RealMatrix StateSpaceSystem::shift_selector() const {
  RealMatrix K = RealMatrix::Zero(states() + outputs(), states() + inputs());
  K.topLeftCorner(states(), states()).setIdentity();
  return K;
}

StateSpaceSystem transpose_system(const StateSpaceSystem& sys) {
  return StateSpaceSystem(sys.A().transpose(), sys.C().transpose(),
                          sys.B().transpose(), sys.D().transpose(),
                          !sys.transposed());
}

StateSpaceSystem normalize_orientation(const StateSpaceSystem& sys) {
  if (sys.outputs() >= sys.inputs()) return sys;
  return transpose_system(sys);
}

ComplexMatrix lambda_pencil(const StateSpaceSystem& sys, Complex s) {
  ComplexMatrix L = sys.system_matrix().cast<Complex>();
  L.topLeftCorner(sys.states(), sys.states()).diagonal().array() -= s;
  return L;
}

StateSpaceSystem apply_perturbation(const StateSpaceSystem& sys,
                                    const RealMatrix& delta_full) {
  const Index n = sys.states();
  const Index m = sys.outputs();
  const Index p = sys.inputs();
  if (delta_full.rows() != n + m || delta_full.cols() != n + p) {
    throw std::invalid_argument("apply_perturbation: expected a " +
                                std::to_string(n + m) + "x" +
                                std::to_string(n + p) + " perturbation");
  }
  return StateSpaceSystem(sys.A() - delta_full.topLeftCorner(n, n),
                          sys.B() - delta_full.topRightCorner(n, p),
                          sys.C() - delta_full.bottomLeftCorner(m, n),
                          sys.D() - delta_full.bottomRightCorner(m, p),
                          sys.transposed());
}

std::vector<Complex> pencil_zeros(const RealMatrix& P0, const RealMatrix& K,
                                  const ZeroOptions& options,
                                  Index* normal_rank) {
  if (P0.rows() != K.rows() || P0.cols() != K.cols()) {
    throw std::invalid_argument("pencil_zeros: pencil blocks differ in shape");
  }
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;
  const double scale = 1.0 + P0.cwiseAbs().maxCoeff();

  Index rho = 0;
  for (int probe = 0; probe < 3; ++probe) {
    const Complex s(scale * normal(rng), scale * normal(rng));
    const ComplexMatrix P = P0.cast<Complex>() - s * K.cast<Complex>();
    // Graded data (entries spanning many decades) hides rank from a relative
    // tolerance; exact power-of-two scaling at a generic point restores it.
    RealVector r, c;
    ruiz_equilibrate(P, r, c);
    rho = std::max(rho, rank_with_tol(r.asDiagonal() * P * c.asDiagonal(),
                                      options.rank_tol));
  }
  if (normal_rank) *normal_rank = rho;
  if (rho == 0) return {};

  const bool square = P0.rows() == rho && P0.cols() == rho;
  const std::vector<Complex> first = compressed_eigenvalues(P0, K, rho, rng);
  const std::vector<Complex> second =
      square ? first : compressed_eigenvalues(P0, K, rho, rng);

  std::vector<Complex> out;
  for (const Complex& s : first) {
    const double tol = options.match_tol * (1.0 + std::abs(s));
    const bool matched = std::any_of(second.begin(), second.end(), [&](const Complex& z) {
      return std::abs(z - s) <= tol;
    });
    if (!matched) continue;
    const ComplexMatrix P = P0.cast<Complex>() - s * K.cast<Complex>();
    if (rank_with_tol(P, options.rank_tol) >= rho) continue;
    const Complex z = tidy(s);
    const bool seen = std::any_of(out.begin(), out.end(), [&](const Complex& w) {
      return std::abs(w - z) <= tol;
    });
    if (!seen) out.push_back(z);
  }
  std::sort(out.begin(), out.end(), [](const Complex& a, const Complex& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return out;
}

ZeroSet invariant_zeros(const StateSpaceSystem& sys, const ZeroOptions& options) {
  if (sys.outputs() < sys.inputs()) {
    throw std::invalid_argument(
        "invariant_zeros: expects m >= p; normalize the orientation first");
  }
  ZeroSet out;
  Index rho = 0;
  out.points = pencil_zeros(sys.system_matrix(), sys.shift_selector(), options, &rho);
  if (rho < sys.states() + sys.inputs()) {
    out.entire_plane = true;
    out.points.clear();
  }
  return out;
}

SubspaceBasis weakly_unobservable_subspace(const StateSpaceSystem& sys,
                                           double rank_tol) {
  const Index n = sys.states();
  const Index m = sys.outputs();
  const Index p = sys.inputs();
  SubspaceBasis out;
  RealMatrix V = RealMatrix::Identity(n, n);
  out.trace.push_back(n);
  for (Index iter = 0; iter < n + 1 && V.cols() > 0; ++iter) {
    const Index k = V.cols();
    const RealMatrix proj = RealMatrix::Identity(n, n) - V * V.transpose();
    RealMatrix T(n + m, k + p);
    T << proj * sys.A() * V, proj * sys.B(), sys.C() * V, sys.D();
    const RealMatrix ker = nullspace_basis(T, NullspaceOptions{rank_tol, false});
    RealMatrix next(n, 0);
    if (ker.cols() > 0) {
      // State parts of the kernel, mapped back to R^n.
      Eigen::JacobiSVD<RealMatrix> svd(V * ker.topRows(k), Eigen::ComputeThinU);
      const RealVector& sv = svd.singularValues();
      const Index w = (sv.array() > rank_tol).count();
      next = svd.matrixU().leftCols(w);
    }
    const bool stable = next.cols() == k;
    V = next;
    out.trace.push_back(V.cols());
    if (stable) break;
  }
  out.basis = V;
  return out;
}

}  // namespace opacity
