#pragma once

#include <cstdint>
#include <vector>

#include "opacity/linalg.hpp"

namespace opacity {

// x(k+1) = A x(k) + B u(k),  y(k) = C x(k) + D u(k)
class StateSpaceSystem {
 public:
  StateSpaceSystem(RealMatrix A, RealMatrix B, RealMatrix C, RealMatrix D,
                   bool transposed = false);

  const RealMatrix& A() const { return A_; }
  const RealMatrix& B() const { return B_; }
  const RealMatrix& C() const { return C_; }
  const RealMatrix& D() const { return D_; }

  Index states() const { return A_.rows(); }   // n
  Index outputs() const { return C_.rows(); }  // m
  Index inputs() const { return B_.cols(); }   // p

  // True when this is the dual (A^T, C^T, B^T, D^T) of a user system.
  bool transposed() const { return transposed_; }

  // [A B; C D], i.e. Lambda_s at s = 0.
  RealMatrix system_matrix() const;
  // diag(I_n, 0) of size (n+m) x (n+p), so Lambda_s = Lambda_0 - s K.
  RealMatrix shift_selector() const;

 private:
  RealMatrix A_, B_, C_, D_;
  bool transposed_ = false;
};

StateSpaceSystem transpose_system(const StateSpaceSystem& sys);

// Returns the dual system when m < p, otherwise the system unchanged.
StateSpaceSystem normalize_orientation(const StateSpaceSystem& sys);

ComplexMatrix lambda_pencil(const StateSpaceSystem& sys, Complex s);

// Subtracts the blocks of delta_full from [A B; C D].
StateSpaceSystem apply_perturbation(const StateSpaceSystem& sys,
                                    const RealMatrix& delta_full);

struct ZeroOptions {
  double rank_tol = 1e-8;   // confirmation of each candidate
  double match_tol = 1e-6;  // agreement between the two compressions
  std::uint64_t seed = 0;
};

struct ZeroSet {
  bool entire_plane = false;
  std::vector<Complex> points;

  bool empty() const { return !entire_plane && points.empty(); }
};

// Finite s where rank(P0 - s K) falls below the normal rank of the pencil.
// Rectangular pencils are squeezed to the normal rank by two independent
// random orthogonal compressions; only eigenvalues common to both that also
// pass a rank test on the original pencil are kept.
std::vector<Complex> pencil_zeros(const RealMatrix& P0, const RealMatrix& K,
                                  const ZeroOptions& options = {},
                                  Index* normal_rank = nullptr);

// Requires m >= p (see normalize_orientation).
ZeroSet invariant_zeros(const StateSpaceSystem& sys,
                        const ZeroOptions& options = {});

struct SubspaceBasis {
  RealMatrix basis;           // n x w, orthonormal columns
  std::vector<Index> trace;   // dimension after each iteration

  Index dimension() const { return basis.cols(); }
};

// Largest V with A V + B U subset of V and C V + D U = 0, by the fixed-point
// iteration V_{k+1} = {x in V_k : exists u, A x + B u in V_k, C x + D u = 0}.
SubspaceBasis weakly_unobservable_subspace(const StateSpaceSystem& sys,
                                           double rank_tol = kRankTol);

}  // namespace opacity
