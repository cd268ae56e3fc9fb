#pragma once

#include <stdexcept>
#include <string>

namespace opacity {

enum class Infeasibility {
  none,
  // Lambda^beta keeps full column rank, so no x survives the fixed rows.
  complement_full_rank,
  // Every null vector of Lambda^beta vanishes on the perturbable columns.
  no_perturbable_direction,
  // Both conditions hold, but the supremum over gamma is unbounded: only a
  // complex perturbation would place a zero at s.
  no_real_perturbation,
};

std::string describe(Infeasibility reason);

class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(Infeasibility reason, const std::string& what)
      : std::runtime_error(what), reason_(reason) {}
  Infeasibility reason() const { return reason_; }

 private:
  Infeasibility reason_;
};

// A solver stopped without meeting its convergence test. Solvers that can
// offer a partial result derive from this and carry it.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace opacity
