#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "opacity/affine.hpp"
#include "opacity/sparsity.hpp"
#include "opacity/structured.hpp"
#include "opacity/system.hpp"

namespace opacity {

struct ProblemOptions {
  double theta_step = 0.01;
  double tau = 1e-8;
  double eps_zeta = 1e-4;
  double rank_tol = kRankTol;
  std::uint64_t seed = 0;
  std::optional<double> epsilon;
  int max_outer = 20000;
};

// A problem as written by the user: indices refer to the user's
// orientation, which may have m < p.
struct ProblemFile {
  StateSpaceSystem system;
  std::optional<StructuredPattern> structured;
  std::optional<AffinePattern> affine;
  ProblemOptions options;
};

// All schema problems found in one pass, each as "field: message".
class ProblemError : public std::runtime_error {
 public:
  explicit ProblemError(std::vector<std::string> diagnostics);
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

ProblemFile parse_problem(const std::string& path);
ProblemFile parse_problem_text(const std::string& text);
ProblemFile parse_problem_json(const nlohmann::json& doc);

// The problem in m >= p orientation with patterns transposed to match.
struct NormalizedProblem {
  StateSpaceSystem system;
  std::optional<StructuredPattern> structured;
  std::optional<AffinePattern> affine;
  bool transposed = false;
};

NormalizedProblem normalize(const ProblemFile& problem);

StructuredOptions structured_options(const ProblemOptions& options);
AffineConfig affine_config(const ProblemOptions& options);

// Rank and WUS facts about sys - delta. Depends only on its arguments, so
// re-verifying a stored perturbation reproduces it exactly.
nlohmann::json verification_block(const StateSpaceSystem& sys, const RealMatrix& delta,
                                  const ProblemOptions& options);

nlohmann::json to_json(const RealMatrix& M);
nlohmann::json to_json(Complex z);
RealMatrix matrix_from_json(const nlohmann::json& j, const std::string& field,
                            std::vector<std::string>& diagnostics);

// Perturbation read back from either {"delta": [[...]]} or a result record
// carrying solution.delta; the matrix is in the user's orientation.
RealMatrix parse_delta(const std::string& path);

}  // namespace opacity
