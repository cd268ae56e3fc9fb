#include "opacity/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace opacity {
namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += "\n  " + s;
  return out;
}

// "parse error at line L, column C: ..." without the library's error-id prefix.
std::string parse_message(const json::parse_error& e) {
  std::string what = e.what();
  const auto pos = what.find("] ");
  return pos == std::string::npos ? what : what.substr(pos + 2);
}

std::optional<double> read_number(const json& obj, const char* key, const std::string& field,
                                  std::vector<std::string>& diags, bool positive) {
  if (!obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    diags.push_back(field + ": expected a number");
    return std::nullopt;
  }
  const double x = v.get<double>();
  if (positive && !(x > 0.0)) {
    diags.push_back(field + ": must be positive");
    return std::nullopt;
  }
  return x;
}

std::vector<Index> read_indices(const json& obj, const char* key, Index limit,
                                const std::string& field, std::vector<std::string>& diags) {
  std::vector<Index> out;
  if (!obj.contains(key)) {
    diags.push_back(field + ": missing");
    return out;
  }
  const json& arr = obj.at(key);
  if (!arr.is_array() || arr.empty()) {
    diags.push_back(field + ": expected a nonempty array of 1-based indices");
    return out;
  }
  std::string bad;
  for (const json& v : arr) {
    if (!v.is_number_integer()) {
      diags.push_back(field + ": indices must be integers");
      return {};
    }
    const long i = v.get<long>();
    if (i < 1 || i > limit) {
      bad += " " + std::to_string(i);
    } else {
      out.push_back(static_cast<Index>(i - 1));
    }
  }
  if (!bad.empty()) {
    diags.push_back(field + ": out of range 1.." + std::to_string(limit) + ":" + bad);
  }
  return out;
}

}  // namespace

ProblemError::ProblemError(std::vector<std::string> diagnostics)
    : std::runtime_error("malformed problem:" + join(diagnostics)),
      diagnostics_(std::move(diagnostics)) {}

json to_json(const RealMatrix& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

json to_json(Complex z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

RealMatrix matrix_from_json(const json& j, const std::string& field,
                            std::vector<std::string>& diagnostics) {
  if (!j.is_array() || j.empty()) {
    diagnostics.push_back(field + ": expected a nonempty array of rows");
    return {};
  }
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) {
    diagnostics.push_back(field + ": rows must be nonempty arrays");
    return {};
  }
  RealMatrix M(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& row = j[i];
    if (!row.is_array() || row.size() != cols) {
      diagnostics.push_back(field + ": row " + std::to_string(i + 1) + " has " +
                            (row.is_array() ? std::to_string(row.size()) : "no") +
                            " entries, expected " + std::to_string(cols));
      return {};
    }
    for (std::size_t k = 0; k < cols; ++k) {
      if (!row[k].is_number()) {
        diagnostics.push_back(field + ": entry (" + std::to_string(i + 1) + "," +
                              std::to_string(k + 1) + ") is not a number");
        return {};
      }
      M(static_cast<Index>(i), static_cast<Index>(k)) = row[k].get<double>();
    }
  }
  return M;
}

ProblemFile parse_problem_json(const json& doc) {
  std::vector<std::string> diags;
  if (!doc.is_object()) throw ProblemError({"root: expected a JSON object"});

  RealMatrix blocks[4];
  const char* names[4] = {"A", "B", "C", "D"};
  bool have_all = true;
  if (!doc.contains("system") || !doc.at("system").is_object()) {
    diags.push_back("system: missing or not an object");
    have_all = false;
  } else {
    const json& sys = doc.at("system");
    for (int k = 0; k < 4; ++k) {
      const std::string field = std::string("system.") + names[k];
      if (!sys.contains(names[k])) {
        diags.push_back(field + ": missing");
        have_all = false;
        continue;
      }
      const std::size_t before = diags.size();
      blocks[k] = matrix_from_json(sys.at(names[k]), field, diags);
      if (diags.size() != before) have_all = false;
    }
  }

  std::optional<StateSpaceSystem> system;
  if (have_all) {
    const RealMatrix &A = blocks[0], &B = blocks[1], &C = blocks[2], &D = blocks[3];
    const std::size_t before = diags.size();
    if (A.rows() != A.cols()) diags.push_back("system.A: must be square");
    if (B.rows() != A.rows()) diags.push_back("system.B: row count must equal that of A");
    if (C.cols() != A.cols()) diags.push_back("system.C: column count must equal that of A");
    if (D.rows() != C.rows()) diags.push_back("system.D: row count must equal that of C");
    if (D.cols() != B.cols()) diags.push_back("system.D: column count must equal that of B");
    for (int k = 0; k < 4; ++k) {
      if (!blocks[k].allFinite()) diags.push_back(std::string("system.") + names[k] + ": non-finite entry");
    }
    if (diags.size() == before) system.emplace(A, B, C, D);
  }

  std::optional<StructuredPattern> structured;
  std::optional<AffinePattern> affine;
  if (doc.contains("pattern")) {
    const json& pat = doc.at("pattern");
    if (!pat.is_object() || !pat.contains("kind") || !pat.at("kind").is_string()) {
      diags.push_back("pattern: expected an object with a string \"kind\"");
    } else if (system) {
      const Index rows = system->states() + system->outputs();
      const Index cols = system->states() + system->inputs();
      const std::string kind = pat.at("kind").get<std::string>();
      if (kind == "structured") {
        const std::size_t before = diags.size();
        const auto r = read_indices(pat, "rows", rows, "pattern.rows", diags);
        const auto c = read_indices(pat, "cols", cols, "pattern.cols", diags);
        if (diags.size() == before) structured = StructuredPattern::from_indices(rows, cols, r, c);
      } else if (kind == "affine") {
        if (!pat.contains("cells") || !pat.at("cells").is_array() || pat.at("cells").empty()) {
          diags.push_back("pattern.cells: expected a nonempty array of [row, col] pairs");
        } else {
          std::vector<Cell> cells;
          std::string bad;
          bool shape_ok = true;
          for (const json& cell : pat.at("cells")) {
            if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number_integer() ||
                !cell[1].is_number_integer()) {
              shape_ok = false;
              continue;
            }
            const long i = cell[0].get<long>();
            const long j = cell[1].get<long>();
            if (i < 1 || i > rows || j < 1 || j > cols) {
              bad += " (" + std::to_string(i) + "," + std::to_string(j) + ")";
            } else {
              cells.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1)});
            }
          }
          if (!shape_ok) diags.push_back("pattern.cells: every cell must be an integer pair [row, col]");
          if (!bad.empty()) {
            diags.push_back("pattern.cells: out of range for a " + std::to_string(rows) + "x" +
                            std::to_string(cols) + " target:" + bad);
          }
          if (shape_ok && bad.empty()) affine = AffinePattern(rows, cols, cells);
        }
      } else {
        diags.push_back("pattern.kind: expected \"structured\" or \"affine\", got \"" + kind + "\"");
      }
    }
  }

  ProblemOptions options;
  if (doc.contains("options")) {
    const json& o = doc.at("options");
    if (!o.is_object()) {
      diags.push_back("options: expected an object");
    } else {
      static const std::vector<std::string> known = {
          "theta_step", "tau", "eps_zeta", "rank_tol", "seed", "epsilon", "max_outer"};
      for (auto it = o.begin(); it != o.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
          diags.push_back("options." + it.key() + ": unknown option");
        }
      }
      if (auto v = read_number(o, "theta_step", "options.theta_step", diags, true)) options.theta_step = *v;
      if (auto v = read_number(o, "tau", "options.tau", diags, true)) options.tau = *v;
      if (auto v = read_number(o, "eps_zeta", "options.eps_zeta", diags, true)) {
        if (*v >= 1.0) {
          diags.push_back("options.eps_zeta: must lie in (0, 1)");
        } else {
          options.eps_zeta = *v;
        }
      }
      if (auto v = read_number(o, "rank_tol", "options.rank_tol", diags, true)) options.rank_tol = *v;
      if (auto v = read_number(o, "epsilon", "options.epsilon", diags, true)) options.epsilon = *v;
      if (o.contains("seed")) {
        if (!o.at("seed").is_number_unsigned()) {
          diags.push_back("options.seed: expected a nonnegative integer");
        } else {
          options.seed = o.at("seed").get<std::uint64_t>();
        }
      }
      if (o.contains("max_outer")) {
        if (!o.at("max_outer").is_number_integer() || o.at("max_outer").get<long>() < 1) {
          diags.push_back("options.max_outer: expected a positive integer");
        } else {
          options.max_outer = o.at("max_outer").get<int>();
        }
      }
    }
  }

  if (!diags.empty()) throw ProblemError(diags);
  return ProblemFile{*system, structured, affine, options};
}

ProblemFile parse_problem_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProblemError({"json: " + parse_message(e)});
  }
  return parse_problem_json(doc);
}

ProblemFile parse_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProblemError({path + ": cannot open file"});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem_text(buf.str());
}

NormalizedProblem normalize(const ProblemFile& problem) {
  const bool flip = problem.system.outputs() < problem.system.inputs();
  NormalizedProblem out{normalize_orientation(problem.system), problem.structured,
                        problem.affine, flip};
  if (flip) {
    if (out.structured) out.structured = out.structured->transposed();
    if (out.affine) out.affine = out.affine->transposed();
  }
  return out;
}

StructuredOptions structured_options(const ProblemOptions& options) {
  StructuredOptions s;
  s.theta_step = options.theta_step;
  s.rank_tol = options.rank_tol;
  s.seed = options.seed;
  s.epsilon = options.epsilon;
  return s;
}

AffineConfig affine_config(const ProblemOptions& options) {
  AffineConfig c;
  c.tau = options.tau;
  c.eps_zeta = options.eps_zeta;
  c.seed = options.seed;
  c.max_outer = options.max_outer;
  return c;
}

json verification_block(const StateSpaceSystem& sys, const RealMatrix& delta,
                        const ProblemOptions& options) {
  const StateSpaceSystem perturbed = apply_perturbation(sys, delta);
  ZeroOptions zo;
  zo.seed = options.seed;
  const ZeroSet zeros = invariant_zeros(perturbed, zo);
  const SubspaceBasis wus = weakly_unobservable_subspace(perturbed, options.rank_tol);
  json z = json::array();
  json ratio = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const Complex& s : zeros.points) {
    z.push_back(to_json(s));
    const RealVector sv = singular_values(lambda_pencil(perturbed, s));
    if (sv(0) > 0.0) best = std::min(best, sv(sv.size() - 1) / sv(0));
  }
  if (std::isfinite(best)) ratio = best;
  return json{{"invariant_zeros", z},
              {"entire_plane", zeros.entire_plane},
              {"wus_dimension", wus.dimension()},
              {"min_rank_ratio", ratio},
              {"opaque", wus.dimension() > 0}};
}

RealMatrix parse_delta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProblemError({path + ": cannot open file"});
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProblemError({"json: " + parse_message(e)});
  }
  std::vector<std::string> diags;
  RealMatrix delta;
  if (doc.is_object() && doc.contains("delta")) {
    delta = matrix_from_json(doc.at("delta"), "delta", diags);
  } else if (doc.is_object() && doc.contains("solution") && doc.at("solution").is_object() &&
             doc.at("solution").contains("delta")) {
    delta = matrix_from_json(doc.at("solution").at("delta"), "solution.delta", diags);
  } else {
    diags.push_back("delta: missing (expected \"delta\" or \"solution.delta\")");
  }
  if (!diags.empty()) throw ProblemError(diags);
  return delta;
}

}  // namespace opacity
