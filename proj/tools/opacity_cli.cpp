// opacity: command-line front end for the structured and affine solvers.
//
// Exit codes: 0 ok, 1 usage, 2 malformed input, 3 infeasible, 4 no convergence.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "opacity/affine.hpp"
#include "opacity/problem.hpp"
#include "opacity/structured.hpp"
#include "opacity/system.hpp"

using namespace opacity;
using nlohmann::json;

namespace {

constexpr int kMalformed = 2;
constexpr int kInfeasible = 3;
constexpr int kNoConvergence = 4;

struct Args {
  std::string problem;
  std::string output;
  // solve-affine
  bool warm_start = false;
  bool fast = false;
  std::string history;
  std::optional<double> tau;
  std::optional<double> zeta;
  std::optional<int> max_outer;
  // surface
  std::vector<double> region;
  std::vector<long> grid;
  // verify
  std::string delta;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void emit_json(const Args& args, const json& record) { emit(args.output, record.dump(2) + "\n"); }

// Solver matrices live in the m >= p orientation; the user sees the original.
RealMatrix to_user(const NormalizedProblem& np, const RealMatrix& delta) {
  return np.transposed ? RealMatrix(delta.transpose()) : delta;
}

json cells_json(const RealMatrix& delta_user, const std::vector<Cell>& cells) {
  json out = json::array();
  for (const Cell& c : cells) {
    out.push_back({{"row", c.row + 1}, {"col", c.col + 1}, {"value", delta_user(c.row, c.col)}});
  }
  return out;
}

std::vector<Cell> user_cells(const ProblemFile& pf) {
  if (pf.affine) return pf.affine->cells();
  std::vector<Cell> cells;
  for (Index r : pf.structured->rows()) {
    for (Index c : pf.structured->cols()) cells.push_back({r, c});
  }
  return cells;
}

json header(const std::string& command, const Args& args, const NormalizedProblem& np) {
  json rec{{"command", command}, {"problem", args.problem}};
  if (np.transposed) {
    rec["notice"] =
        "system has fewer outputs than inputs; solved on the dual (A^T, C^T, B^T, D^T) and "
        "mapped back, cell coordinates refer to the original system";
  }
  return rec;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::existing_zero: return "existing_zero";
    case Regime::finite: return "finite";
    case Regime::continuous: return "continuous";
  }
  return "continuous";
}

json structured_json(const NormalizedProblem& np, const ProblemFile& pf,
                     const StructuredSolution& sol) {
  const RealMatrix delta = to_user(np, sol.delta_full);
  json incumbents = json::array();
  for (Complex s : sol.incumbents) incumbents.push_back(to_json(s));
  return {{"s", to_json(sol.s_star)},
          {"norm", sol.norm},
          {"regime", regime_name(sol.regime)},
          {"gamma", sol.gamma_star},
          {"witness_slack", sol.witness_slack},
          {"iterations", sol.iterations},
          {"incumbents", incumbents},
          {"norm_history", sol.norm_history},
          {"cells", cells_json(delta, user_cells(pf))},
          {"delta", to_json(delta)}};
}

json affine_json(const NormalizedProblem& np, const ProblemFile& pf, const AffineSolution& sol) {
  const RealMatrix delta = to_user(np, sol.delta);
  return {{"s", to_json(sol.s())},
          {"norm", sol.norm},
          {"F", sol.F()},
          {"zeta", sol.zeta},
          {"sigma_ratio", sol.sigma_ratio},
          {"status", sol.status == AffineStatus::converged ? "converged" : "max_iterations"},
          {"outer_iterations", sol.outer_iterations},
          {"inner_iterations", sol.inner_iterations},
          {"inner_limit_hits", sol.inner_limit_hits},
          {"cells", cells_json(delta, user_cells(pf))},
          {"delta", to_json(delta)}};
}

void write_history(const std::string& path, const AffineSolution& sol) {
  std::ostringstream csv;
  csv.precision(17);
  csv << "k,F,norm,lambda,mu\n";
  for (const AffineIterate& it : sol.history) {
    csv << it.k << ',' << it.F << ',' << it.norm << ',' << it.lambda << ',' << it.mu << '\n';
  }
  emit(path, csv.str());
}

StructuredPattern require_structured(const NormalizedProblem& np, const char* command) {
  if (np.structured) return *np.structured;
  if (np.affine) {
    if (auto s = np.affine->as_structured()) return *s;
    throw ProblemError({std::string("pattern: ") + command +
                        " needs a structured pattern (the affine cells do not form a "
                        "row-set x col-set rectangle)"});
  }
  throw ProblemError({std::string("pattern: missing, required by ") + command});
}

// Bounding rows x cols of the affine cells.
StructuredPattern enclosing_rectangle(const AffinePattern& pattern) {
  std::set<Index> rows, cols;
  for (const Cell& c : pattern.cells()) {
    rows.insert(c.row);
    cols.insert(c.col);
  }
  return StructuredPattern::from_indices(pattern.total_rows(), pattern.total_cols(),
                                         {rows.begin(), rows.end()}, {cols.begin(), cols.end()});
}

int cmd_zeros(const Args& args) {
  const ProblemFile pf = parse_problem(args.problem);
  const NormalizedProblem np = normalize(pf);
  ZeroOptions zo;
  zo.seed = pf.options.seed;
  const ZeroSet zs = invariant_zeros(np.system, zo);
  json rec = header("zeros", args, np);
  json pts = json::array();
  for (Complex s : zs.points) pts.push_back(to_json(s));
  rec["entire_plane"] = zs.entire_plane;
  rec["invariant_zeros"] = pts;
  emit_json(args, rec);
  return 0;
}

int cmd_wus(const Args& args) {
  const ProblemFile pf = parse_problem(args.problem);
  const SubspaceBasis wus = weakly_unobservable_subspace(pf.system, pf.options.rank_tol);
  json rec{{"command", "wus"}, {"problem", args.problem}};
  rec["dimension"] = wus.dimension();
  rec["trace"] = wus.trace;
  rec["basis"] = wus.dimension() > 0 ? to_json(wus.basis) : json::array();
  rec["opaque"] = wus.dimension() > 0;
  emit_json(args, rec);
  return 0;
}

int cmd_solve_structured(const Args& args) {
  const Timer timer;
  const ProblemFile pf = parse_problem(args.problem);
  const NormalizedProblem np = normalize(pf);
  const StructuredPattern pattern = require_structured(np, "solve-structured");
  const StructuredProblem problem(np.system, pattern, structured_options(pf.options));
  const StructuredSolution sol = problem.solve();
  json rec = header("solve-structured", args, np);
  rec["solution"] = structured_json(np, pf, sol);
  rec["verification"] = verification_block(np.system, sol.delta_full, pf.options);
  rec["timing_seconds"] = timer.seconds();
  emit_json(args, rec);
  return 0;
}

int cmd_solve_affine(const Args& args) {
  const Timer timer;
  const ProblemFile pf = parse_problem(args.problem);
  const NormalizedProblem np = normalize(pf);
  AffinePattern pattern = np.affine ? *np.affine
                        : np.structured ? AffinePattern::from_structured(*np.structured)
                                        : throw ProblemError({"pattern: missing, required by solve-affine"});

  AffineConfig config = affine_config(pf.options);
  if (args.fast) config.tau = AffineConfig::fast().tau;
  if (args.tau) config.tau = *args.tau;
  if (args.zeta) config.zeta = *args.zeta;
  if (args.max_outer) config.max_outer = *args.max_outer;

  json rec = header("solve-affine", args, np);
  std::optional<AffinePoint> init;
  if (args.warm_start) {
    const StructuredPattern rect = enclosing_rectangle(pattern);
    try {
      const StructuredProblem sp(np.system, rect, structured_options(pf.options));
      const StructuredSolution ss = sp.solve();
      init = warm_start_from_structured(ss, pattern);
      rec["warm_start"] = {{"s", to_json(ss.s_star)}, {"norm", ss.norm}};
    } catch (const InfeasibleError& e) {
      rec["warm_start"] = {{"skipped", std::string(e.what())}};
    }
  }

  int code = 0;
  AffineSolution sol;
  try {
    sol = solve_affine(np.system, pattern, init, config);
    if (sol.status != AffineStatus::converged) {
      rec["error"] = "outer iteration limit reached before |dF| <= tau";
      code = kNoConvergence;
    }
  } catch (const AffineDivergence& e) {
    sol = e.partial();
    rec["error"] = e.what();
    code = kNoConvergence;
  }
  rec["solution"] = affine_json(np, pf, sol);
  rec["verification"] = verification_block(np.system, sol.delta, pf.options);
  rec["timing_seconds"] = timer.seconds();
  if (!args.history.empty()) write_history(args.history, sol);
  emit_json(args, rec);
  if (code != 0) std::cerr << "opacity: " << rec["error"].get<std::string>() << '\n';
  return code;
}

int cmd_surface(const Args& args) {
  const ProblemFile pf = parse_problem(args.problem);
  const NormalizedProblem np = normalize(pf);
  const StructuredPattern pattern = require_structured(np, "surface");
  if (args.region.size() != 4 || args.grid.size() != 2 || args.grid[0] < 1 || args.grid[1] < 1) {
    throw CLI::ValidationError("--region a,b,c,d and --grid N,M (N, M >= 1) are required");
  }
  const SurfaceRegion region{args.region[0], args.region[1], args.region[2], args.region[3]};
  const StructuredProblem problem(np.system, pattern, structured_options(pf.options));
  const auto points = problem.surface(region, args.grid[0], args.grid[1]);
  std::ostringstream csv;
  csv.precision(17);
  csv << "re,im,norm\n";
  for (const SurfacePoint& p : points) {
    csv << p.s.real() << ',' << p.s.imag() << ',';
    if (p.norm) csv << *p.norm;
    csv << '\n';
  }
  emit(args.output, csv.str());
  return 0;
}

int cmd_verify(const Args& args) {
  const ProblemFile pf = parse_problem(args.problem);
  const NormalizedProblem np = normalize(pf);
  const RealMatrix delta = parse_delta(args.delta);
  const Index rows = pf.system.states() + pf.system.outputs();
  const Index cols = pf.system.states() + pf.system.inputs();
  if (delta.rows() != rows || delta.cols() != cols) {
    throw ProblemError({"delta: expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                        ", got " + std::to_string(delta.rows()) + "x" +
                        std::to_string(delta.cols())});
  }
  const RealMatrix normalized = np.transposed ? RealMatrix(delta.transpose()) : delta;
  json rec = header("verify", args, np);
  rec["norm"] = spectral_norm(delta);
  rec["verification"] = verification_block(np.system, normalized, pf.options);
  rec["status"] = rec["verification"]["opaque"].get<bool>() ? "opaque" : "not opaque";
  emit_json(args, rec);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-norm sparse perturbations that make secret initial states opaque"};
  app.require_subcommand(1);
  Args args;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("problem", args.problem, "JSON problem file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output", args.output, "write the result here instead of stdout");
  };

  auto* zeros = app.add_subcommand("zeros", "invariant zeros of the system");
  add_common(zeros);
  auto* wus = app.add_subcommand("wus", "weakly unobservable subspace");
  add_common(wus);
  auto* structured = app.add_subcommand("solve-structured", "global structured-pattern solve");
  add_common(structured);

  auto* affine = app.add_subcommand("solve-affine", "local affine-pattern solve");
  add_common(affine);
  affine->add_flag("--warm-start-structured", args.warm_start,
                   "start from the structured solution on the enclosing rectangle");
  affine->add_flag("--fast", args.fast, "stop at |dF| <= 1e-5");
  affine->add_option("--history", args.history, "write the k,F,norm,lambda,mu trace as CSV");
  affine->add_option("--tau", args.tau, "outer stopping threshold on |dF|")->check(CLI::PositiveNumber);
  affine->add_option("--zeta", args.zeta, "rank penalty weight")->check(CLI::PositiveNumber);
  affine->add_option("--max-outer", args.max_outer, "outer iteration cap")->check(CLI::PositiveNumber);

  auto* surface = app.add_subcommand("surface", "norm over a rectangle of the complex plane as CSV");
  add_common(surface);
  surface->add_option("--region", args.region, "re_min,re_max,im_min,im_max")
      ->required()->delimiter(',')->expected(4);
  surface->add_option("--grid", args.grid, "N,M points along Re and Im")
      ->required()->delimiter(',')->expected(2);

  auto* verify = app.add_subcommand("verify", "rank and WUS check of a given perturbation");
  add_common(verify);
  verify->add_option("--delta", args.delta, "JSON with \"delta\" or a solve result")
      ->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (zeros->parsed()) return cmd_zeros(args);
    if (wus->parsed()) return cmd_wus(args);
    if (structured->parsed()) return cmd_solve_structured(args);
    if (affine->parsed()) return cmd_solve_affine(args);
    if (surface->parsed()) return cmd_surface(args);
    if (verify->parsed()) return cmd_verify(args);
  } catch (const ProblemError& e) {
    std::cerr << "opacity: " << e.what() << '\n';
    return kMalformed;
  } catch (const InfeasibleError& e) {
    std::cerr << "opacity: infeasible (" << describe(e.reason()) << "): " << e.what() << '\n';
    return kInfeasible;
  } catch (const ConvergenceError& e) {
    std::cerr << "opacity: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const CLI::Error& e) {
    app.exit(e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "opacity: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
