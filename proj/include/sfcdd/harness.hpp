#pragma once

// Experiment drivers: weak and strong scaling, gamma and dimension sweeps,
// single runs and combination runs, all writing self-describing CSV rows.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sfcdd/combine.hpp"
#include "sfcdd/dd_solve.hpp"
#include "sfcdd/error.hpp"
#include "sfcdd/grid.hpp"
#include "sfcdd/krylov.hpp"
#include "sfcdd/schwarz.hpp"

namespace sfcdd {

enum class ExperimentKind { weak, strong, gamma_sweep, dim_sweep, combine, single };

/// How a total exponent T (about 2^T unknowns) is spread over d axes.
enum class LevelRule {
  isotropic_floor,  // l_j = floor(T/d) on every axis
  balanced,         // floor(T/d), plus one on the first T mod d axes
};

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::weak: return "weak";
    case ExperimentKind::strong: return "strong";
    case ExperimentKind::gamma_sweep: return "gamma_sweep";
    case ExperimentKind::dim_sweep: return "dim_sweep";
    case ExperimentKind::combine: return "combine";
    case ExperimentKind::single: return "single";
  }
  return "?";
}

inline std::string_view to_string(LevelRule r) {
  return r == LevelRule::isotropic_floor ? "isotropic_floor" : "balanced";
}

inline LevelRule parse_level_rule(std::string_view s) {
  if (s == "isotropic_floor" || s == "floor") return LevelRule::isotropic_floor;
  if (s == "balanced") return LevelRule::balanced;
  throw PreconditionError("unknown level rule '" + std::string(s) + "'");
}

inline LevelVector levels_for_exponent(int d, int total, LevelRule rule) {
  detail::require(d >= 1 && total >= d, "level rule: need total exponent >= d");
  std::vector<int> l(static_cast<std::size_t>(d), total / d);
  if (rule == LevelRule::balanced)
    for (int j = 0; j < total % d; ++j) ++l[static_cast<std::size_t>(j)];
  return LevelVector(std::move(l));
}

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::weak;
  int d = 1;
  std::vector<int> dims{1, 2, 3, 4, 5, 6};
  std::vector<int> s_values{8};   // weak: per-subdomain exponent S
  std::vector<int> l_values{16};  // strong: total exponent L; combine: level L
  std::vector<std::size_t> p_values{2, 4, 8, 16, 32, 64, 128, 256};
  std::vector<double> gammas{0.5};
  std::optional<LevelVector> levels;  // single
  QRule q_rule = QRule::per_level;
  std::size_t fixed_q = 16;
  LevelRule level_rule = LevelRule::isotropic_floor;
  Method method = Method::pcg;
  Variant variant = Variant::balanced;
  Weighting weighting = Weighting::omega;
  double tolerance = 1e-8;
  std::size_t max_iters = 5000;
  std::uint64_t seed = 42;
  bool eigenvalues = false;  // also estimate lambda_min/max for CG runs
  bool timing = false;       // add wall-clock columns (breaks byte reproducibility)
  std::size_t p_hat = 4;     // combine
  std::size_t samples = 4096;
  std::size_t workers = 1;
};

/// One configured solve of the discrete Laplace problem b = 0, x* = 0.
struct Case {
  int d = 1;
  std::string grid;  // level vector, or "n=<N>" for the 1D weak/strong setup
  int s = 0;         // S (weak) or L (strong), 0 when not applicable
  std::size_t n = 0;
  std::size_t parts = 1;
  double gamma = 0.5;
  std::size_t q = 1;
};

struct CaseResult {
  Case c;
  std::string status = "ok";  // or "skipped: <reason>" / "failed: <reason>"
  std::size_t iterations = 0;
  bool converged = false;
  double lambda_min = std::numeric_limits<double>::quiet_NaN();
  double lambda_max = std::numeric_limits<double>::quiet_NaN();
  double damping = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
  std::vector<double> energy_error;
  std::vector<double> residual;
};

inline CaseResult skipped(const Case& c, std::string reason) {
  CaseResult r;
  r.c = c;
  r.status = "skipped: " + std::move(reason);
  return r;
}

namespace detail {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace detail

/// The symmetrized system of a Case: the 1D grid with N unknowns when
/// `levels` is empty, otherwise the grid of `levels`.
inline std::shared_ptr<const CsrMatrix> case_matrix(std::size_t n_1d, const std::optional<LevelVector>& levels) {
  const CsrMatrix a = levels ? assemble_laplacian(*levels) : laplacian_1d(n_1d);
  const Vector zero(a.rows(), 0.0);
  return std::make_shared<const CsrMatrix>(symmetrize_diag(a, zero).matrix);
}

/// Runs one Laplace solve from the seeded unit-energy initial iterate.
inline CaseResult run_case(const Case& c, std::shared_ptr<const CsrMatrix> a, const ExperimentSpec& spec) {
  CaseResult out;
  out.c = c;
  if (c.parts > c.n) {
    out.status = "skipped: P > N";
    return out;
  }
  if (2.0 * c.gamma + 1.0 > static_cast<double>(c.parts) + 1e-12) {
    out.status = "skipped: 2*gamma+1 > P";
    return out;
  }
  try {
    DdOptions opts;
    opts.parts = c.parts;
    opts.gamma = c.gamma;
    opts.q = c.q;
    opts.schwarz = {spec.variant, spec.weighting, spec.workers};
    opts.solver.method = spec.method;
    opts.solver.tolerance = spec.tolerance;
    opts.solver.max_iters = spec.max_iters;
    opts.solver.seed = spec.seed;
    const Vector x0 = initial_iterate(a->rows(), spec.seed, *a);
    const Vector b(a->rows(), 0.0);
    const Vector exact(a->rows(), 0.0);
    const SchwarzOperator precond = make_schwarz(a, c.parts, c.gamma, c.q, opts.schwarz);
    SolveReport report = solve_with(*a, b, precond, opts.solver, x0, std::span<const double>(exact));
    if (!report.eigs && spec.eigenvalues && precond.symmetric())
      report.eigs = estimate_extremal_eigs(*a, precond, opts.solver.eigen);
    out.iterations = report.iterations;
    out.converged = report.converged;
    if (report.eigs) {
      out.lambda_min = report.eigs->min;
      out.lambda_max = report.eigs->max;
    }
    out.damping = report.damping;
    out.seconds = report.wall_time;
    out.energy_error = std::move(report.energy_error);
    out.residual = std::move(report.residual);
    if (!out.converged) out.status = "failed: no convergence within max_iters";
  } catch (const std::exception& e) {
    out.status = std::string("failed: ") + e.what();
  }
  return out;
}

inline void write_csv_header(std::ostream& os, const ExperimentSpec& spec) {
  os << "kind,d,grid,s_or_l,n,p,gamma,q,variant,weighting,method,seed,iterations,converged,lambda_min,lambda_max,"
        "damping,status";
  if (spec.timing) os << ",seconds";
  os << "\r\n";
}

inline void write_csv_row(std::ostream& os, const ExperimentSpec& spec, const CaseResult& r) {
  const Case& c = r.c;
  os << to_string(spec.kind) << ',' << c.d << ',' << detail::csv_field(c.grid) << ',' << c.s << ',' << c.n << ','
     << c.parts << ',' << detail::format_double(c.gamma) << ',' << c.q << ',' << to_string(spec.variant) << ','
     << to_string(spec.weighting) << ',' << to_string(spec.method) << ',' << spec.seed << ',' << r.iterations << ','
     << (r.converged ? 1 : 0) << ',' << detail::format_double(r.lambda_min) << ','
     << detail::format_double(r.lambda_max) << ',' << detail::format_double(r.damping) << ','
     << detail::csv_field(r.status);
  if (spec.timing) os << ',' << detail::format_double(r.seconds);
  os << "\r\n";
}

inline int floor_log2(std::size_t p) { return static_cast<int>(std::bit_width(p)) - 1; }

/// Weak-scaling case for dimension d, per-subdomain exponent S and P.
inline std::pair<Case, std::shared_ptr<const CsrMatrix>> weak_case(const ExperimentSpec& spec, int d, int s,
                                                                   std::size_t parts, double gamma) {
  Case c;
  c.d = d;
  c.s = s;
  c.parts = parts;
  c.gamma = gamma;
  std::optional<LevelVector> levels;
  if (d == 1) {
    c.n = (std::size_t{1} << s) * parts;
    c.grid = "n=" + std::to_string(c.n);
  } else {
    levels = levels_for_exponent(d, s + floor_log2(parts), spec.level_rule);
    c.n = static_cast<std::size_t>(num_dofs(*levels));
    c.grid = levels->str();
  }
  c.q = parts <= c.n ? choose_q(spec.q_rule, spec.fixed_q, s, c.n, parts) : 0;
  return {c, parts <= c.n ? case_matrix(c.n, levels) : nullptr};
}

inline std::vector<CaseResult> run_weak_scaling(const ExperimentSpec& spec) {
  std::vector<CaseResult> rows;
  for (int s : spec.s_values)
    for (double gamma : spec.gammas)
      for (std::size_t p : spec.p_values) {
        auto [c, a] = weak_case(spec, spec.d, s, p, gamma);
        rows.push_back(a ? run_case(c, a, spec) : skipped(c, "P > N"));
      }
  return rows;
}

/// Fixed problem of about 2^L unknowns (exactly 2^L in 1D), P swept.
inline std::vector<CaseResult> run_strong_scaling(const ExperimentSpec& spec) {
  std::vector<CaseResult> rows;
  for (int l : spec.l_values) {
    std::optional<LevelVector> levels;
    std::size_t n = 0;
    std::string grid;
    if (spec.d == 1) {
      n = std::size_t{1} << l;
      grid = "n=" + std::to_string(n);
    } else {
      levels = levels_for_exponent(spec.d, l, spec.level_rule);
      n = static_cast<std::size_t>(num_dofs(*levels));
      grid = levels->str();
    }
    const auto a = case_matrix(n, levels);
    for (double gamma : spec.gammas)
      for (std::size_t p : spec.p_values) {
        Case c{spec.d, grid, l, n, p, gamma, 0};
        if (p > n) {
          rows.push_back(skipped(c, "P > N"));
          continue;
        }
        c.q = choose_q(spec.q_rule, spec.fixed_q, floor_log2(n / p), n, p);
        rows.push_back(run_case(c, a, spec));
      }
  }
  return rows;
}

inline std::vector<CaseResult> run_gamma_sweep(const ExperimentSpec& spec) {
  return run_weak_scaling(spec);
}

inline std::vector<CaseResult> run_dim_sweep(const ExperimentSpec& spec) {
  std::vector<CaseResult> rows;
  for (int d : spec.dims) {
    ExperimentSpec sub = spec;
    sub.d = d;
    auto part = run_weak_scaling(sub);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

/// One solve with the full iteration history.
inline CaseResult run_single(const ExperimentSpec& spec) {
  detail::require(spec.levels.has_value() || spec.d == 1, "single run needs a level vector");
  const std::size_t p = spec.p_values.empty() ? 1 : spec.p_values.front();
  const double gamma = spec.gammas.empty() ? 0.5 : spec.gammas.front();
  if (spec.levels) {
    const LevelVector& l = *spec.levels;
    Case c{l.dim(), l.str(), 0, static_cast<std::size_t>(num_dofs(l)), p, gamma, 0};
    if (p > c.n) return skipped(c, "P > N");
    c.q = choose_q(spec.q_rule, spec.fixed_q, spec.s_values.empty() ? 0 : spec.s_values.front(), c.n, p);
    return run_case(c, case_matrix(c.n, l), spec);
  }
  auto [c, a] = weak_case(spec, 1, spec.s_values.empty() ? 8 : spec.s_values.front(), p, gamma);
  return a ? run_case(c, a, spec) : skipped(c, "P > N");
}

inline void write_history_csv(std::ostream& os, const CaseResult& r) {
  os << "k,energy_error,residual\r\n";
  for (std::size_t k = 0; k < r.residual.size(); ++k)
    os << k << ',' << (k < r.energy_error.size() ? detail::format_double(r.energy_error[k]) : "") << ','
       << detail::format_double(r.residual[k]) << "\r\n";
}

/// Plan summary of a combination run.
inline void write_combination_csv(std::ostream& os, const CombinationResult& result, const ExperimentSpec& spec) {
  os << "levels,layer,coefficient,n,p,gamma,q,clamp,variant,weighting,method,seed,iterations";
  if (spec.timing) os << ",seconds";
  os << "\r\n";
  for (const auto& ps : result.partials) {
    os << detail::csv_field(ps.levels.str()) << ',' << ps.layer << ',' << detail::format_double(ps.coefficient)
       << ',' << ps.n << ',' << ps.parts << ',' << detail::format_double(ps.gamma) << ',' << ps.q << ','
       << detail::csv_field(ps.clamp) << ',' << to_string(spec.variant) << ',' << to_string(spec.weighting) << ','
       << to_string(spec.method) << ',' << spec.seed << ',' << ps.report.iterations;
    if (spec.timing) os << ',' << detail::format_double(ps.report.wall_time);
    os << "\r\n";
  }
}

inline CombinationResult run_combine(const ExperimentSpec& spec, int level) {
  CombinationOptions opts;
  opts.gamma = spec.gammas.empty() ? 0.5 : spec.gammas.front();
  opts.schwarz = {spec.variant, spec.weighting, 1};
  opts.solver.method = spec.method;
  opts.solver.tolerance = spec.tolerance;
  opts.solver.max_iters = spec.max_iters;
  opts.workers = spec.workers;
  return run_combination(enumerate_plan(spec.d, level, spec.p_hat), opts);
}

}  // namespace sfcdd
