#pragma once

// Sparse-grid combination technique: subproblem enumeration, per-layer
// subdomain counts, independent partial solves and the combined evaluator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sfcdd/dd_solve.hpp"
#include "sfcdd/error.hpp"
#include "sfcdd/grid.hpp"
#include "sfcdd/parallel.hpp"
#include "sfcdd/random.hpp"

namespace sfcdd {

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

struct CombinationPlan {
  int d = 0;
  int level = 0;
  std::size_t p_hat = 1;
  std::vector<std::vector<LevelVector>> layers;  // layer i: |l|_1 = L + d - 1 - i
  std::vector<double> coefficients;              // (-1)^i binom(d-1, i)

  /// Subdomain count for layer i before clamping: P_hat 2^(d-1-i).
  std::size_t parts_for_layer(std::size_t i) const { return p_hat << (static_cast<std::size_t>(d) - 1 - i); }

  std::size_t subproblem_count() const {
    std::size_t c = 0;
    for (const auto& layer : layers) c += layer.size();
    return c;
  }
};

namespace detail {

// All compositions of `total` into `parts` positive integers, lexicographic.
inline void compositions(int total, int parts, std::vector<int>& prefix, std::vector<LevelVector>& out) {
  if (parts == 1) {
    prefix.push_back(total);
    out.emplace_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int first = 1; first <= total - (parts - 1); ++first) {
    prefix.push_back(first);
    compositions(total - first, parts - 1, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace detail

inline CombinationPlan enumerate_plan(int d, int level, std::size_t p_hat) {
  detail::require(d >= 1 && d <= 16, "combination: dimension must lie in [1, 16]");
  detail::require(level >= d, "combination: need L >= d");
  detail::require(p_hat >= 1, "combination: need P_hat >= 1");
  CombinationPlan plan;
  plan.d = d;
  plan.level = level;
  plan.p_hat = p_hat;
  for (int i = 0; i < d; ++i) {
    std::vector<LevelVector> layer;
    std::vector<int> prefix;
    detail::compositions(level + d - 1 - i, d, prefix, layer);
    plan.layers.push_back(std::move(layer));
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    plan.coefficients.push_back(sign * static_cast<double>(binomial(static_cast<std::uint64_t>(d - 1), i)));
  }
  return plan;
}

/// Closed-form total subdomain count over all subproblems:
/// (P_hat/(d-1)!) sum_k 2^(d-1-k) prod_{i=1}^{d-1} (L+d-1-k-i).
inline std::uint64_t subdomain_count_total(int d, int level, std::uint64_t p_hat) {
  detail::require(d >= 1 && level >= d, "subdomain_count_total: need d >= 1 and L >= d");
  std::uint64_t sum = 0;
  for (int k = 0; k < d; ++k) {
    std::uint64_t prod = std::uint64_t{1} << (d - 1 - k);
    for (int i = 1; i <= d - 1; ++i) prod *= static_cast<std::uint64_t>(level + d - 1 - k - i);
    sum += prod;
  }
  std::uint64_t factorial = 1;
  for (int i = 2; i <= d - 1; ++i) factorial *= static_cast<std::uint64_t>(i);
  return p_hat * (sum / factorial);
}

/// d-linear interpolant of nodal values on a full grid of the given levels,
/// with a constant value on the boundary.
class GridInterpolant {
 public:
  GridInterpolant(LevelVector levels, std::vector<double> lex_values, double boundary = 0.0)
      : levels_(std::move(levels)), values_(std::move(lex_values)), boundary_(boundary) {
    detail::require(values_.size() == num_dofs(levels_), "interpolant: value count does not match the grid");
  }

  const LevelVector& levels() const { return levels_; }

  double operator()(std::span<const double> x) const {
    const auto d = static_cast<std::size_t>(levels_.dim());
    detail::require(x.size() == d, "interpolant: point has wrong dimension");
    std::vector<std::int64_t> base(d);
    std::vector<double> t(d);
    for (std::size_t j = 0; j < d; ++j) {
      const auto m = static_cast<std::int64_t>(std::uint64_t{1} << levels_[j]);
      const double s = std::clamp(x[j], 0.0, 1.0) * static_cast<double>(m);
      auto k = static_cast<std::int64_t>(std::floor(s));
      k = std::clamp<std::int64_t>(k, 0, m - 1);
      base[j] = k;
      t[j] = s - static_cast<double>(k);
    }
    double result = 0.0;
    for (std::uint64_t corner = 0; corner < (std::uint64_t{1} << d); ++corner) {
      double w = 1.0;
      bool on_boundary = false;
      std::size_t lex = 0;
      for (std::size_t j = 0; j < d; ++j) {
        const bool up = (corner >> j) & 1U;
        w *= up ? t[j] : 1.0 - t[j];
        const std::int64_t k = base[j] + (up ? 1 : 0);
        const auto m = static_cast<std::int64_t>(std::uint64_t{1} << levels_[j]);
        if (k == 0 || k == m) on_boundary = true;
        lex = lex * static_cast<std::size_t>(m - 1) + static_cast<std::size_t>(k >= 1 ? k - 1 : 0);
      }
      if (w == 0.0) continue;
      result += w * (on_boundary ? boundary_ : values_[lex]);
    }
    return result;
  }

 private:
  LevelVector levels_;
  std::vector<double> values_;
  double boundary_;
};

/// Coefficient-weighted sum of partial interpolants.
class CombinedEvaluator {
 public:
  CombinedEvaluator() = default;

  void add(double coefficient, GridInterpolant part) { parts_.emplace_back(coefficient, std::move(part)); }
  std::size_t terms() const { return parts_.size(); }
  int dim() const { return parts_.empty() ? 0 : parts_.front().second.levels().dim(); }

  double operator()(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& [c, part] : parts_) sum += c * part(x);
    return sum;
  }

 private:
  std::vector<std::pair<double, GridInterpolant>> parts_;
};

struct PartialSolution {
  LevelVector levels;
  int layer = 0;
  double coefficient = 0.0;
  Vector values;  // curve order
  std::size_t n = 0;
  std::size_t parts = 0;
  double gamma = 0.0;
  std::size_t q = 0;
  std::string clamp;  // empty when P and gamma were used as planned
  SolveReport report;
};

struct PoissonSolve {
  Vector values;  // unscaled, curve order
  GridOrdering grid;
  SolveReport report;
};

/// Solves the discrete Poisson problem of `problem` with the given DD setup,
/// starting from zero, on the diagonally scaled system.
inline PoissonSolve solve_poisson(const Problem& problem, const DdOptions& opts) {
  PoissonSolve out;
  out.grid = GridOrdering(problem.levels);
  const CsrMatrix a = assemble_laplacian(out.grid);
  const Vector f = sample_in_curve_order(out.grid, problem.rhs);
  SymmetrizedSystem sys = symmetrize_diag(a, f);
  auto a_hat = std::make_shared<const CsrMatrix>(std::move(sys.matrix));
  const Vector x0(a_hat->rows(), 0.0);
  DdOptions local = opts;
  local.solver.tolerance_kind = ToleranceKind::relative_residual;
  out.report = solve_dd(a_hat, sys.rhs, local, x0).report;
  out.values = sys.unscale(out.report.solution);
  return out;
}

/// Values given in curve order, rearranged lexicographically.
inline std::vector<double> to_lexicographic(const GridOrdering& grid, std::span<const double> curve_values) {
  std::vector<double> lex(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) lex[grid.sfc_to_lex(p)] = curve_values[p];
  return lex;
}

struct CombinationOptions {
  double gamma = 0.5;
  SchwarzConfig schwarz;
  SolverConfig solver;
  std::size_t workers = 1;  // concurrent subproblems
};

struct CombinationResult {
  CombinationPlan plan;
  std::vector<PartialSolution> partials;  // lexicographic within each layer, layers in order
  CombinedEvaluator evaluator;
};

/// Feasible (P, gamma) for a subproblem of n unknowns and the clamp note.
inline std::pair<std::size_t, double> clamp_parts(std::size_t planned, double gamma, std::size_t n, std::string& note) {
  std::size_t parts = std::max<std::size_t>(1, std::min(planned, n));
  if (parts != planned) note = "P " + std::to_string(planned) + "->" + std::to_string(parts);
  if (2.0 * gamma + 1.0 > static_cast<double>(parts) + 1e-12 && gamma != 0.0) {
    if (!note.empty()) note += "; ";
    note += "gamma->0";
    gamma = 0.0;
  }
  return {parts, gamma};
}

inline CombinationResult run_combination(const CombinationPlan& plan, const CombinationOptions& opts) {
  struct Task {
    LevelVector levels;
    int layer;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < plan.layers.size(); ++i)
    for (const auto& l : plan.layers[i]) tasks.push_back({l, static_cast<int>(i)});

  std::vector<PartialSolution> partials(tasks.size());
  std::vector<std::string> failures(tasks.size());
  parallel_for(
      tasks.size(),
      [&](std::size_t t) {
        PartialSolution& ps = partials[t];
        ps.levels = tasks[t].levels;
        ps.layer = tasks[t].layer;
        ps.coefficient = plan.coefficients[static_cast<std::size_t>(ps.layer)];
        try {
          ps.n = static_cast<std::size_t>(num_dofs(ps.levels));
          const auto [parts, gamma] =
              clamp_parts(plan.parts_for_layer(static_cast<std::size_t>(ps.layer)), opts.gamma, ps.n, ps.clamp);
          ps.parts = parts;
          ps.gamma = gamma;
          ps.q = choose_q(QRule::per_ratio, 1, 0, ps.n, parts);
          DdOptions dd{parts, gamma, ps.q, opts.schwarz, opts.solver};
          PoissonSolve solved = solve_poisson(manufactured_poisson(ps.levels), dd);
          if (!solved.report.converged) throw SolverError("not converged");
          ps.values = std::move(solved.values);
          ps.report = std::move(solved.report);
          ps.report.solution.clear();
        } catch (const std::exception& e) {
          failures[t] = ps.levels.str() + ": " + e.what();
        }
      },
      opts.workers);

  std::string failed;
  for (const auto& f : failures)
    if (!f.empty()) failed += (failed.empty() ? "" : "; ") + f;
  if (!failed.empty()) throw SolverError("combination subproblems failed: " + failed);

  CombinationResult result;
  result.plan = plan;
  for (auto& ps : partials) {
    const GridOrdering grid(ps.levels);
    result.evaluator.add(ps.coefficient, GridInterpolant(ps.levels, to_lexicographic(grid, ps.values)));
  }
  result.partials = std::move(partials);
  return result;
}

struct SampledError {
  double max_abs = 0.0;
  double rms = 0.0;
};

/// Errors at `samples` seeded uniformly random nodes of the isotropic
/// level-L full grid.
template <typename F, typename G>
SampledError sampled_error(const F& evaluator, const G& exact, int d, int level, std::size_t samples,
                           std::uint64_t seed) {
  detail::require(samples >= 1, "sampled_error: need at least one sample");
  detail::require(d >= 1 && level >= 1 && level <= 62, "sampled_error: invalid grid");
  Rng rng(seed);
  const std::uint64_t interior = (std::uint64_t{1} << level) - 1;
  const double h = std::ldexp(1.0, -level);
  std::vector<double> x(static_cast<std::size_t>(d));
  SampledError out;
  double sum_sq = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& xj : x) xj = static_cast<double>(uniform_below(rng, interior) + 1) * h;
    const double e = std::abs(evaluator(std::span<const double>(x)) - exact(std::span<const double>(x)));
    out.max_abs = std::max(out.max_abs, e);
    sum_sq += e * e;
  }
  out.rms = std::sqrt(sum_sq / static_cast<double>(samples));
  return out;
}

}  // namespace sfcdd
