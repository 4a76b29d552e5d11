#pragma once

// One domain-decomposition solve: preconditioner setup from (P, gamma, q)
// followed by the configured outer iteration.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "sfcdd/coarse.hpp"
#include "sfcdd/error.hpp"
#include "sfcdd/krylov.hpp"
#include "sfcdd/partition.hpp"
#include "sfcdd/schwarz.hpp"
#include "sfcdd/sparse.hpp"

namespace sfcdd {

/// How the number of coarse unknowns per subdomain is chosen.
enum class QRule {
  fixed,        // q as given
  per_level,    // q = 2^(S-4)
  per_ratio,    // q = 2^(floor(log2(N/P)) - 4)
};

inline std::string_view to_string(QRule r) {
  switch (r) {
    case QRule::fixed: return "fixed";
    case QRule::per_level: return "s_minus_4";
    case QRule::per_ratio: return "log_ratio_minus_4";
  }
  return "?";
}

inline QRule parse_q_rule(std::string_view s) {
  if (s == "fixed") return QRule::fixed;
  if (s == "s_minus_4" || s == "level") return QRule::per_level;
  if (s == "log_ratio_minus_4" || s == "ratio") return QRule::per_ratio;
  throw PreconditionError("unknown q rule '" + std::string(s) + "'");
}

/// q from the rule, clamped to [1, floor(N/P)].
inline std::size_t choose_q(QRule rule, std::size_t fixed_q, int s, std::size_t n, std::size_t parts) {
  detail::require(parts >= 1 && parts <= n, "choose_q: need 1 <= P <= N");
  const std::size_t cap = n / parts;
  std::int64_t exponent = 0;
  std::size_t q = 1;
  switch (rule) {
    case QRule::fixed:
      q = fixed_q;
      break;
    case QRule::per_level:
      exponent = s - 4;
      q = exponent <= 0 ? 1 : std::size_t{1} << std::min<std::int64_t>(exponent, 62);
      break;
    case QRule::per_ratio:
      exponent = static_cast<std::int64_t>(std::bit_width(cap)) - 1 - 4;
      q = exponent <= 0 ? 1 : std::size_t{1} << exponent;
      break;
  }
  return std::clamp<std::size_t>(q, 1, cap);
}

struct DdOptions {
  std::size_t parts = 1;
  double gamma = 0.5;
  std::size_t q = 1;
  SchwarzConfig schwarz;
  SolverConfig solver;
};

struct DdSolve {
  SolveReport report;
  bool preconditioner_symmetric = true;
  std::size_t coarse_size = 0;
};

/// Builds the Schwarz preconditioner for `a` and runs the outer iteration
/// from x0. `exact` enables energy-norm monitoring.
inline DdSolve solve_dd(std::shared_ptr<const CsrMatrix> a, std::span<const double> b, const DdOptions& opts,
                        std::span<const double> x0, std::optional<std::span<const double>> exact = std::nullopt) {
  detail::require(a != nullptr, "solve_dd: null matrix");
  const SchwarzOperator precond = make_schwarz(a, opts.parts, opts.gamma, opts.q, opts.schwarz);
  DdSolve out;
  out.preconditioner_symmetric = precond.symmetric();
  out.coarse_size = precond.coarse() ? precond.coarse()->size() : 0;
  out.report = solve_with(*a, b, precond, opts.solver, x0, exact);
  return out;
}

}  // namespace sfcdd
