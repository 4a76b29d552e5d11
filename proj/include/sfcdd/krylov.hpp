#pragma once

// Outer iterations: damped Richardson, preconditioned CG and flexible CG,
// extremal-eigenvalue estimation of the preconditioned operator, and the
// seeded initial iterate.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sfcdd/error.hpp"
#include "sfcdd/random.hpp"
#include "sfcdd/sparse.hpp"

namespace sfcdd {

/// Anything applying h = C^-1 g that can report whether it is symmetric.
template <typename P>
concept Preconditioner = requires(const P& p, std::span<const double> g, std::span<double> h) {
  { p.apply(g, h) };
  { p.symmetric() } -> std::convertible_to<bool>;
};

enum class Method { richardson, pcg, fcg };
enum class ToleranceKind { energy_error_reduction, relative_residual };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::richardson: return "richardson";
    case Method::pcg: return "pcg";
    case Method::fcg: return "fcg";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "richardson") return Method::richardson;
  if (s == "pcg" || s == "cg") return Method::pcg;
  if (s == "fcg") return Method::fcg;
  throw PreconditionError("unknown solver '" + std::string(s) + "'");
}

struct EigenOptions {
  std::size_t lanczos_steps = 200;
  std::size_t dense_threshold = 300;  // dense eigensolve for N <= this
  std::uint64_t seed = 7;
  /// Lanczos keeps V and AV for full reorthogonalization while
  /// 2*N*steps doubles stay below this budget; beyond it the plain
  /// three-term recurrence is used (extreme Ritz values are unaffected by
  /// the loss of orthogonality, only duplicated).
  std::size_t reorth_budget = std::size_t{1} << 22;
  /// Lanczos stops early once both extreme Ritz values moved by less than
  /// this relative amount over the last ten steps.
  double settle_tolerance = 1e-10;
};

struct SolverConfig {
  Method method = Method::pcg;
  std::optional<double> damping;  // Richardson xi; empty = optimal 2/(lmin+lmax)
  double tolerance = 1e-8;
  ToleranceKind tolerance_kind = ToleranceKind::energy_error_reduction;
  std::size_t max_iters = 10000;
  std::uint64_t seed = 42;
  std::size_t fcg_window = 0;  // 0: keep every direction
  bool force_pcg = false;      // run plain CG even on a non-symmetric preconditioner
  EigenOptions eigen;
};

struct ExtremalEigs {
  double min = std::numeric_limits<double>::quiet_NaN();
  double max = std::numeric_limits<double>::quiet_NaN();
  std::size_t steps = 0;
  bool dense = false;

  double condition() const { return max / min; }
  double optimal_damping() const { return 2.0 / (min + max); }
  double optimal_rate() const { return 1.0 - 2.0 / (1.0 + condition()); }
};

struct SolveReport {
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> energy_error;  // |x_k - x*|_A, k = 0..iterations (empty without x*)
  std::vector<double> residual;      // |b - A x_k|_2
  std::optional<ExtremalEigs> eigs;
  double damping = std::numeric_limits<double>::quiet_NaN();
  double wall_time = 0.0;  // seconds
  Vector solution;
};

// ---------------------------------------------------------------------------
// Dense symmetric eigenvalues (cyclic Jacobi)

/// All eigenvalues of the symmetric n x n row-major matrix `a`, ascending.
inline std::vector<double> symmetric_eigenvalues(std::size_t n, std::vector<double> a) {
  detail::require(a.size() == n * n, "symmetric_eigenvalues: size mismatch");
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        total += at(i, j) * at(i, j);
        if (i != j) off += at(i, j) * at(i, j);
      }
    if (off <= 1e-30 * total || off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k);
          const double aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = at(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

/// Extreme eigenvalues of a symmetric tridiagonal matrix by Sturm bisection.
inline std::pair<double, double> tridiagonal_extremes(std::span<const double> alpha, std::span<const double> beta) {
  const std::size_t m = alpha.size();
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  for (std::size_t i = 0; i < m; ++i) {
    const double r = (i > 0 ? std::abs(beta[i - 1]) : 0.0) + (i + 1 < m ? std::abs(beta[i]) : 0.0);
    lo = std::min(lo, alpha[i] - r);
    hi = std::max(hi, alpha[i] + r);
  }
  // Number of eigenvalues strictly below x.
  auto count_below = [&](double x) {
    std::size_t count = 0;
    double q = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double b2 = i > 0 ? beta[i - 1] * beta[i - 1] : 0.0;
      q = alpha[i] - x - (i > 0 ? b2 / q : 0.0);
      if (q == 0.0) q = -1e-300;
      if (q < 0.0) ++count;
    }
    return count;
  };
  auto kth = [&](std::size_t k) {
    double a = lo, b = hi;
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(std::abs(a), std::abs(b)); ++it) {
      const double mid = 0.5 * (a + b);
      if (count_below(mid) > k) b = mid; else a = mid;
    }
    return 0.5 * (a + b);
  };
  return {kth(0), kth(m - 1)};
}

// ---------------------------------------------------------------------------

/// Extremal eigenvalues of C^-1 A for a symmetric preconditioner. Dense
/// eigensolve of L^T C^-1 L (A = L L^T) for N <= dense_threshold, otherwise
/// Lanczos in the A inner product.
template <Preconditioner P>
ExtremalEigs estimate_extremal_eigs(const CsrMatrix& a, const P& precond, const EigenOptions& opts = {}) {
  const std::size_t n = a.rows();
  detail::require(n >= 1, "eigen estimate: empty operator");
  ExtremalEigs out;
  if (n <= opts.dense_threshold) {
    // Dense C^-1, column by column.
    std::vector<double> cinv(n * n);
    Vector e(n, 0.0), col(n);
    for (std::size_t j = 0; j < n; ++j) {
      e[j] = 1.0;
      precond.apply(e, col);
      e[j] = 0.0;
      for (std::size_t i = 0; i < n; ++i) cinv[i * n + j] = col[i];
    }
    std::vector<double> dense(n * n, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = a.row_offsets()[r]; k < a.row_offsets()[r + 1]; ++k) dense[r * n + a.col_indices()[k]] = a.values()[k];
    const DenseCholesky chol(n, dense);
    // S = L^T K L
    std::vector<double> kl(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        const double cik = cinv[i * n + k];
        if (cik == 0.0) continue;
        for (std::size_t j = 0; j <= k; ++j) kl[i * n + j] += cik * chol.factor_entry(k, j);
      }
    std::vector<double> s(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = i; k < n; ++k) {
        const double lki = chol.factor_entry(k, i);
        for (std::size_t j = 0; j < n; ++j) s[i * n + j] += lki * kl[k * n + j];
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) s[i * n + j] = s[j * n + i] = 0.5 * (s[i * n + j] + s[j * n + i]);
    const auto eig = symmetric_eigenvalues(n, std::move(s));
    out.min = eig.front();
    out.max = eig.back();
    out.steps = n;
    out.dense = true;
    return out;
  }

  const std::size_t steps = std::min(opts.lanczos_steps, n);
  const bool full_reorth = 2 * n * steps <= opts.reorth_budget;
  std::vector<Vector> basis, abasis;
  Rng rng(opts.seed);
  Vector v(n), av(n), w(n), aw(n), v_prev(n, 0.0);
  for (auto& x : v) x = uniform(rng, -1.0, 1.0);
  a.multiply(v, av);
  double nrm = std::sqrt(dot(v, av));
  for (std::size_t i = 0; i < n; ++i) {
    v[i] /= nrm;
    av[i] /= nrm;
  }
  std::vector<double> alpha, beta;
  double beta_prev = 0.0;
  double last_min = std::numeric_limits<double>::quiet_NaN();
  double last_max = last_min;
  for (std::size_t j = 0; j < steps; ++j) {
    precond.apply(av, w);
    const double alpha_j = dot(w, av);
    for (std::size_t i = 0; i < n; ++i) w[i] -= alpha_j * v[i] + beta_prev * v_prev[i];
    alpha.push_back(alpha_j);
    if (full_reorth) {
      basis.push_back(v);
      abasis.push_back(av);
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t b = 0; b < basis.size(); ++b) axpy(-dot(w, abasis[b]), basis[b], w);
    }
    if (alpha.size() % 10 == 0) {
      const auto [lo, hi] = tridiagonal_extremes(alpha, beta);
      const bool settled = std::abs(lo - last_min) <= opts.settle_tolerance * std::abs(lo) &&
                           std::abs(hi - last_max) <= opts.settle_tolerance * std::abs(hi);
      last_min = lo;
      last_max = hi;
      if (settled) break;
    }
    a.multiply(w, aw);
    const double b2 = dot(w, aw);
    if (j + 1 == steps || !(b2 > 1e-24 * alpha_j * alpha_j)) break;
    const double beta_j = std::sqrt(b2);
    beta.push_back(beta_j);
    v_prev.swap(v);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = w[i] / beta_j;
      av[i] = aw[i] / beta_j;
    }
    beta_prev = beta_j;
  }
  const auto [lmin, lmax] = tridiagonal_extremes(alpha, beta);
  out.min = lmin;
  out.max = lmax;
  out.steps = alpha.size();
  return out;
}

/// Uniform entries on [-1, 1] rescaled to unit A-norm.
inline Vector initial_iterate(std::size_t n, std::uint64_t seed, const CsrMatrix& a) {
  detail::require(a.rows() == n, "initial_iterate: dimension mismatch");
  Rng rng(seed);
  Vector x(n);
  for (auto& v : x) v = uniform(rng, -1.0, 1.0);
  const Vector ax = matvec(a, x);
  const double nrm = std::sqrt(dot(x, ax));
  for (auto& v : x) v /= nrm;
  return x;
}

namespace detail {

class Monitor {
 public:
  Monitor(const CsrMatrix& a, std::span<const double> b, std::optional<std::span<const double>> exact,
          const SolverConfig& cfg, SolveReport& report)
      : a_(a), b_(b), exact_(exact), cfg_(cfg), report_(report), scratch_(a.rows()), diff_(a.rows()) {
    require(cfg.tolerance > 0.0, "solver tolerance must be positive");
    require(cfg.tolerance_kind != ToleranceKind::energy_error_reduction || exact.has_value(),
            "energy-norm stopping needs the exact solution");
    require(!exact || exact->size() == a.rows(), "exact solution has wrong dimension");
  }

  /// Records iterate x (residual r supplied). Returns true when converged.
  bool record(std::span<const double> x, double residual_norm) {
    report_.residual.push_back(residual_norm);
    if (exact_) {
      for (std::size_t i = 0; i < diff_.size(); ++i) diff_[i] = x[i] - (*exact_)[i];
      a_.multiply(diff_, scratch_);
      report_.energy_error.push_back(std::sqrt(std::max(0.0, dot(diff_, scratch_))));
    }
    const auto& h = cfg_.tolerance_kind == ToleranceKind::energy_error_reduction ? report_.energy_error
                                                                                  : report_.residual;
    return h.back() <= cfg_.tolerance * h.front();
  }

  /// Error grew tenfold over its initial value.
  bool diverged() const {
    const auto& h = cfg_.tolerance_kind == ToleranceKind::energy_error_reduction ? report_.energy_error
                                                                                  : report_.residual;
    return h.back() > 10.0 * h.front() || !std::isfinite(h.back());
  }

 private:
  const CsrMatrix& a_;
  std::span<const double> b_;
  std::optional<std::span<const double>> exact_;
  const SolverConfig& cfg_;
  SolveReport& report_;
  Vector scratch_, diff_;
};

inline void residual(const CsrMatrix& a, std::span<const double> b, std::span<const double> x, std::span<double> r) {
  a.multiply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
}

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace detail

/// x_{k+1} = x_k + xi C^-1 (b - A x_k).
template <Preconditioner P>
SolveReport richardson(const CsrMatrix& a, std::span<const double> b, const P& precond, const SolverConfig& cfg,
                       std::span<const double> x0, std::optional<std::span<const double>> exact = std::nullopt) {
  const std::size_t n = a.rows();
  detail::require(b.size() == n && x0.size() == n, "richardson: dimension mismatch");
  const auto t0 = detail::Clock::now();
  SolveReport report;
  if (cfg.damping) {
    report.damping = *cfg.damping;
  } else {
    if (!precond.symmetric()) throw SolverError("richardson: optimal damping needs a symmetric preconditioner");
    report.eigs = estimate_extremal_eigs(a, precond, cfg.eigen);
    report.damping = report.eigs->optimal_damping();
  }
  detail::Monitor monitor(a, b, exact, cfg, report);
  Vector x(x0.begin(), x0.end()), r(n), h(n);
  detail::residual(a, b, x, r);
  report.converged = monitor.record(x, norm2(r)) || (exact ? report.energy_error.front() == 0.0 : norm2(r) == 0.0);
  while (!report.converged && report.iterations < cfg.max_iters) {
    precond.apply(r, h);
    axpy(report.damping, h, x);
    detail::residual(a, b, x, r);
    ++report.iterations;
    report.converged = monitor.record(x, norm2(r));
    if (!report.converged && monitor.diverged())
      throw DivergenceError("richardson diverged after " + std::to_string(report.iterations) + " iterations");
  }
  report.solution = std::move(x);
  report.wall_time = detail::seconds_since(t0);
  return report;
}

/// Preconditioned conjugate gradients. Refuses a non-symmetric
/// preconditioner unless cfg.force_pcg is set.
template <Preconditioner P>
SolveReport pcg(const CsrMatrix& a, std::span<const double> b, const P& precond, const SolverConfig& cfg,
                std::span<const double> x0, std::optional<std::span<const double>> exact = std::nullopt) {
  const std::size_t n = a.rows();
  detail::require(b.size() == n && x0.size() == n, "pcg: dimension mismatch");
  if (!precond.symmetric() && !cfg.force_pcg)
    throw SolverError("pcg: preconditioner is not symmetric; use flexible CG");
  const auto t0 = detail::Clock::now();
  SolveReport report;
  detail::Monitor monitor(a, b, exact, cfg, report);
  Vector x(x0.begin(), x0.end()), r(n), z(n), p(n), q(n);
  detail::residual(a, b, x, r);
  report.converged = monitor.record(x, norm2(r)) || norm2(r) == 0.0;
  if (!report.converged) {
    precond.apply(r, z);
    p = z;
  }
  double rz = dot(r, z);
  while (!report.converged && report.iterations < cfg.max_iters) {
    a.multiply(p, q);
    const double curvature = dot(p, q);
    if (!(curvature > 0.0)) throw SolverError("pcg: nonpositive curvature p^T A p");
    const double alpha = rz / curvature;
    axpy(alpha, p, x);
    axpy(-alpha, q, r);
    ++report.iterations;
    report.converged = monitor.record(x, norm2(r));
    if (report.converged) break;
    precond.apply(r, z);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  report.solution = std::move(x);
  report.wall_time = detail::seconds_since(t0);
  return report;
}

/// Flexible CG: each new direction is A-orthogonalized against the stored
/// previous directions (all of them when fcg_window == 0).
template <Preconditioner P>
SolveReport fcg(const CsrMatrix& a, std::span<const double> b, const P& precond, const SolverConfig& cfg,
                std::span<const double> x0, std::optional<std::span<const double>> exact = std::nullopt) {
  const std::size_t n = a.rows();
  detail::require(b.size() == n && x0.size() == n, "fcg: dimension mismatch");
  const auto t0 = detail::Clock::now();
  SolveReport report;
  detail::Monitor monitor(a, b, exact, cfg, report);
  Vector x(x0.begin(), x0.end()), r(n), z(n);
  detail::residual(a, b, x, r);
  report.converged = monitor.record(x, norm2(r)) || norm2(r) == 0.0;
  struct Direction {
    Vector p, ap;
    double pap;
  };
  std::deque<Direction> dirs;
  while (!report.converged && report.iterations < cfg.max_iters) {
    precond.apply(r, z);
    Vector p = z;
    for (const auto& d : dirs) axpy(-dot(z, d.ap) / d.pap, d.p, p);
    Vector ap(n);
    a.multiply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) throw SolverError("fcg: nonpositive curvature p^T A p");
    const double alpha = dot(p, r) / pap;
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    ++report.iterations;
    report.converged = monitor.record(x, norm2(r));
    dirs.push_back({std::move(p), std::move(ap), pap});
    if (cfg.fcg_window != 0 && dirs.size() > cfg.fcg_window) dirs.pop_front();
  }
  report.solution = std::move(x);
  report.wall_time = detail::seconds_since(t0);
  return report;
}

/// Dispatches on cfg.method.
template <Preconditioner P>
SolveReport solve_with(const CsrMatrix& a, std::span<const double> b, const P& precond, const SolverConfig& cfg,
                       std::span<const double> x0, std::optional<std::span<const double>> exact = std::nullopt) {
  switch (cfg.method) {
    case Method::richardson: return richardson(a, b, precond, cfg, x0, exact);
    case Method::pcg: return pcg(a, b, precond, cfg, x0, exact);
    case Method::fcg: return fcg(a, b, precond, cfg, x0, exact);
  }
  throw PreconditionError("unknown method");
}

}  // namespace sfcdd
