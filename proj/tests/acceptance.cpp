#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "oracle.hpp"
#include "sfcdd/sfcdd.hpp"

using namespace sfcdd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Checklist {
 public:
  void run(const char* id, const char* name, const std::function<Outcome()>& body) {
    Outcome out;
    try {
      out = body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %-3s %s: %s\n", out.pass ? "PASS" : "FAIL", id, name, out.detail.c_str());
    std::fflush(stdout);
    failures_ += out.pass ? 0 : 1;
  }

  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

void info(const std::string& line) {
  std::printf("      info: %s\n", line.c_str());
  std::fflush(stdout);
}

std::string join(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  return os.str();
}

std::shared_ptr<const CsrMatrix> scaled(const LevelVector& l) {
  const auto a = assemble_laplacian(l);
  return std::make_shared<const CsrMatrix>(symmetrize_diag(a, std::vector<double>(a.rows(), 0.0)).matrix);
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = uniform(rng, -1.0, 1.0);
  return v;
}

double median(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? static_cast<double>(v[m]) : 0.5 * static_cast<double>(v[m - 1] + v[m]);
}

Outcome coverage_weights_are_uniform() {
  std::size_t checked = 0;
  for (const LevelVector& l : {LevelVector{8}, LevelVector{4, 4}, LevelVector{3, 3, 3}}) {
    const std::size_t n = num_dofs(l);
    for (std::size_t p : {4, 8, 16})
      for (double gamma : {0.5, 1.0, 1.5, 2.0}) {
        if (2.0 * gamma + 1.0 > static_cast<double>(p)) {
          bool rejected = false;
          try {
            Partition::build(n, p, gamma);
          } catch (const PreconditionError&) {
            rejected = true;
          }
          if (!rejected) return {false, "infeasible P=" + std::to_string(p) + " accepted"};
          continue;
        }
        const auto w = compute_weights(Partition::build(n, p, gamma));
        const double expect = 1.0 / (2.0 * gamma + 1.0);
        for (const auto& di : w.d)
          for (double v : di)
            if (v != expect) return {false, l.str() + " P=" + std::to_string(p) + " gamma=" + std::to_string(gamma)};
        ++checked;
      }
  }
  return {true, std::to_string(checked) + " configurations exact; P=4, gamma=2 rejected as infeasible"};
}

Outcome partitions_balance_and_tile() {
  Rng rng(2024);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t p = 1 + uniform_below(rng, 512);
    const std::size_t n = p + uniform_below(rng, 100000);
    const auto parts = disjoint_partition(n, p);
    std::size_t next = 0, lo = n, hi = 0;
    for (const auto& r : parts) {
      if (r.start != next) return {false, "gap at N=" + std::to_string(n) + " P=" + std::to_string(p)};
      next += r.length;
      lo = std::min(lo, r.length);
      hi = std::max(hi, r.length);
    }
    if (parts.size() != p || next != n || hi - lo > 1)
      return {false, "N=" + std::to_string(n) + " P=" + std::to_string(p)};
  }
  return {true, "10000 random (N, P) cases"};
}

Outcome curve_is_bijective_adjacent_and_holder() {
  std::ostringstream os;
  for (auto [d, maxn] : {std::pair{2, 8}, {3, 5}, {4, 4}, {5, 3}})
    for (int n = 1; n <= maxn; ++n) {
      const auto c = check_curve_exhaustive(CurveConfig{d, n});
      if (!c.bijective || !c.adjacent) return {false, "d=" + std::to_string(d) + " n=" + std::to_string(n)};
    }
  bool ok = true;
  for (int d = 1; d <= 6; ++d) {
    const double h = holder_estimate(CurveConfig{d, std::min(20, 120 / d)}, 100000, 42);
    os << (d > 1 ? " " : "") << "d" << d << "=" << h;
    ok = ok && h <= holder_bound(d);
  }
  return {ok, "exhaustive checks clean; Hoelder " + os.str()};
}

Outcome operators_match_dense_oracle() {
  struct Setup {
    LevelVector l;
    std::size_t p;
    oracle::Gamma g;
    std::size_t q;
  };
  const std::vector<Setup> setups{{LevelVector{7}, 4, {1, 2}, 2},   {LevelVector{7}, 8, {1, 1}, 3},
                                  {LevelVector{6}, 5, {1, 4}, 3},   {LevelVector{3, 3}, 4, {1, 2}, 2},
                                  {LevelVector{3, 4}, 6, {1, 1}, 2}, {LevelVector{4, 3}, 7, {3, 2}, 1}};
  double worst = 0.0, worst_sym = 0.0;
  for (const auto& s : setups) {
    const auto a = scaled(s.l);
    const std::size_t n = a->rows();
    const oracle::Dense ad = oracle::to_dense(*a);
    for (Variant v : {Variant::one_level, Variant::additive_two_level, Variant::deflated, Variant::balanced})
      for (Weighting w : {Weighting::none, Weighting::omega, Weighting::d_matrix}) {
        const auto op = make_schwarz(a, s.p, s.g.value(), s.q, {v, w, 1});
        const oracle::Dense ref = oracle::preconditioner(ad, s.p, s.g, s.q, v, w);
        worst = std::max(worst, (oracle::assemble_operator(op, n) - ref).cwiseAbs().maxCoeff());
        if (!op.symmetric()) continue;
        for (std::uint64_t k = 0; k < 4; ++k) {
          const auto x = random_vector(n, 10 + k);
          const auto y = random_vector(n, 20 + k);
          const double xy = dot(op.apply(x), y);
          worst_sym = std::max(worst_sym, std::abs(xy - dot(x, op.apply(y))) / std::max(1.0, std::abs(xy)));
        }
      }
  }
  std::ostringstream os;
  os << "max deviation " << worst << ", symmetry defect " << worst_sym;
  return {worst <= 1e-10 && worst_sym <= 1e-12, os.str()};
}

Outcome richardson_rate_matches_optimum() {
  const auto a = scaled(LevelVector{8});
  const std::size_t n = a->rows();
  const auto pre = make_schwarz(a, 4, 0.5, 2, {Variant::balanced, Weighting::omega, 1});
  const oracle::Dense ca = oracle::assemble_operator(pre, n) * oracle::to_dense(*a);
  const Eigen::VectorXd ev = ca.eigenvalues().real();
  const double kappa = ev.maxCoeff() / ev.minCoeff();
  const double rho = 1.0 - 2.0 / (1.0 + kappa);

  SolverConfig cfg;
  cfg.method = Method::richardson;
  const Vector x0 = initial_iterate(n, 42, *a);
  const Vector b(n, 0.0);
  const auto rep = richardson(*a, b, pre, cfg, x0, std::span<const double>(b));
  const auto& e = rep.energy_error;
  const std::size_t k = e.size() - 1, h = k / 2;
  const double rate = std::pow(e[k] / e[h], 1.0 / static_cast<double>(k - h));
  std::ostringstream os;
  os << "measured " << rate << ", rho* " << rho << " (" << rep.iterations << " iterations)";
  return {std::abs(rate - rho) <= 0.03, os.str()};
}

std::vector<std::size_t> weak_counts(ExperimentSpec spec, std::string& bad) {
  std::vector<std::size_t> its;
  for (const auto& r : run_weak_scaling(spec)) {
    if (r.status != "ok" || !r.converged) bad = r.c.grid + " P=" + std::to_string(r.c.parts) + " " + r.status;
    its.push_back(r.iterations);
  }
  return its;
}

Outcome one_dimensional_weak_scaling() {
  ExperimentSpec spec;
  spec.p_values = {16, 32, 64, 128, 256};
  std::string bad;
  std::size_t pcg_max = 0;
  double plateau12 = 0.0;
  for (int s : {8, 10, 12}) {
    spec.s_values = {s};
    spec.method = Method::pcg;
    const auto cg = weak_counts(spec, bad);
    pcg_max = std::max(pcg_max, *std::max_element(cg.begin(), cg.end()));
    spec.method = Method::richardson;
    const auto rich = weak_counts(spec, bad);
    const double plateau = median(std::vector<std::size_t>(rich.begin() + 1, rich.end()));
    info("S=" + std::to_string(s) + " pcg " + join(cg) + " | richardson " + join(rich));
    if (s == 12) plateau12 = plateau;
  }
  if (!bad.empty()) return {false, "not converged: " + bad};
  std::ostringstream os;
  os << "pcg max " << pcg_max << " (limit 34), richardson plateau at S=12 " << plateau12 << " (145 +- 25)";
  return {pcg_max <= 34 && std::abs(plateau12 - 145.0) <= 25.0, os.str()};
}

Outcome six_dimensional_weak_scaling() {
  ExperimentSpec spec;
  spec.d = 6;
  spec.level_rule = LevelRule::balanced;
  spec.p_values = {64, 128, 256};
  std::string bad;
  spec.method = Method::richardson;
  const auto rich = weak_counts(spec, bad);
  spec.method = Method::pcg;
  const auto cg = weak_counts(spec, bad);
  info("P=64,128,256 richardson " + join(rich) + " | pcg " + join(cg));
  if (!bad.empty()) return {false, "not converged: " + bad};
  const auto r = static_cast<double>(rich.back());
  const auto c = static_cast<double>(cg.back());
  std::ostringstream os;
  os << "at P=256 richardson " << r << " (26 +- 7), pcg " << c << " (16 +- 4)";
  return {std::abs(r - 26.0) <= 7.0 && std::abs(c - 16.0) <= 4.0, os.str()};
}

Outcome subdomain_table() {
  const std::uint64_t expect[] = {1, 59, 1391, 20889, 237706, 1754744};
  std::ostringstream os;
  bool ok = true;
  for (int d = 1; d <= 6; ++d) {
    const std::uint64_t got = subdomain_count_total(d, 20, 4) / 4;
    os << (d > 1 ? " " : "") << got;
    if (got != expect[d - 1]) {
      ok = false;
      os << "(expected " << expect[d - 1] << ")";
    }
  }
  return {ok, os.str()};
}

Outcome weightings_coincide() {
  ExperimentSpec spec;
  spec.q_rule = QRule::fixed;
  spec.fixed_q = 16;
  spec.p_values = {4, 8, 16, 32, 64, 128, 256};
  std::string bad;
  std::vector<std::vector<std::size_t>> counts;
  for (Method m : {Method::richardson, Method::pcg}) {
    spec.method = m;
    for (Weighting w : {Weighting::none, Weighting::omega, Weighting::d_matrix}) {
      spec.weighting = w;
      const auto its = weak_counts(spec, bad);
      info(std::string(to_string(m)) + " " + std::string(to_string(w)) + ": " + join(its));
      if (m == Method::richardson) counts.push_back(its);
    }
  }
  if (!bad.empty()) return {false, "not converged: " + bad};
  const bool same = counts[0] == counts[1] && counts[1] == counts[2];
  return {same, same ? "richardson counts identical for P=4..256" : "richardson counts differ"};
}

CombinationOptions tight_options() {
  CombinationOptions opts;
  opts.solver.tolerance = 1e-12;
  return opts;
}

Outcome combination_converges() {
  const auto opts = tight_options();
  std::vector<double> xs, ys;
  bool monotone = true;
  std::ostringstream os;
  for (int level = 4; level <= 8; ++level) {
    const auto comb = run_combination(enumerate_plan(2, level, 4), opts);
    const double err = sampled_error(comb.evaluator, detail::manufactured_u, 2, level, 4096, 42).max_abs;
    const double n = std::ldexp(1.0, level) - 1.0;
    if (!ys.empty() && std::log(err) >= ys.back()) monotone = false;
    xs.push_back(std::log(std::log(n) / (n * n)));
    ys.push_back(std::log(err));
    os << (level > 4 ? " " : "") << err;
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;

  const auto one = run_combination(enumerate_plan(1, 8, 4), opts);
  const std::size_t q = one.partials.at(0).q;
  const PoissonSolve full = solve_poisson(manufactured_poisson(LevelVector{8}), DdOptions{4, 0.5, q, opts.schwarz, opts.solver});
  const bool exact_1d = one.partials.size() == 1 && one.partials[0].values == full.values;

  os << "; slope " << slope << "; d=1 " << (exact_1d ? "identical" : "differs");
  return {monotone && std::abs(slope - 1.0) <= 0.5 && exact_1d, os.str()};
}

Outcome finite_differences_are_second_order() {
  const auto opts = tight_options();
  std::vector<double> errs;
  for (int level = 3; level <= 7; ++level) {
    const PoissonSolve s =
        solve_poisson(manufactured_poisson(LevelVector{level, level}), DdOptions{4, 0.5, 1, opts.schwarz, opts.solver});
    double err = 0.0;
    for (std::size_t p = 0; p < s.grid.size(); ++p)
      err = std::max(err, std::abs(s.values[p] - detail::manufactured_u(s.grid.point_at(p))));
    errs.push_back(err);
  }
  bool ok = true;
  std::ostringstream os;
  os << "ratios";
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double r = errs[i - 1] / errs[i];
    os << " " << r;
    ok = ok && std::abs(r - 4.0) <= 0.6;
  }
  return {ok, os.str()};
}

}  // namespace

int main() {
  Checklist c;
  c.run("1", "overlap weights equal 1/(2gamma+1)", coverage_weights_are_uniform);
  c.run("2", "partition balance and tiling", partitions_balance_and_tile);
  c.run("3", "curve bijectivity, adjacency, Hoelder bound", curve_is_bijective_adjacent_and_holder);
  c.run("4", "operators match dense assembly", operators_match_dense_oracle);
  c.run("5", "Richardson contraction rate", richardson_rate_matches_optimum);
  c.run("6a", "1D weak scaling iteration counts", one_dimensional_weak_scaling);
  c.run("6b", "6D weak scaling iteration counts", six_dimensional_weak_scaling);
  c.run("7", "subdomain counts for L=20", subdomain_table);
  c.run("8", "weightings coincide after balancing", weightings_coincide);
  c.run("9", "combination technique convergence", combination_converges);
  c.run("10", "finite difference convergence order", finite_differences_are_second_order);
  std::printf("%d failed\n", c.failures());
  return c.failures() == 0 ? 0 : 1;
}
