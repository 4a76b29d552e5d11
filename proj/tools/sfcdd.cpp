// Experiment CLI. Every subcommand writes CSV to stdout, or to <out>/<name>.csv
// plus <out>/summary.json when --out is given.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sfcdd/sfcdd.hpp"

namespace {

using json = nlohmann::json;

struct Options {
  int dim = 1;
  std::vector<int> dims{1, 2, 3, 4, 5, 6};
  std::vector<int> s{8};
  std::vector<int> level{16};
  std::vector<std::size_t> p{2, 4, 8, 16, 32, 64, 128, 256};
  std::vector<double> gamma{0.5};
  std::vector<int> levels;
  std::string q_rule = "s_minus_4";
  std::size_t q = 16;
  std::string level_rule = "isotropic_floor";
  std::string solver = "pcg";
  std::string variant = "balanced";
  std::string weighting = "omega";
  double tol = 1e-8;
  std::size_t max_iters = 5000;
  std::uint64_t seed = 42;
  bool eigs = false;
  bool timing = false;
  std::size_t phat = 4;
  std::size_t samples = 4096;
  std::size_t workers = 1;
  int refinement = 4;
  std::string out;
};

sfcdd::ExperimentSpec to_spec(const Options& o, sfcdd::ExperimentKind kind) {
  sfcdd::ExperimentSpec spec;
  spec.kind = kind;
  spec.d = o.dim;
  spec.dims = o.dims;
  spec.s_values = o.s;
  spec.l_values = o.level;
  spec.p_values = o.p;
  spec.gammas = o.gamma;
  if (!o.levels.empty()) spec.levels = sfcdd::LevelVector(o.levels);
  spec.q_rule = sfcdd::parse_q_rule(o.q_rule);
  spec.fixed_q = o.q;
  spec.level_rule = sfcdd::parse_level_rule(o.level_rule);
  spec.method = sfcdd::parse_method(o.solver);
  spec.variant = sfcdd::parse_variant(o.variant);
  spec.weighting = sfcdd::parse_weighting(o.weighting);
  spec.tolerance = o.tol;
  spec.max_iters = o.max_iters;
  spec.seed = o.seed;
  spec.eigenvalues = o.eigs;
  spec.timing = o.timing;
  spec.p_hat = o.phat;
  spec.samples = o.samples;
  spec.workers = o.workers;
  return spec;
}

json spec_json(const sfcdd::ExperimentSpec& s) {
  json j;
  j["kind"] = sfcdd::to_string(s.kind);
  j["d"] = s.d;
  j["dims"] = s.dims;
  j["s"] = s.s_values;
  j["level"] = s.l_values;
  j["p"] = s.p_values;
  j["gamma"] = s.gammas;
  if (s.levels) j["levels"] = s.levels->str();
  j["q_rule"] = sfcdd::to_string(s.q_rule);
  j["q"] = s.fixed_q;
  j["level_rule"] = sfcdd::to_string(s.level_rule);
  j["solver"] = sfcdd::to_string(s.method);
  j["variant"] = sfcdd::to_string(s.variant);
  j["weighting"] = sfcdd::to_string(s.weighting);
  j["tol"] = s.tolerance;
  j["max_iters"] = s.max_iters;
  j["seed"] = s.seed;
  return j;
}

/// Writes `body` to <out>/<name> or stdout.
void emit(const Options& o, const std::string& name, const std::string& body) {
  if (o.out.empty()) {
    std::cout << body;
    return;
  }
  std::filesystem::create_directories(o.out);
  std::ofstream f(std::filesystem::path(o.out) / name, std::ios::binary);
  f << body;
  if (!f) throw sfcdd::Error("cannot write " + name + " in " + o.out);
}

void emit_summary(const Options& o, const json& summary) {
  if (o.out.empty()) {
    std::cerr << summary.dump() << '\n';
    return;
  }
  emit(o, "summary.json", summary.dump(2) + "\n");
}

json rows_summary(const std::vector<sfcdd::CaseResult>& rows) {
  json j = json::array();
  for (const auto& r : rows)
    j.push_back({{"d", r.c.d}, {"grid", r.c.grid}, {"n", r.c.n}, {"p", r.c.parts}, {"gamma", r.c.gamma},
                 {"q", r.c.q}, {"iterations", r.iterations}, {"status", r.status}});
  return j;
}

int run_table(const Options& o, sfcdd::ExperimentKind kind) {
  const auto spec = to_spec(o, kind);
  std::vector<sfcdd::CaseResult> rows;
  switch (kind) {
    case sfcdd::ExperimentKind::weak: rows = sfcdd::run_weak_scaling(spec); break;
    case sfcdd::ExperimentKind::strong: rows = sfcdd::run_strong_scaling(spec); break;
    case sfcdd::ExperimentKind::gamma_sweep: rows = sfcdd::run_gamma_sweep(spec); break;
    case sfcdd::ExperimentKind::dim_sweep: rows = sfcdd::run_dim_sweep(spec); break;
    default: throw sfcdd::Error("not a table experiment");
  }
  std::ostringstream csv;
  sfcdd::write_csv_header(csv, spec);
  for (const auto& r : rows) sfcdd::write_csv_row(csv, spec, r);
  emit(o, std::string(sfcdd::to_string(kind)) + ".csv", csv.str());
  emit_summary(o, {{"spec", spec_json(spec)}, {"rows", rows_summary(rows)}});
  return 0;
}

int run_solve(const Options& o) {
  const auto spec = to_spec(o, sfcdd::ExperimentKind::single);
  const auto r = sfcdd::run_single(spec);
  std::ostringstream csv;
  csv << "# " << spec_json(spec).dump() << "\r\n";
  sfcdd::write_csv_header(csv, spec);
  sfcdd::write_csv_row(csv, spec, r);
  csv << "\r\n";
  sfcdd::write_history_csv(csv, r);
  emit(o, "single.csv", csv.str());
  emit_summary(o, {{"spec", spec_json(spec)}, {"rows", rows_summary({r})}});
  return r.status == "ok" ? 0 : 1;
}

int run_combine(const Options& o) {
  auto spec = to_spec(o, sfcdd::ExperimentKind::combine);
  const int level = o.level.empty() ? spec.d : o.level.front();
  const auto result = sfcdd::run_combine(spec, level);
  std::ostringstream csv;
  sfcdd::write_combination_csv(csv, result, spec);
  emit(o, "combine.csv", csv.str());
  const auto err = sfcdd::sampled_error(result.evaluator, sfcdd::detail::manufactured_u, spec.d, level, spec.samples,
                                        spec.seed);
  json summary{{"spec", spec_json(spec)},
               {"subproblems", result.partials.size()},
               {"subdomains", sfcdd::subdomain_count_total(spec.d, level, spec.p_hat)},
               {"max_abs_error", err.max_abs},
               {"rms_error", err.rms}};
  emit_summary(o, summary);
  return 0;
}

int run_sfc_check(const Options& o) {
  const sfcdd::CurveConfig cfg{o.dim, o.refinement};
  cfg.validate();
  std::ostringstream csv;
  csv << "d,refinement,bijective,adjacent,holder_estimate,holder_bound,samples,seed\r\n";
  std::string bij = "", adj = "";
  if (cfg.key_bits() <= 24) {
    const auto check = sfcdd::check_curve_exhaustive(cfg);
    bij = check.bijective ? "1" : "0";
    adj = check.adjacent ? "1" : "0";
  }
  const double holder = sfcdd::holder_estimate(cfg, o.samples, o.seed);
  csv << o.dim << ',' << o.refinement << ',' << bij << ',' << adj << ',' << sfcdd::detail::format_double(holder) << ','
      << sfcdd::detail::format_double(sfcdd::holder_bound(o.dim)) << ',' << o.samples << ',' << o.seed << "\r\n";
  emit(o, "sfc_check.csv", csv.str());
  return (bij == "0" || adj == "0" || holder > sfcdd::holder_bound(o.dim)) ? 1 : 0;
}

void error_line(std::string_view kind, std::string_view message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-level Schwarz solver on space-filling-curve partitions"};
  app.set_config("--config", "", "key = value configuration file");
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--dim", o.dim, "Dimension d");
  app.add_option("--dims", o.dims, "Dimensions for dim-sweep");
  app.add_option("--s", o.s, "Per-subdomain exponents S (weak scaling)");
  app.add_option("--level", o.level, "Total exponents L (strong scaling) or combination level");
  app.add_option("--p", o.p, "Subdomain counts P");
  app.add_option("--gamma", o.gamma, "Overlap parameters");
  app.add_option("--levels", o.levels, "Level vector for solve")->delimiter(',');
  app.add_option("--q-rule", o.q_rule, "fixed | s_minus_4 | log_ratio_minus_4");
  app.add_option("--q", o.q, "Coarse unknowns per subdomain for --q-rule fixed");
  app.add_option("--level-rule", o.level_rule, "isotropic_floor | balanced");
  app.add_option("--solver", o.solver, "richardson | pcg | fcg");
  app.add_option("--variant", o.variant, "one_level | additive | deflated | balanced");
  app.add_option("--weighting", o.weighting, "none | omega | d_matrix");
  app.add_option("--tol", o.tol, "Error reduction");
  app.add_option("--max-iters", o.max_iters, "Iteration cap");
  app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app.add_flag("--eigs", o.eigs, "Estimate extremal eigenvalues for CG runs too");
  app.add_flag("--timing", o.timing, "Add wall-clock columns");
  app.add_option("--phat", o.phat, "Base parallelism of the combination technique");
  app.add_option("--samples", o.samples, "Random samples for error / Hoelder estimates");
  app.add_option("--workers", o.workers, "Worker threads");
  app.add_option("--refinement", o.refinement, "Curve refinement for sfc-check");
  app.add_option("--out", o.out, "Output directory");

  auto* solve = app.add_subcommand("solve", "Single solve with iteration history");
  auto* weak = app.add_subcommand("weak-scale", "Weak scaling sweep");
  auto* strong = app.add_subcommand("strong-scale", "Strong scaling sweep");
  auto* gamma = app.add_subcommand("gamma-sweep", "Overlap sweep");
  auto* dims = app.add_subcommand("dim-sweep", "Weak scaling over dimensions");
  auto* combine = app.add_subcommand("combine", "Combination technique run");
  auto* sfc = app.add_subcommand("sfc-check", "Curve bijectivity, adjacency and Hoelder estimate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    error_line("usage", e.what());
    return 2;
  }

  try {
    if (*solve) return run_solve(o);
    if (*weak) return run_table(o, sfcdd::ExperimentKind::weak);
    if (*strong) return run_table(o, sfcdd::ExperimentKind::strong);
    if (*gamma) return run_table(o, sfcdd::ExperimentKind::gamma_sweep);
    if (*dims) return run_table(o, sfcdd::ExperimentKind::dim_sweep);
    if (*combine) return run_combine(o);
    if (*sfc) return run_sfc_check(o);
  } catch (const sfcdd::PreconditionError& e) {
    error_line("precondition", e.what());
    return 3;
  } catch (const sfcdd::SolverError& e) {
    error_line("solver", e.what());
    return 4;
  } catch (const std::exception& e) {
    error_line("runtime", e.what());
    return 1;
  }
  return 0;
}
