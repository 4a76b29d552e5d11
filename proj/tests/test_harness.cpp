#include <gtest/gtest.h>

#include <sstream>

#include "sfcdd/harness.hpp"

using namespace sfcdd;

namespace {

std::string to_csv(const ExperimentSpec& spec, const std::vector<CaseResult>& rows) {
  std::ostringstream os;
  write_csv_header(os, spec);
  for (const auto& r : rows) write_csv_row(os, spec, r);
  return os.str();
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t end = s.find("\r\n", pos);
    out.push_back(s.substr(pos, end - pos));
    pos = end + 2;
  }
  return out;
}

std::size_t count_fields(const std::string& line) {
  std::size_t n = 1;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) ++n;
  }
  return n;
}

}  // namespace

TEST(Harness, LevelRules) {
  EXPECT_EQ(levels_for_exponent(6, 12, LevelRule::isotropic_floor), LevelVector::isotropic(6, 2));
  EXPECT_EQ(levels_for_exponent(6, 16, LevelRule::isotropic_floor), LevelVector::isotropic(6, 2));
  EXPECT_EQ(levels_for_exponent(6, 16, LevelRule::balanced), (LevelVector{3, 3, 3, 3, 2, 2}));
  EXPECT_EQ(levels_for_exponent(2, 9, LevelRule::balanced), (LevelVector{5, 4}));
  EXPECT_EQ(levels_for_exponent(3, 9, LevelRule::balanced), LevelVector::isotropic(3, 3));
  EXPECT_THROW(levels_for_exponent(3, 2, LevelRule::balanced), PreconditionError);
  EXPECT_EQ(parse_level_rule("floor"), LevelRule::isotropic_floor);
  EXPECT_THROW(parse_level_rule("round"), PreconditionError);
}

TEST(Harness, WeakCaseSizes) {
  ExperimentSpec spec;
  const auto [c1, a1] = weak_case(spec, 1, 8, 16, 0.5);
  EXPECT_EQ(c1.n, 4096u);
  EXPECT_EQ(c1.q, 16u);
  EXPECT_EQ(c1.grid, "n=4096");
  ASSERT_TRUE(a1);
  EXPECT_EQ(a1->rows(), 4096u);

  const auto [c6, a6] = weak_case(spec, 6, 8, 256, 0.5);
  EXPECT_EQ(c6.grid, "(2,2,2,2,2,2)");
  EXPECT_EQ(c6.n, 729u);
  const auto [tiny, none] = weak_case(spec, 6, 8, 4, 0.5);
  EXPECT_EQ(tiny.n, 1u);
  EXPECT_FALSE(none);
  spec.level_rule = LevelRule::balanced;
  const auto [b6, ab6] = weak_case(spec, 6, 8, 256, 0.5);
  EXPECT_EQ(b6.n, 21609u);
}

TEST(Harness, CsvQuotingAndNumbers) {
  EXPECT_EQ(detail::csv_field("plain"), "plain");
  EXPECT_EQ(detail::csv_field("(2,3)"), "\"(2,3)\"");
  EXPECT_EQ(detail::csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(detail::format_double(0.5), "0.5");
  EXPECT_EQ(detail::format_double(std::nan("")), "");
}

TEST(Harness, RowsCarryTheFullParameterTuple) {
  ExperimentSpec spec;
  spec.p_values = {4, 8};
  const auto rows = run_weak_scaling(spec);
  const auto lines = split_lines(to_csv(spec, rows));
  ASSERT_EQ(lines.size(), 3u);
  const std::size_t header_fields = count_fields(lines[0]);
  for (const auto& l : lines) EXPECT_EQ(count_fields(l), header_fields);
  EXPECT_EQ(lines[1].rfind("weak,1,n=1024,8,1024,4,0.5,16,balanced,omega,pcg,42,", 0), 0u) << lines[1];
  EXPECT_EQ(lines[2].substr(lines[2].size() - 3), ",ok");
}

TEST(Harness, SameSeedReproducesBytes) {
  ExperimentSpec spec;
  spec.method = Method::richardson;
  spec.p_values = {4, 16};
  spec.eigenvalues = true;
  EXPECT_EQ(to_csv(spec, run_weak_scaling(spec)), to_csv(spec, run_weak_scaling(spec)));
  spec.timing = true;
  EXPECT_NE(to_csv(spec, {}).find(",seconds"), std::string::npos);
}

TEST(Harness, InfeasibleCasesAreSkipped) {
  ExperimentSpec spec;
  spec.p_values = {2, 4};
  spec.gammas = {1.0};
  const auto rows = run_weak_scaling(spec);
  EXPECT_EQ(rows[0].status, "skipped: 2*gamma+1 > P");
  EXPECT_EQ(rows[1].status, "ok");

  ExperimentSpec strong;
  strong.kind = ExperimentKind::strong;
  strong.l_values = {3};
  strong.p_values = {4, 8, 16};
  const auto srows = run_strong_scaling(strong);
  EXPECT_EQ(srows[0].status, "ok");
  EXPECT_EQ(srows[1].status, "ok");
  EXPECT_EQ(srows[2].status, "skipped: P > N");
}

TEST(Harness, StrongScalingDownToOneUnknownPerSubdomain) {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::strong;
  spec.l_values = {6};
  spec.p_values = {64};
  spec.q_rule = QRule::per_ratio;
  const auto rows = run_strong_scaling(spec);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].c.q, 1u);
  EXPECT_TRUE(rows[0].converged) << rows[0].status;
}

TEST(Harness, AllWeightingsAgreeAfterBalancing) {
  ExperimentSpec spec;
  spec.method = Method::richardson;
  spec.q_rule = QRule::fixed;
  spec.fixed_q = 16;
  spec.p_values = {4, 8, 16};
  std::vector<std::vector<std::size_t>> counts;
  for (Weighting w : {Weighting::none, Weighting::omega, Weighting::d_matrix}) {
    spec.weighting = w;
    std::vector<std::size_t> its;
    for (const auto& r : run_weak_scaling(spec)) its.push_back(r.iterations);
    counts.push_back(its);
  }
  EXPECT_EQ(counts[0], counts[1]);
  EXPECT_EQ(counts[1], counts[2]);
}

TEST(Harness, SingleRunConvergesWithHistory) {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::single;
  spec.levels = LevelVector{3, 3};
  spec.p_values = {4};
  const auto r = run_single(spec);
  ASSERT_EQ(r.status, "ok");
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.energy_error.back(), 1e-8 * r.energy_error.front());
  std::ostringstream os;
  write_history_csv(os, r);
  EXPECT_EQ(split_lines(os.str()).size(), r.residual.size() + 1);
}

TEST(Harness, DimensionSweepCoversEachDimension) {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::dim_sweep;
  spec.dims = {1, 2, 3};
  spec.s_values = {4};
  spec.p_values = {4};
  const auto rows = run_dim_sweep(spec);
  ASSERT_EQ(rows.size(), 3u);
  for (int d = 1; d <= 3; ++d) {
    EXPECT_EQ(rows[static_cast<std::size_t>(d - 1)].c.d, d);
    EXPECT_EQ(rows[static_cast<std::size_t>(d - 1)].status, "ok");
  }
}

TEST(Harness, CombinationSummary) {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::combine;
  spec.d = 2;
  spec.p_hat = 2;
  const auto result = run_combine(spec, 4);
  std::ostringstream os;
  write_combination_csv(os, result, spec);
  const auto lines = split_lines(os.str());
  EXPECT_EQ(lines.size(), result.plan.subproblem_count() + 1);
  EXPECT_EQ(lines[1].rfind("\"(1,4)\",0,1,15,", 0), 0u) << lines[1];
}
