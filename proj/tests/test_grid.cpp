#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracle.hpp"
#include "sfcdd/grid.hpp"
#include "sfcdd/sparse.hpp"

using namespace sfcdd;

TEST(Grid, NumDofs) {
  EXPECT_EQ(num_dofs(LevelVector{3, 3}), 49u);
  EXPECT_EQ(num_dofs(LevelVector{2, 3}), 21u);
  EXPECT_EQ(num_dofs(LevelVector::isotropic(6, 1)), 1u);
  EXPECT_THROW(num_dofs(LevelVector{40, 40}), PreconditionError);
}

TEST(Grid, LevelVectorValidation) {
  EXPECT_THROW(LevelVector({0, 2}), PreconditionError);
  EXPECT_THROW(LevelVector(std::vector<int>{}), PreconditionError);
  EXPECT_EQ(LevelVector({2, 3}).str(), "(2,3)");
  EXPECT_DOUBLE_EQ(LevelVector({2, 3}).mesh_width(1), 0.125);
}

TEST(Grid, OneDimensionalStencil) {
  const auto a = assemble_laplacian(LevelVector{2});
  const oracle::Dense expected{{32, -16, 0}, {-16, 32, -16}, {0, -16, 32}};
  EXPECT_EQ(oracle::to_dense(a), expected);
}

TEST(Grid, SinglePointTwoDimensional) {
  const auto a = assemble_laplacian(LevelVector{1, 1});
  ASSERT_EQ(a.rows(), 1u);
  EXPECT_EQ(a.at(0, 0), 16.0);
}

TEST(Grid, MatchesLexicographicOracleUnderCurvePermutation) {
  for (const std::vector<int>& l : {std::vector<int>{2, 2}, std::vector<int>{2, 3}, std::vector<int>{3, 1, 2}}) {
    const GridOrdering grid{LevelVector(l)};
    const oracle::Dense a = oracle::to_dense(assemble_laplacian(grid));
    const oracle::Dense ref = oracle::lex_laplacian(l);
    for (std::size_t p = 0; p < grid.size(); ++p)
      for (std::size_t q = 0; q < grid.size(); ++q)
        EXPECT_EQ(a(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)),
                  ref(static_cast<Eigen::Index>(grid.sfc_to_lex(p)), static_cast<Eigen::Index>(grid.sfc_to_lex(q))));
    EXPECT_TRUE(assemble_laplacian(grid).is_symmetric());
    const auto ones = matvec(assemble_laplacian(grid), std::vector<double>(grid.size(), 1.0));
    for (double v : ones) EXPECT_GE(v, 0.0);
  }
}

TEST(Grid, CurveOrderFollowsKeys) {
  const GridOrdering grid{LevelVector{2, 3}};
  SfcKey prev{0};
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto k = grid.index_at(p);
    const auto key = grid_point_key(k, grid.levels().values());
    if (p > 0) {
      EXPECT_LT(prev, key);
    }
    prev = key;
    EXPECT_EQ(grid.lex_to_sfc(grid.sfc_to_lex(p)), p);
  }
}

TEST(Grid, PositiveDefiniteForModerateSizes) {
  for (const LevelVector& l : {LevelVector{5, 5}, LevelVector{3, 3, 3}, LevelVector{10}, LevelVector{2, 6}})
    EXPECT_NO_THROW(DenseCholesky{assemble_laplacian(l)}) << l.str();
}

TEST(Grid, SymmetrizeIdentity) {
  const std::vector<double> b{1.0, 2.0};
  const auto sys = symmetrize_diag(CsrMatrix::identity(2), b);
  EXPECT_EQ(oracle::to_dense(sys.matrix), oracle::Dense::Identity(2, 2));
  EXPECT_EQ(sys.scaling, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(sys.rhs, b);
}

TEST(Grid, SymmetrizeOneDimensional) {
  const auto sys = symmetrize_diag(assemble_laplacian(LevelVector{2}), std::vector<double>(3, 1.0));
  const oracle::Dense expected{{1, -0.5, 0}, {-0.5, 1, -0.5}, {0, -0.5, 1}};
  EXPECT_LE((oracle::to_dense(sys.matrix) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Grid, SymmetrizeAnisotropic) {
  const auto a = assemble_laplacian(LevelVector{2, 3});
  const auto sys = symmetrize_diag(a, std::vector<double>(a.rows(), 1.0));
  EXPECT_TRUE(sys.matrix.is_symmetric());
  for (double v : sys.matrix.diagonal()) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(Grid, SymmetrizeRejectsNonpositiveDiagonal) {
  const auto a = CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, 0.0}});
  EXPECT_THROW(symmetrize_diag(a, std::vector<double>(2, 1.0)), PreconditionError);
}

TEST(Grid, SymmetrizePreservesSolution) {
  const auto a = assemble_laplacian(LevelVector{4, 5});
  Rng rng(1);
  std::vector<double> b(a.rows());
  for (auto& v : b) v = uniform(rng, -1.0, 1.0);
  const auto sys = symmetrize_diag(a, b);
  const auto x = sys.unscale(solve(factorize(sys.matrix), sys.rhs));
  const oracle::Vec ref = oracle::to_dense(a).llt().solve(oracle::to_eigen(b));
  EXPECT_LE((oracle::to_eigen(x) - ref).norm(), 1e-10 * ref.norm());
  const auto back = sys.scale(sys.unscale(b));
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(back[i], b[i], 1e-15);
}

TEST(Grid, ManufacturedSolutionVanishesOnBoundary) {
  const auto prob = manufactured_poisson(LevelVector{3, 3, 3});
  for (const std::vector<double>& x : {std::vector<double>{0.0, 0.3, 0.4}, std::vector<double>{0.2, 1.0, 0.7},
                                       std::vector<double>{0.5, 0.5, 0.0}})
    EXPECT_NEAR((*prob.exact_solution)(x), 0.0, 1e-15);
}

TEST(Grid, ManufacturedRhsMatchesFiniteDifferenceOfSolution) {
  for (int d = 1; d <= 4; ++d) {
    const auto prob = manufactured_poisson(LevelVector::isotropic(d, 2));
    for (const double c : {0.5, 0.3, 0.81}) {
      const std::vector<double> x(static_cast<std::size_t>(d), c);
      const double f = prob.rhs(x);
      // Extrapolated central differences, O(h^4).
      const double ref = (4.0 * oracle::fd_laplacian_of_u(x, 5e-4) - oracle::fd_laplacian_of_u(x, 1e-3)) / 3.0;
      EXPECT_NEAR(f, ref, 1e-7 * std::max(1.0, std::abs(ref))) << "d=" << d << " x=" << c;
    }
  }
}

TEST(Grid, OneDimensionalRhsClosedForm) {
  const auto prob = manufactured_poisson(LevelVector{4});
  const double pi = std::numbers::pi;
  for (const double x : {0.1, 0.25, 0.5, 0.9}) {
    const double expected = -(2.0 * pi * std::cos(pi * x) - pi * pi * x * std::sin(pi * x));
    const std::vector<double> pt{x};
    EXPECT_NEAR(prob.rhs(pt), expected, 1e-12);
  }
}

TEST(Grid, SecondOrderConvergenceInTwoDimensions) {
  double prev = 0.0;
  for (int l = 3; l <= 6; ++l) {
    const GridOrdering grid{LevelVector{l, l}};
    const auto prob = manufactured_poisson(grid.levels());
    const auto x = solve(factorize(assemble_laplacian(grid)), sample_in_curve_order(grid, prob.rhs));
    double err = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p)
      err = std::max(err, std::abs(x[p] - (*prob.exact_solution)(grid.point_at(p))));
    if (prev > 0.0) {
      EXPECT_NEAR(prev / err, 4.0, 0.6) << "level " << l;
    }
    prev = err;
  }
}

TEST(Grid, OneDimensionalWeakScalingMatrix) {
  const auto a = laplacian_1d(5);
  EXPECT_EQ(a.rows(), 5u);
  EXPECT_DOUBLE_EQ(a.at(0, 0), 2.0 * 36.0);
  EXPECT_DOUBLE_EQ(a.at(0, 1), -36.0);
  EXPECT_EQ(oracle::to_dense(assemble_laplacian(LevelVector{3})), oracle::to_dense(laplacian_1d(7)));
}
