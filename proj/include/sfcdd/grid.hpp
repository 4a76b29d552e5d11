#pragma once

// Anisotropic tensor grids on [0,1]^d, finite-difference Laplacians in
// space-filling-curve order, diagonal symmetrization and manufactured problems.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sfcdd/error.hpp"
#include "sfcdd/sfc.hpp"
#include "sfcdd/sparse.hpp"

namespace sfcdd {

/// Multivariate level l = (l_1, ..., l_d); mesh width along axis j is 2^-l_j.
class LevelVector {
 public:
  LevelVector() = default;
  LevelVector(std::initializer_list<int> l) : l_(l) { validate(); }
  explicit LevelVector(std::vector<int> l) : l_(std::move(l)) { validate(); }

  static LevelVector isotropic(int dimension, int level) {
    return LevelVector(std::vector<int>(static_cast<std::size_t>(dimension), level));
  }

  int dim() const { return static_cast<int>(l_.size()); }
  int operator[](std::size_t j) const { return l_[j]; }
  std::span<const int> values() const { return l_; }
  int max() const { return *std::max_element(l_.begin(), l_.end()); }
  int sum() const {
    int s = 0;
    for (int v : l_) s += v;
    return s;
  }

  /// Interior points along axis j.
  std::uint64_t points(std::size_t j) const { return (std::uint64_t{1} << l_[j]) - 1; }
  double mesh_width(std::size_t j) const { return std::ldexp(1.0, -l_[j]); }

  friend bool operator==(const LevelVector&, const LevelVector&) = default;
  friend auto operator<=>(const LevelVector& a, const LevelVector& b) { return a.l_ <=> b.l_; }

  std::string str() const {
    std::string s = "(";
    for (std::size_t j = 0; j < l_.size(); ++j) s += (j ? "," : "") + std::to_string(l_[j]);
    return s + ")";
  }

 private:
  void validate() const {
    detail::require(!l_.empty(), "level vector must have at least one axis");
    for (int v : l_) detail::require(v >= 1 && v <= 62, "level entries must lie in [1, 62]");
  }

  std::vector<int> l_;
};

/// Interior multi-index, 1 <= k_j <= 2^l_j - 1.
using GridIndex = std::vector<std::uint32_t>;

/// N = prod_j (2^l_j - 1). Throws when the product overflows 64 bits.
inline std::uint64_t num_dofs(const LevelVector& levels) {
  std::uint64_t n = 1;
  for (int j = 0; j < levels.dim(); ++j) {
    const std::uint64_t f = levels.points(static_cast<std::size_t>(j));
    if (n > std::numeric_limits<std::uint64_t>::max() / f)
      throw PreconditionError("num_dofs: grid size " + levels.str() + " overflows 64 bits");
    n *= f;
  }
  return n;
}

/// The interior points of a grid listed in Hilbert-curve order.
/// Lexicographic numbering has the last axis running fastest.
class GridOrdering {
 public:
  GridOrdering() = default;

  explicit GridOrdering(LevelVector levels) : levels_(std::move(levels)) {
    const std::uint64_t n64 = num_dofs(levels_);
    detail::require(n64 <= (std::uint64_t{1} << 32), "grid too large for in-memory assembly");
    const auto n = static_cast<std::size_t>(n64);
    std::vector<std::pair<uint128, std::uint32_t>> keyed(n);
    GridIndex k(static_cast<std::size_t>(levels_.dim()));
    for (std::size_t lex = 0; lex < n; ++lex) {
      unflatten(lex, k);
      keyed[lex] = {grid_point_key(k, levels_.values()).value, static_cast<std::uint32_t>(lex)};
    }
    std::sort(keyed.begin(), keyed.end());
    sfc_to_lex_.resize(n);
    lex_to_sfc_.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
      sfc_to_lex_[p] = keyed[p].second;
      lex_to_sfc_[keyed[p].second] = static_cast<std::uint32_t>(p);
    }
  }

  const LevelVector& levels() const { return levels_; }
  std::size_t size() const { return sfc_to_lex_.size(); }

  std::size_t sfc_to_lex(std::size_t p) const { return sfc_to_lex_[p]; }
  std::size_t lex_to_sfc(std::size_t lex) const { return lex_to_sfc_[lex]; }

  void unflatten(std::size_t lex, GridIndex& k) const {
    for (int j = levels_.dim() - 1; j >= 0; --j) {
      const auto m = levels_.points(static_cast<std::size_t>(j));
      k[static_cast<std::size_t>(j)] = static_cast<std::uint32_t>(lex % m) + 1;
      lex /= m;
    }
  }

  std::size_t flatten(std::span<const std::uint32_t> k) const {
    std::size_t lex = 0;
    for (int j = 0; j < levels_.dim(); ++j) lex = lex * levels_.points(static_cast<std::size_t>(j)) + (k[j] - 1);
    return lex;
  }

  /// Multi-index of the p-th point along the curve.
  GridIndex index_at(std::size_t p) const {
    GridIndex k(static_cast<std::size_t>(levels_.dim()));
    unflatten(sfc_to_lex_[p], k);
    return k;
  }

  /// Coordinates in [0,1]^d of the p-th point along the curve.
  std::vector<double> point_at(std::size_t p) const {
    const auto k = index_at(p);
    std::vector<double> x(k.size());
    for (std::size_t j = 0; j < k.size(); ++j) x[j] = k[j] * levels_.mesh_width(j);
    return x;
  }

 private:
  LevelVector levels_;
  std::vector<std::uint32_t> sfc_to_lex_;
  std::vector<std::uint32_t> lex_to_sfc_;
};

/// (2d+1)-point finite-difference Laplacian with homogeneous Dirichlet
/// boundary, rows and columns in curve order.
inline CsrMatrix assemble_laplacian(const GridOrdering& grid) {
  const auto& levels = grid.levels();
  const int d = levels.dim();
  const std::size_t n = grid.size();
  std::vector<double> inv_h2(static_cast<std::size_t>(d));
  double diag = 0.0;
  for (int j = 0; j < d; ++j) {
    inv_h2[j] = std::ldexp(1.0, 2 * levels[static_cast<std::size_t>(j)]);
    diag += 2.0 * inv_h2[j];
  }
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  cols.reserve(n * static_cast<std::size_t>(2 * d + 1));
  vals.reserve(cols.capacity());
  std::vector<std::pair<std::size_t, double>> row;
  GridIndex k(static_cast<std::size_t>(d));
  for (std::size_t p = 0; p < n; ++p) {
    grid.unflatten(grid.sfc_to_lex(p), k);
    row.clear();
    row.emplace_back(p, diag);
    for (int j = 0; j < d; ++j) {
      const auto m = static_cast<std::uint32_t>(levels.points(static_cast<std::size_t>(j)));
      const std::uint32_t kj = k[j];
      if (kj > 1) {
        k[j] = kj - 1;
        row.emplace_back(grid.lex_to_sfc(grid.flatten(k)), -inv_h2[j]);
      }
      if (kj < m) {
        k[j] = kj + 1;
        row.emplace_back(grid.lex_to_sfc(grid.flatten(k)), -inv_h2[j]);
      }
      k[j] = kj;
    }
    std::sort(row.begin(), row.end());
    for (const auto& [c, v] : row) {
      cols.push_back(c);
      vals.push_back(v);
    }
    offsets[p + 1] = cols.size();
  }
  return CsrMatrix(n, n, std::move(offsets), std::move(cols), std::move(vals));
}

inline CsrMatrix assemble_laplacian(const LevelVector& levels) { return assemble_laplacian(GridOrdering(levels)); }

/// 1-D Laplacian on n interior points of [0,1] (h = 1/(n+1)), for sizes that
/// are not of the form 2^l - 1. The curve order is the natural order in 1-D.
inline CsrMatrix laplacian_1d(std::size_t n) {
  detail::require(n >= 1, "laplacian_1d: need at least one point");
  const double h = 1.0 / static_cast<double>(n + 1);
  const double s = 1.0 / (h * h);
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  cols.reserve(3 * n);
  vals.reserve(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      cols.push_back(i - 1);
      vals.push_back(-s);
    }
    cols.push_back(i);
    vals.push_back(2.0 * s);
    if (i + 1 < n) {
      cols.push_back(i + 1);
      vals.push_back(-s);
    }
    offsets[i + 1] = cols.size();
  }
  return CsrMatrix(n, n, std::move(offsets), std::move(cols), std::move(vals));
}

/// Result of the diagonal scaling T = diag(A)^(-1/2): A_hat = T A T, b_hat = T b.
struct SymmetrizedSystem {
  CsrMatrix matrix;
  Vector rhs;
  Vector scaling;  // diagonal of T

  /// x = T x_hat
  Vector unscale(std::span<const double> x_hat) const {
    Vector x(x_hat.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = scaling[i] * x_hat[i];
    return x;
  }

  /// x_hat = T^-1 x
  Vector scale(std::span<const double> x) const {
    Vector x_hat(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) x_hat[i] = x[i] / scaling[i];
    return x_hat;
  }
};

inline SymmetrizedSystem symmetrize_diag(const CsrMatrix& a, std::span<const double> b) {
  detail::require(a.rows() == a.cols() && b.size() == a.rows(), "symmetrize_diag: dimension mismatch");
  const Vector diag = a.diagonal();
  Vector t(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) {
    if (!(diag[i] > 0.0)) throw PreconditionError("symmetrize_diag: nonpositive diagonal at row " + std::to_string(i));
    t[i] = 1.0 / std::sqrt(diag[i]);
  }
  std::vector<double> vals(a.values().begin(), a.values().end());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t e = a.row_offsets()[r]; e < a.row_offsets()[r + 1]; ++e) {
      const std::size_t c = a.col_indices()[e];
      vals[e] = (r == c) ? 1.0 : t[r] * vals[e] * t[c];
    }
  CsrMatrix scaled(a.rows(), a.cols(), std::vector<std::size_t>(a.row_offsets().begin(), a.row_offsets().end()),
                   std::vector<std::size_t>(a.col_indices().begin(), a.col_indices().end()), std::move(vals));
  Vector rhs(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) rhs[i] = t[i] * b[i];
  return {std::move(scaled), std::move(rhs), std::move(t)};
}

using PointFunction = std::function<double(std::span<const double>)>;

/// -Laplace(u) = f on [0,1]^d with homogeneous Dirichlet data.
struct Problem {
  LevelVector levels;
  PointFunction rhs;
  std::optional<PointFunction> exact_solution;
};

namespace detail {

inline double manufactured_u(std::span<const double> x) {
  double r2 = 0.0;
  double g = 1.0;
  for (double xi : x) {
    r2 += xi * xi;
    g *= std::sin(std::numbers::pi * xi);
  }
  return std::sqrt(r2) * g;
}

inline double manufactured_f(std::span<const double> x) {
  const double pi = std::numbers::pi;
  const auto d = static_cast<double>(x.size());
  double r2 = 0.0;
  double g = 1.0;
  for (double xi : x) {
    r2 += xi * xi;
    g *= std::sin(pi * xi);
  }
  const double r = std::sqrt(r2);
  double cross = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double others = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j)
      if (j != i) others *= std::sin(pi * x[j]);
    cross += (x[i] / r) * std::cos(pi * x[i]) * others;
  }
  return -(g * (d - 1.0) / r + 2.0 * pi * cross - d * pi * pi * r * g);
}

}  // namespace detail

/// u(x) = |x|_2 * prod_i sin(pi x_i) and f = -Laplace(u) in closed form.
inline Problem manufactured_poisson(const LevelVector& levels) {
  return Problem{levels, detail::manufactured_f, PointFunction(detail::manufactured_u)};
}

/// Right-hand side sampled at the grid nodes, in curve order.
inline Vector sample_in_curve_order(const GridOrdering& grid, const PointFunction& f) {
  Vector v(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) v[p] = f(grid.point_at(p));
  return v;
}

}  // namespace sfcdd
