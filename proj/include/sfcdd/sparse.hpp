#pragma once

// Row-compressed sparse matrices, vector kernels and direct Cholesky solvers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "sfcdd/error.hpp"

namespace sfcdd {

using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// Vector kernels

inline double dot(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() == b.size(), "dot: dimension mismatch");
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  const std::size_t n = a.size();
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  detail::require(x.size() == y.size(), "axpy: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// ---------------------------------------------------------------------------
// CSR matrix

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed row storage. Column indices are strictly increasing inside
/// each row; explicit zeros may be stored.
class CsrMatrix {
 public:
  CsrMatrix() = default;

  CsrMatrix(std::size_t nrows, std::size_t ncols, std::vector<std::size_t> row_offsets,
            std::vector<std::size_t> col_indices, std::vector<double> values)
      : nrows_(nrows),
        ncols_(ncols),
        row_offsets_(std::move(row_offsets)),
        col_indices_(std::move(col_indices)),
        values_(std::move(values)) {
    validate();
  }

  /// Builds from unordered triplets; duplicates are summed.
  static CsrMatrix from_triplets(std::size_t nrows, std::size_t ncols, std::vector<Triplet> entries) {
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    std::vector<std::size_t> offsets(nrows + 1, 0);
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    cols.reserve(entries.size());
    vals.reserve(entries.size());
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const auto& t = entries[e];
      detail::require(t.row < nrows && t.col < ncols, "triplet outside matrix bounds");
      if (e > 0 && entries[e - 1].row == t.row && entries[e - 1].col == t.col) {
        vals.back() += t.value;
        continue;
      }
      cols.push_back(t.col);
      vals.push_back(t.value);
      ++offsets[t.row + 1];
    }
    for (std::size_t r = 0; r < nrows; ++r) offsets[r + 1] += offsets[r];
    return CsrMatrix(nrows, ncols, std::move(offsets), std::move(cols), std::move(vals));
  }

  static CsrMatrix identity(std::size_t n) {
    std::vector<std::size_t> offsets(n + 1);
    std::iota(offsets.begin(), offsets.end(), std::size_t{0});
    std::vector<std::size_t> cols(n);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    return CsrMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
  }

  std::size_t rows() const { return nrows_; }
  std::size_t cols() const { return ncols_; }
  std::size_t nonzeros() const { return values_.size(); }

  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const std::size_t> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }

  std::span<const std::size_t> row_cols(std::size_t r) const {
    return {col_indices_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }

  /// Entry (r, c), zero when not stored.
  double at(std::size_t r, std::size_t c) const {
    const auto cs = row_cols(r);
    const auto it = std::lower_bound(cs.begin(), cs.end(), c);
    if (it == cs.end() || *it != c) return 0.0;
    return values_[row_offsets_[r] + static_cast<std::size_t>(it - cs.begin())];
  }

  Vector diagonal() const {
    Vector d(std::min(nrows_, ncols_), 0.0);
    for (std::size_t r = 0; r < d.size(); ++r) d[r] = at(r, r);
    return d;
  }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    detail::require(x.size() == ncols_ && y.size() == nrows_, "matvec: dimension mismatch");
    for (std::size_t r = 0; r < nrows_; ++r) {
      double s = 0.0;
      for (std::size_t e = row_offsets_[r]; e < row_offsets_[r + 1]; ++e) s += values_[e] * x[col_indices_[e]];
      y[r] = s;
    }
  }

  /// y = A^T x
  void multiply_transpose(std::span<const double> x, std::span<double> y) const {
    detail::require(x.size() == nrows_ && y.size() == ncols_, "transposed matvec: dimension mismatch");
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t r = 0; r < nrows_; ++r)
      for (std::size_t e = row_offsets_[r]; e < row_offsets_[r + 1]; ++e) y[col_indices_[e]] += values_[e] * x[r];
  }

  CsrMatrix transpose() const {
    std::vector<std::size_t> offsets(ncols_ + 1, 0);
    for (auto c : col_indices_) ++offsets[c + 1];
    for (std::size_t c = 0; c < ncols_; ++c) offsets[c + 1] += offsets[c];
    std::vector<std::size_t> cols(values_.size());
    std::vector<double> vals(values_.size());
    std::vector<std::size_t> next(offsets.begin(), offsets.end() - 1);
    for (std::size_t r = 0; r < nrows_; ++r)
      for (std::size_t e = row_offsets_[r]; e < row_offsets_[r + 1]; ++e) {
        const std::size_t slot = next[col_indices_[e]]++;
        cols[slot] = r;
        vals[slot] = values_[e];
      }
    return CsrMatrix(ncols_, nrows_, std::move(offsets), std::move(cols), std::move(vals));
  }

  /// Exact structural and numerical symmetry.
  bool is_symmetric() const {
    if (nrows_ != ncols_) return false;
    for (std::size_t r = 0; r < nrows_; ++r)
      for (std::size_t e = row_offsets_[r]; e < row_offsets_[r + 1]; ++e)
        if (at(col_indices_[e], r) != values_[e]) return false;
    return true;
  }

 private:
  void validate() const {
    detail::require(row_offsets_.size() == nrows_ + 1, "CSR: row_offsets must have nrows+1 entries");
    detail::require(row_offsets_.front() == 0 && row_offsets_.back() == col_indices_.size(),
                    "CSR: row_offsets must start at 0 and end at nnz");
    detail::require(col_indices_.size() == values_.size(), "CSR: column and value arrays differ in length");
    for (std::size_t r = 0; r < nrows_; ++r) {
      detail::require(row_offsets_[r] <= row_offsets_[r + 1], "CSR: row_offsets must be nondecreasing");
      for (std::size_t e = row_offsets_[r]; e < row_offsets_[r + 1]; ++e) {
        detail::require(col_indices_[e] < ncols_, "CSR: column index out of range");
        detail::require(e == row_offsets_[r] || col_indices_[e - 1] < col_indices_[e],
                        "CSR: column indices must increase strictly within a row");
      }
    }
  }

  std::size_t nrows_ = 0;
  std::size_t ncols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

inline Vector matvec(const CsrMatrix& a, std::span<const double> x) {
  Vector y(a.rows());
  a.multiply(x, y);
  return y;
}

/// Sparse product A * B (Gustavson, dense accumulator per row).
inline CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
  detail::require(a.cols() == b.rows(), "sparse product: dimension mismatch");
  std::vector<std::size_t> offsets(a.rows() + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  std::vector<double> acc(b.cols(), 0.0);
  std::vector<std::size_t> marker(b.cols(), ~std::size_t{0});
  std::vector<std::size_t> touched;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    touched.clear();
    const auto acols = a.row_cols(r);
    const auto avals = a.row_values(r);
    for (std::size_t e = 0; e < acols.size(); ++e) {
      const auto bcols = b.row_cols(acols[e]);
      const auto bvals = b.row_values(acols[e]);
      for (std::size_t f = 0; f < bcols.size(); ++f) {
        const std::size_t c = bcols[f];
        if (marker[c] != r) {
          marker[c] = r;
          acc[c] = 0.0;
          touched.push_back(c);
        }
        acc[c] += avals[e] * bvals[f];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (auto c : touched) {
      cols.push_back(c);
      vals.push_back(acc[c]);
    }
    offsets[r + 1] = cols.size();
  }
  return CsrMatrix(a.rows(), b.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

/// Galerkin product R A R^T.
inline CsrMatrix triple_product(const CsrMatrix& r, const CsrMatrix& a) {
  detail::require(r.cols() == a.rows() && a.rows() == a.cols(), "triple product: dimension mismatch");
  return multiply(multiply(r, a), r.transpose());
}

/// Principal submatrix on the given global indices, in the given order.
/// `local_of(g)` must return the local position of global index g, or
/// `npos` when g is not selected.
template <typename LocalOf>
CsrMatrix principal_submatrix(const CsrMatrix& a, std::span<const std::size_t> globals, LocalOf&& local_of) {
  constexpr std::size_t npos = ~std::size_t{0};
  const std::size_t n = globals.size();
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  std::vector<std::pair<std::size_t, double>> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    const auto acols = a.row_cols(globals[i]);
    const auto avals = a.row_values(globals[i]);
    for (std::size_t e = 0; e < acols.size(); ++e) {
      const std::size_t local = local_of(acols[e]);
      if (local != npos) row.emplace_back(local, avals[e]);
    }
    std::sort(row.begin(), row.end());
    for (const auto& [c, v] : row) {
      cols.push_back(c);
      vals.push_back(v);
    }
    offsets[i + 1] = cols.size();
  }
  return CsrMatrix(n, n, std::move(offsets), std::move(cols), std::move(vals));
}

// ---------------------------------------------------------------------------
// Direct solvers

/// Dense Cholesky A = L L^T, L stored row-major (lower triangle).
class DenseCholesky {
 public:
  DenseCholesky() = default;

  explicit DenseCholesky(const CsrMatrix& a) : n_(a.rows()), l_(n_ * n_, 0.0) {
    detail::require(a.rows() == a.cols(), "Cholesky needs a square matrix");
    for (std::size_t r = 0; r < n_; ++r) {
      const auto cols = a.row_cols(r);
      const auto vals = a.row_values(r);
      for (std::size_t e = 0; e < cols.size(); ++e)
        if (cols[e] <= r) l_[r * n_ + cols[e]] = vals[e];
    }
    factor();
  }

  /// From a dense row-major symmetric matrix (only the lower triangle is read).
  DenseCholesky(std::size_t n, std::span<const double> dense) : n_(n), l_(n * n, 0.0) {
    detail::require(dense.size() == n * n, "dense Cholesky: size mismatch");
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c <= r; ++c) l_[r * n + c] = dense[r * n + c];
    factor();
  }

  std::size_t size() const { return n_; }

  void solve(std::span<const double> b, std::span<double> x) const {
    detail::require(b.size() == n_ && x.size() == n_, "Cholesky solve: dimension mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
      const double* row = &l_[i * n_];
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= row[k] * x[k];
      x[i] = s / row[i];
    }
    for (std::size_t i = n_; i-- > 0;) {
      x[i] /= l_[i * n_ + i];
      const double xi = x[i];
      const double* row = &l_[i * n_];
      for (std::size_t k = 0; k < i; ++k) x[k] -= row[k] * xi;
    }
  }

  /// L(i, j) for j <= i.
  double factor_entry(std::size_t i, std::size_t j) const { return l_[i * n_ + j]; }

 private:
  void factor() {
    for (std::size_t i = 0; i < n_; ++i) {
      double* ri = &l_[i * n_];
      for (std::size_t j = 0; j <= i; ++j) {
        const double* rj = &l_[j * n_];
        const double s = ri[j] - dot(std::span<const double>(ri, j), std::span<const double>(rj, j));
        if (j < i) {
          ri[j] = s / rj[j];
        } else {
          if (!(s > 0.0)) throw FactorizationError("Cholesky: nonpositive pivot at row " + std::to_string(i));
          ri[i] = std::sqrt(s);
        }
      }
    }
  }

  std::size_t n_ = 0;
  std::vector<double> l_;
};

/// Envelope (skyline) Cholesky: row i of L is stored from its first nonzero
/// column first_[i] up to the diagonal. Fill stays inside the envelope, so no
/// symbolic phase is needed. Uses the natural ordering of the input.
class EnvelopeCholesky {
 public:
  EnvelopeCholesky() = default;

  explicit EnvelopeCholesky(const CsrMatrix& a) : n_(a.rows()), first_(n_), start_(n_ + 1, 0) {
    detail::require(a.rows() == a.cols(), "Cholesky needs a square matrix");
    for (std::size_t r = 0; r < n_; ++r) {
      const auto cols = a.row_cols(r);
      first_[r] = (cols.empty() || cols.front() > r) ? r : cols.front();
      start_[r + 1] = start_[r] + (r - first_[r] + 1);
    }
    l_.assign(start_[n_], 0.0);
    for (std::size_t r = 0; r < n_; ++r) {
      const auto cols = a.row_cols(r);
      const auto vals = a.row_values(r);
      for (std::size_t e = 0; e < cols.size() && cols[e] <= r; ++e) entry(r, cols[e]) = vals[e];
    }
    factor();
  }

  std::size_t size() const { return n_; }
  std::size_t profile() const { return l_.size(); }

  void solve(std::span<const double> b, std::span<double> x) const {
    detail::require(b.size() == n_ && x.size() == n_, "Cholesky solve: dimension mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
      const double* row = l_.data() + start_[i];
      const std::size_t f = first_[i];
      double s = b[i];
      for (std::size_t k = f; k < i; ++k) s -= row[k - f] * x[k];
      x[i] = s / row[i - f];
    }
    for (std::size_t i = n_; i-- > 0;) {
      const double* row = l_.data() + start_[i];
      const std::size_t f = first_[i];
      x[i] /= row[i - f];
      const double xi = x[i];
      for (std::size_t k = f; k < i; ++k) x[k] -= row[k - f] * xi;
    }
  }

  /// Number of stored entries of the lower envelope of `a`.
  static std::size_t envelope_size(const CsrMatrix& a) {
    std::size_t total = 0;
    for (std::size_t r = 0; r < a.rows(); ++r) {
      const auto cols = a.row_cols(r);
      const std::size_t f = (cols.empty() || cols.front() > r) ? r : cols.front();
      total += r - f + 1;
    }
    return total;
  }

 private:
  double& entry(std::size_t i, std::size_t j) { return l_[start_[i] + (j - first_[i])]; }

  void factor() {
    for (std::size_t i = 0; i < n_; ++i) {
      double* ri = l_.data() + start_[i];
      const std::size_t fi = first_[i];
      for (std::size_t j = fi; j <= i; ++j) {
        const double* rj = l_.data() + start_[j];
        const std::size_t fj = first_[j];
        const std::size_t k0 = std::max(fi, fj);
        const double s = ri[j - fi] - dot(std::span<const double>(ri + (k0 - fi), j - k0),
                                          std::span<const double>(rj + (k0 - fj), j - k0));
        if (j < i) {
          ri[j - fi] = s / rj[j - fj];
        } else {
          if (!(s > 0.0)) throw FactorizationError("Cholesky: nonpositive pivot at row " + std::to_string(i));
          ri[i - fi] = std::sqrt(s);
        }
      }
    }
  }

  std::size_t n_ = 0;
  std::vector<std::size_t> first_;
  std::vector<std::size_t> start_;
  std::vector<double> l_;
};

/// Factors of an SPD matrix. Immutable; `solve` may be called concurrently.
class Factorization {
 public:
  Factorization() = default;
  explicit Factorization(DenseCholesky f) : impl_(std::move(f)) {}
  explicit Factorization(EnvelopeCholesky f) : impl_(std::move(f)) {}

  std::size_t size() const {
    return std::visit([](const auto& f) { return f.size(); }, impl_);
  }

  bool is_dense() const { return std::holds_alternative<DenseCholesky>(impl_); }

  void solve(std::span<const double> b, std::span<double> x) const {
    std::visit([&](const auto& f) { f.solve(b, x); }, impl_);
  }

  Vector solve(std::span<const double> b) const {
    Vector x(b.size());
    solve(b, x);
    return x;
  }

 private:
  std::variant<DenseCholesky, EnvelopeCholesky> impl_;
};

/// Chooses dense storage unless the envelope holds at most half of the
/// lower triangle, in which case envelope storage is both smaller and faster.
inline Factorization factorize(const CsrMatrix& a) {
  detail::require(a.rows() == a.cols(), "factorize: matrix must be square");
  const std::size_t n = a.rows();
  const std::size_t triangle = n * (n + 1) / 2;
  if (2 * EnvelopeCholesky::envelope_size(a) <= triangle || n > 4096) return Factorization(EnvelopeCholesky(a));
  return Factorization(DenseCholesky(a));
}

inline Vector solve(const Factorization& f, std::span<const double> b) { return f.solve(b); }

}  // namespace sfcdd
