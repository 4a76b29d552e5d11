#pragma once

// Piecewise-constant algebraic coarse space over the disjoint partition:
// R0 (0/1 aggregation), Galerkin A0 = R0 A R0^T, and the deflation
// operators F = R0^T A0^-1 R0, G = I - A F.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sfcdd/error.hpp"
#include "sfcdd/partition.hpp"
#include "sfcdd/sparse.hpp"

namespace sfcdd {

/// Sizes of the q sub-blocks of a block of `size` entries: the first
/// size mod q get floor(size/q)+1.
inline std::vector<std::size_t> split_sizes(std::size_t size, std::size_t q) {
  std::vector<std::size_t> out(q, size / q);
  for (std::size_t m = 0; m < size % q; ++m) ++out[m];
  return out;
}

class CoarseSpace {
 public:
  CoarseSpace() = default;

  /// q coarse unknowns per disjoint range; 1 <= q <= floor(N/P).
  static CoarseSpace build(const Partition& partition, const CsrMatrix& a, std::size_t q) {
    const std::size_t n = partition.n;
    const std::size_t parts = partition.parts();
    detail::require(a.rows() == n && a.cols() == n, "coarse space: matrix does not match the partition");
    detail::require(q >= 1 && q <= n / parts, "coarse space: q=" + std::to_string(q) + " outside [1, floor(N/P)=" +
                                                  std::to_string(n / parts) + "]");
    CoarseSpace cs;
    cs.q_ = q;
    cs.n_ = n;
    const std::size_t n0 = q * parts;
    cs.aggregate_of_.resize(n);
    cs.aggregates_.reserve(n0);
    std::vector<std::size_t> offsets(n0 + 1, 0);
    std::vector<std::size_t> cols(n);
    std::size_t row = 0;
    for (const auto& range : partition.disjoint) {
      std::size_t start = range.start;
      for (std::size_t size : split_sizes(range.length, q)) {
        cs.aggregates_.push_back({start, size});
        for (std::size_t j = start; j < start + size; ++j) {
          cols[j] = j;
          cs.aggregate_of_[j] = row;
        }
        offsets[row + 1] = start + size;
        start += size;
        ++row;
      }
    }
    cs.r0_ = CsrMatrix(n0, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
    cs.a0_ = triple_product(cs.r0_, a);
    cs.a0_factor_ = std::make_shared<Factorization>(factorize(cs.a0_));
    return cs;
  }

  std::size_t q() const { return q_; }
  std::size_t size() const { return aggregates_.size(); }
  std::size_t fine_size() const { return n_; }
  const CsrMatrix& restriction() const { return r0_; }
  const CsrMatrix& matrix() const { return a0_; }
  const Factorization& factorization() const { return *a0_factor_; }
  std::span<const IndexRange> aggregates() const { return aggregates_; }

  /// R0 v: sums over each aggregate.
  void restrict_to(std::span<const double> v, std::span<double> coarse) const {
    detail::require(v.size() == n_ && coarse.size() == size(), "R0: dimension mismatch");
    for (std::size_t m = 0; m < aggregates_.size(); ++m) {
      double s = 0.0;
      for (std::size_t j = aggregates_[m].start; j < aggregates_[m].start + aggregates_[m].length; ++j) s += v[j];
      coarse[m] = s;
    }
  }

  /// out = R0^T w (piecewise constant).
  void prolongate(std::span<const double> w, std::span<double> out) const {
    detail::require(w.size() == size() && out.size() == n_, "R0^T: dimension mismatch");
    for (std::size_t j = 0; j < n_; ++j) out[j] = w[aggregate_of_[j]];
  }

  /// out = F v = R0^T A0^-1 R0 v
  void apply_f(std::span<const double> v, std::span<double> out) const {
    Vector coarse(size());
    Vector solved(size());
    restrict_to(v, coarse);
    a0_factor_->solve(coarse, solved);
    prolongate(solved, out);
  }

  Vector apply_f(std::span<const double> v) const {
    Vector out(n_);
    apply_f(v, out);
    return out;
  }

  /// out = G v = v - A F v
  void apply_g(const CsrMatrix& a, std::span<const double> v, std::span<double> out) const {
    Vector fv = apply_f(v);
    a.multiply(fv, out);
    for (std::size_t j = 0; j < n_; ++j) out[j] = v[j] - out[j];
  }

  Vector apply_g(const CsrMatrix& a, std::span<const double> v) const {
    Vector out(n_);
    apply_g(a, v, out);
    return out;
  }

  /// out = G^T v = v - F A v
  void apply_gt(const CsrMatrix& a, std::span<const double> v, std::span<double> out) const {
    Vector av(n_);
    a.multiply(v, av);
    apply_f(av, out);
    for (std::size_t j = 0; j < n_; ++j) out[j] = v[j] - out[j];
  }

  Vector apply_gt(const CsrMatrix& a, std::span<const double> v) const {
    Vector out(n_);
    apply_gt(a, v, out);
    return out;
  }

 private:
  std::size_t q_ = 0;
  std::size_t n_ = 0;
  std::vector<IndexRange> aggregates_;
  std::vector<std::size_t> aggregate_of_;
  CsrMatrix r0_;
  CsrMatrix a0_;
  std::shared_ptr<const Factorization> a0_factor_;
};

inline CoarseSpace build_coarse(const Partition& partition, const CsrMatrix& a, std::size_t q) {
  return CoarseSpace::build(partition, a, q);
}

}  // namespace sfcdd
