#pragma once

// Balanced disjoint partition of the curve-ordered unknowns, cyclic overlap
// enlargement by gamma, and the partition-of-unity weights.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sfcdd/error.hpp"
#include "sfcdd/sparse.hpp"

namespace sfcdd {

/// Cyclic index interval {start, start+1, ..., start+length-1} mod n.
struct IndexRange {
  std::size_t start = 0;
  std::size_t length = 0;

  /// Global index of local position `local`.
  std::size_t global(std::size_t local, std::size_t n) const {
    const std::size_t g = start + local;
    return g >= n ? g - n : g;
  }

  /// Local position of global index g, or npos.
  std::size_t local(std::size_t g, std::size_t n) const {
    const std::size_t offset = g >= start ? g - start : g + n - start;
    return offset < length ? offset : npos;
  }

  bool contains(std::size_t g, std::size_t n) const { return local(g, n) != npos; }

  std::vector<std::size_t> indices(std::size_t n) const {
    std::vector<std::size_t> out(length);
    for (std::size_t i = 0; i < length; ++i) out[i] = global(i, n);
    return out;
  }

  friend bool operator==(const IndexRange&, const IndexRange&) = default;

  static constexpr std::size_t npos = ~std::size_t{0};
};

/// Disjoint sizes: the first N mod P ranges get floor(N/P)+1 entries.
inline std::vector<IndexRange> disjoint_partition(std::size_t n, std::size_t parts) {
  detail::require(parts >= 1, "partition: need at least one subdomain");
  detail::require(parts <= n, "partition: more subdomains (" + std::to_string(parts) + ") than unknowns (" +
                                  std::to_string(n) + ")");
  const std::size_t base = n / parts;
  const std::size_t remainder = n - parts * base;
  std::vector<IndexRange> ranges(parts);
  std::size_t start = 0;
  for (std::size_t i = 0; i < parts; ++i) {
    ranges[i] = {start, base + (i < remainder ? 1 : 0)};
    start += ranges[i].length;
  }
  return ranges;
}

namespace detail {

// eta * size, snapped to an integer when within rounding distance so that
// e.g. 0.2 * 5 is treated as exactly 1.
inline double fractional_share(double eta, std::size_t size) {
  const double x = eta * static_cast<double>(size);
  const double nearest = std::round(x);
  return std::abs(x - nearest) <= 1e-9 * std::max(1.0, x) ? nearest : x;
}

}  // namespace detail

/// Enlarges each disjoint range by floor(gamma) whole neighbours on both
/// sides plus the last ceil(eta*Ñ) indices of the next range to the left and
/// the first floor(eta*Ñ) of the next range to the right (eta = frac(gamma)),
/// closing the enumeration cyclically.
inline std::vector<IndexRange> enlarge(std::span<const IndexRange> disjoint, std::size_t n, double gamma) {
  const std::size_t parts = disjoint.size();
  detail::require(parts >= 1, "enlarge: empty partition");
  detail::require(gamma >= 0.0 && std::isfinite(gamma), "enlarge: gamma must be a nonnegative number");
  detail::require(2.0 * gamma + 1.0 <= static_cast<double>(parts) + 1e-12,
                  "enlarge: 2*gamma+1 exceeds the number of subdomains");
  const auto whole = static_cast<std::size_t>(std::floor(gamma));
  const double eta = gamma - std::floor(gamma);
  std::vector<IndexRange> out(parts);
  for (std::size_t i = 0; i < parts; ++i) {
    std::size_t left = 0;
    std::size_t right = 0;
    for (std::size_t k = 1; k <= whole; ++k) {
      left += disjoint[(i + parts - k % parts) % parts].length;
      right += disjoint[(i + k) % parts].length;
    }
    if (eta > 0.0) {
      const auto& lpart = disjoint[(i + parts - (whole + 1) % parts) % parts];
      const auto& rpart = disjoint[(i + whole + 1) % parts];
      left += static_cast<std::size_t>(std::ceil(detail::fractional_share(eta, lpart.length)));
      right += static_cast<std::size_t>(std::floor(detail::fractional_share(eta, rpart.length)));
    }
    const std::size_t length = left + disjoint[i].length + right;
    detail::require(length <= n, "enlarge: overlapped range longer than the index set");
    out[i] = {(disjoint[i].start + n - left % n) % n, length};
  }
  return out;
}

/// Disjoint and overlapped ranges over [0, n).
struct Partition {
  std::size_t n = 0;
  double gamma = 0.0;
  std::vector<IndexRange> disjoint;
  std::vector<IndexRange> overlapped;

  std::size_t parts() const { return disjoint.size(); }

  static Partition build(std::size_t n, std::size_t parts, double gamma) {
    Partition p;
    p.n = n;
    p.gamma = gamma;
    p.disjoint = disjoint_partition(n, parts);
    p.overlapped = enlarge(p.disjoint, n, gamma);
    return p;
  }
};

/// D_i entries 1/c(j), where c(j) counts overlapped ranges covering j, and
/// omega_i = max_j (D_i)_jj.
struct OverlapWeights {
  std::vector<std::uint32_t> coverage;  // per global index
  std::vector<Vector> d;                // per subdomain, length N_i
  std::vector<double> omega;            // per subdomain

  bool uniform() const {
    return std::all_of(coverage.begin(), coverage.end(), [&](std::uint32_t c) { return c == coverage.front(); });
  }
};

inline std::vector<std::uint32_t> coverage_counts(const Partition& partition) {
  const std::size_t n = partition.n;
  std::vector<std::int64_t> diff(n + 1, 0);
  for (const auto& r : partition.overlapped) {
    if (r.length == 0) continue;
    const std::size_t end = r.start + r.length;
    if (end <= n) {
      ++diff[r.start];
      --diff[end];
    } else {
      ++diff[r.start];
      --diff[n];
      ++diff[0];
      --diff[end - n];
    }
  }
  std::vector<std::uint32_t> counts(n);
  std::int64_t running = 0;
  for (std::size_t j = 0; j < n; ++j) {
    running += diff[j];
    counts[j] = static_cast<std::uint32_t>(running);
  }
  return counts;
}

inline OverlapWeights compute_weights(const Partition& partition) {
  OverlapWeights w;
  w.coverage = coverage_counts(partition);
  w.d.resize(partition.parts());
  w.omega.resize(partition.parts());
  for (std::size_t i = 0; i < partition.parts(); ++i) {
    const auto& r = partition.overlapped[i];
    w.d[i].resize(r.length);
    double best = 0.0;
    for (std::size_t loc = 0; loc < r.length; ++loc) {
      w.d[i][loc] = 1.0 / static_cast<double>(w.coverage[r.global(loc, partition.n)]);
      best = std::max(best, w.d[i][loc]);
    }
    w.omega[i] = best;
  }
  return w;
}

/// R_i x
inline void restrict_to(const IndexRange& range, std::span<const double> global, std::span<double> local) {
  detail::require(local.size() == range.length && range.length <= global.size(), "restrict: dimension mismatch");
  const std::size_t n = global.size();
  const std::size_t first = std::min(range.length, n - range.start);
  std::copy_n(global.begin() + static_cast<std::ptrdiff_t>(range.start), first, local.begin());
  std::copy_n(global.begin(), range.length - first, local.begin() + static_cast<std::ptrdiff_t>(first));
}

inline Vector restrict_to(const IndexRange& range, std::span<const double> global) {
  Vector local(range.length);
  restrict_to(range, global, local);
  return local;
}

/// global += R_i^T local
inline void add_extended(const IndexRange& range, std::span<const double> local, std::span<double> global) {
  detail::require(local.size() == range.length && range.length <= global.size(), "extend: dimension mismatch");
  const std::size_t n = global.size();
  for (std::size_t i = 0; i < range.length; ++i) global[range.global(i, n)] += local[i];
}

/// R_i^T local, zero outside the range.
inline Vector extend(const IndexRange& range, std::span<const double> local, std::size_t n) {
  Vector global(n, 0.0);
  add_extended(range, local, global);
  return global;
}

}  // namespace sfcdd
