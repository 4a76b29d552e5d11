#pragma once

// d-dimensional Hilbert curve (Skilling's transpose algorithm) with 128-bit
// keys, and the embedding of anisotropic grid points into the isotropic curve.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sfcdd/error.hpp"
#include "sfcdd/random.hpp"

namespace sfcdd {

using uint128 = unsigned __int128;

/// Position of a cell along the curve; `value < 2^(n*d)`.
struct SfcKey {
  uint128 value = 0;

  friend constexpr auto operator<=>(const SfcKey&, const SfcKey&) = default;
};

inline std::string to_string(uint128 v) {
  if (v == 0) return "0";
  std::string digits;
  while (v != 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return {digits.rbegin(), digits.rend()};
}

inline std::string to_string(SfcKey key) { return to_string(key.value); }

/// Curve resolution: `dimension` axes with `refinement` bits each.
struct CurveConfig {
  int dimension = 1;
  int refinement = 1;

  void validate() const {
    detail::require(dimension >= 1, "curve dimension must be positive");
    detail::require(refinement >= 1, "curve refinement must be positive");
    detail::require(refinement <= 64, "curve refinement is limited to 64 bits per axis");
    detail::require(dimension * refinement <= 128, "curve needs more than 128 key bits");
  }

  int key_bits() const { return dimension * refinement; }

  uint128 key_count() const {
    return key_bits() == 128 ? ~uint128{0} : (uint128{1} << key_bits());
  }
};

namespace detail {

inline bool axis_in_range(std::uint64_t c, int bits) {
  return bits >= 64 || c < (std::uint64_t{1} << bits);
}

}  // namespace detail

/// Hilbert curve. Stateless; every member is a pure function.
struct HilbertCurve {
  static SfcKey encode(std::span<const std::uint64_t> coords, const CurveConfig& cfg) {
    cfg.validate();
    const int d = cfg.dimension;
    const int bits = cfg.refinement;
    detail::require(static_cast<int>(coords.size()) == d, "coordinate tuple has wrong dimension");
    std::vector<std::uint64_t> x(coords.begin(), coords.end());
    for (auto c : x) detail::require(detail::axis_in_range(c, bits), "coordinate outside [0, 2^n)");

    const std::uint64_t top = std::uint64_t{1} << (bits - 1);
    // Inverse undo.
    for (std::uint64_t q = top; q > 1; q >>= 1) {
      const std::uint64_t p = q - 1;
      for (int i = 0; i < d; ++i) {
        if (x[i] & q) {
          x[0] ^= p;
        } else {
          const std::uint64_t t = (x[0] ^ x[i]) & p;
          x[0] ^= t;
          x[i] ^= t;
        }
      }
    }
    // Gray encode.
    for (int i = 1; i < d; ++i) x[i] ^= x[i - 1];
    std::uint64_t t = 0;
    for (std::uint64_t q = top; q > 1; q >>= 1)
      if (x[d - 1] & q) t ^= q - 1;
    for (int i = 0; i < d; ++i) x[i] ^= t;

    // Interleave the transposed form, axis 0 carrying the leading bit.
    uint128 key = 0;
    for (int b = bits - 1; b >= 0; --b)
      for (int i = 0; i < d; ++i) key = (key << 1) | ((x[i] >> b) & 1U);
    return SfcKey{key};
  }

  static std::vector<std::uint64_t> decode(SfcKey key, const CurveConfig& cfg) {
    cfg.validate();
    const int d = cfg.dimension;
    const int bits = cfg.refinement;
    detail::require(cfg.key_bits() == 128 || key.value < cfg.key_count(), "key outside [0, 2^(n*d))");

    std::vector<std::uint64_t> x(static_cast<std::size_t>(d), 0);
    int shift = cfg.key_bits();
    for (int b = bits - 1; b >= 0; --b)
      for (int i = 0; i < d; ++i) {
        --shift;
        x[i] |= static_cast<std::uint64_t>((key.value >> shift) & 1U) << b;
      }

    // Gray decode.
    const std::uint64_t t0 = x[d - 1] >> 1;
    for (int i = d - 1; i > 0; --i) x[i] ^= x[i - 1];
    x[0] ^= t0;
    // Undo excess work.
    for (int b = 1; b < bits; ++b) {
      const std::uint64_t q = std::uint64_t{1} << b;
      const std::uint64_t p = q - 1;
      for (int i = d - 1; i >= 0; --i) {
        if (x[i] & q) {
          x[0] ^= p;
        } else {
          const std::uint64_t t = (x[0] ^ x[i]) & p;
          x[0] ^= t;
          x[i] ^= t;
        }
      }
    }
    return x;
  }
};

inline SfcKey encode(std::span<const std::uint64_t> coords, const CurveConfig& cfg) {
  return HilbertCurve::encode(coords, cfg);
}

inline std::vector<std::uint64_t> decode(SfcKey key, const CurveConfig& cfg) {
  return HilbertCurve::decode(key, cfg);
}

/// Key of interior grid point `k` (1 <= k_j <= 2^l_j - 1) of an anisotropic
/// grid. Axis j is embedded into the finest axis by c_j = (k_j - 1) * 2^(lmax - l_j).
template <typename Curve = HilbertCurve>
SfcKey grid_point_key(std::span<const std::uint32_t> k, std::span<const int> levels) {
  detail::require(k.size() == levels.size() && !k.empty(), "grid index and level vector differ in dimension");
  const int lmax = *std::max_element(levels.begin(), levels.end());
  std::vector<std::uint64_t> coords(k.size());
  for (std::size_t j = 0; j < k.size(); ++j) {
    detail::require(levels[j] >= 1 && levels[j] < 63, "level outside supported range");
    const std::uint64_t upper = (std::uint64_t{1} << levels[j]) - 1;
    detail::require(k[j] >= 1 && k[j] <= upper, "grid index outside the interior");
    coords[j] = (std::uint64_t{k[j]} - 1) << (lmax - levels[j]);
  }
  return Curve::encode(coords, CurveConfig{static_cast<int>(k.size()), lmax});
}

namespace detail {

inline double holder_ratio(SfcKey a, SfcKey b, const CurveConfig& cfg) {
  const auto pa = HilbertCurve::decode(a, cfg);
  const auto pb = HilbertCurve::decode(b, cfg);
  const double side = std::ldexp(1.0, cfg.refinement);
  double dist2 = 0.0;
  for (std::size_t j = 0; j < pa.size(); ++j) {
    const double diff = (static_cast<double>(pa[j]) - static_cast<double>(pb[j])) / side;
    dist2 += diff * diff;
  }
  const uint128 gap = a.value > b.value ? a.value - b.value : b.value - a.value;
  const double param = std::ldexp(static_cast<double>(gap), -cfg.key_bits());
  return std::sqrt(dist2) / std::pow(param, 1.0 / cfg.dimension);
}

inline uint128 random_key(Rng& rng, const CurveConfig& cfg) {
  uint128 v = (uint128{rng()} << 64) | rng();
  if (cfg.key_bits() < 128) v &= cfg.key_count() - 1;
  return v;
}

}  // namespace detail

/// Hölder bound 2*sqrt(d+3) of the continuous curve.
inline double holder_bound(int dimension) { return 2.0 * std::sqrt(dimension + 3.0); }

/// Empirical Hölder constant max |s(x)-s(y)|_2 / |x-y|^(1/d) of the discrete
/// curve over `samples` random key pairs. Half the pairs are uniform, half have
/// a log-uniformly distributed key gap so that short separations are probed.
inline double holder_estimate(const CurveConfig& cfg, std::size_t samples, std::uint64_t seed = 42) {
  cfg.validate();
  detail::require(samples >= 2, "holder_estimate needs at least two samples");
  Rng rng(seed);
  double best = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const SfcKey a{detail::random_key(rng, cfg)};
    SfcKey b;
    if (s % 2 == 0) {
      b = SfcKey{detail::random_key(rng, cfg)};
    } else {
      const int scale = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(cfg.key_bits())));
      const uint128 span = uint128{1} << scale;
      uint128 gap = ((uint128{rng()} << 64) | rng()) % span + 1;
      const uint128 room = cfg.key_count() - 1 - a.value;
      b = SfcKey{gap <= room ? a.value + gap : a.value - std::min(gap, a.value)};
    }
    if (a == b) continue;
    best = std::max(best, detail::holder_ratio(a, b, cfg));
  }
  return best;
}

/// Exhaustive Hölder constant over all pairs drawn from `keys`.
inline double holder_estimate_exhaustive(const CurveConfig& cfg, std::span<const SfcKey> keys) {
  cfg.validate();
  double best = 0.0;
  for (std::size_t i = 0; i < keys.size(); ++i)
    for (std::size_t j = i + 1; j < keys.size(); ++j)
      if (keys[i] != keys[j]) best = std::max(best, detail::holder_ratio(keys[i], keys[j], cfg));
  return best;
}

/// Bijectivity and unit-step adjacency of the whole curve at a given
/// resolution, checked exhaustively. Only sensible for key_bits() <= ~24.
struct CurveCheck {
  bool bijective = true;
  bool adjacent = true;
};

inline CurveCheck check_curve_exhaustive(const CurveConfig& cfg) {
  cfg.validate();
  detail::require(cfg.key_bits() <= 30, "exhaustive curve check limited to 2^30 cells");
  const auto total = static_cast<std::uint64_t>(cfg.key_count());
  const int d = cfg.dimension;
  CurveCheck result;
  std::vector<bool> seen(total, false);
  std::vector<std::uint64_t> prev;
  for (std::uint64_t key = 0; key < total; ++key) {
    auto x = HilbertCurve::decode(SfcKey{key}, cfg);
    // Linear cell address.
    std::uint64_t cell = 0;
    for (int j = 0; j < d; ++j) cell = (cell << cfg.refinement) | x[j];
    if (seen[cell] || HilbertCurve::encode(x, cfg).value != key) result.bijective = false;
    seen[cell] = true;
    if (key > 0) {
      std::uint64_t l1 = 0;
      for (int j = 0; j < d; ++j) l1 += x[j] > prev[j] ? x[j] - prev[j] : prev[j] - x[j];
      if (l1 != 1) result.adjacent = false;
    }
    prev = std::move(x);
  }
  return result;
}

}  // namespace sfcdd
