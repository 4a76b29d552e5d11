#pragma once

// Overlapping Schwarz preconditioners on curve-ordered index ranges:
// one-level, additive two-level, deflated and balanced, each unweighted,
// omega-weighted or D-weighted.

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sfcdd/coarse.hpp"
#include "sfcdd/error.hpp"
#include "sfcdd/parallel.hpp"
#include "sfcdd/partition.hpp"
#include "sfcdd/sparse.hpp"

namespace sfcdd {

enum class Variant { one_level, additive_two_level, deflated, balanced };
enum class Weighting { none, omega, d_matrix };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::one_level: return "one_level";
    case Variant::additive_two_level: return "additive";
    case Variant::deflated: return "deflated";
    case Variant::balanced: return "balanced";
  }
  return "?";
}

inline std::string_view to_string(Weighting w) {
  switch (w) {
    case Weighting::none: return "none";
    case Weighting::omega: return "omega";
    case Weighting::d_matrix: return "d_matrix";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "one_level" || s == "one-level") return Variant::one_level;
  if (s == "additive" || s == "additive_two_level") return Variant::additive_two_level;
  if (s == "deflated") return Variant::deflated;
  if (s == "balanced") return Variant::balanced;
  throw PreconditionError("unknown variant '" + std::string(s) + "'");
}

inline Weighting parse_weighting(std::string_view s) {
  if (s == "none" || s == "unweighted") return Weighting::none;
  if (s == "omega") return Weighting::omega;
  if (s == "d_matrix" || s == "d" || s == "D") return Weighting::d_matrix;
  throw PreconditionError("unknown weighting '" + std::string(s) + "'");
}

struct SchwarzConfig {
  Variant variant = Variant::balanced;
  Weighting weighting = Weighting::omega;
  std::size_t workers = 0;  // 0: hardware concurrency
};

/// C^-1 for one of the configured variants. Immutable after construction;
/// `apply` may be called concurrently.
class SchwarzOperator {
 public:
  /// `coarse` may be empty only for Variant::one_level.
  SchwarzOperator(std::shared_ptr<const CsrMatrix> a, Partition partition, std::shared_ptr<const CoarseSpace> coarse,
                  SchwarzConfig cfg)
      : a_(std::move(a)), partition_(std::move(partition)), coarse_(std::move(coarse)), cfg_(cfg) {
    detail::require(a_ && a_->rows() == partition_.n && a_->cols() == partition_.n,
                    "schwarz: matrix does not match the partition");
    detail::require(cfg_.variant == Variant::one_level || coarse_, "schwarz: two-level variants need a coarse space");
    detail::require(!coarse_ || coarse_->fine_size() == partition_.n, "schwarz: coarse space does not match");
    weights_ = compute_weights(partition_);
    const std::size_t parts = partition_.parts();
    local_.resize(parts);
    parallel_for(
        parts,
        [&](std::size_t i) {
          const auto& range = partition_.overlapped[i];
          const auto globals = range.indices(partition_.n);
          const auto sub = principal_submatrix(*a_, globals, [&](std::size_t g) { return range.local(g, partition_.n); });
          local_[i] = factorize(sub);
        },
        cfg_.workers);
    symmetric_ = compute_symmetry();
  }

  std::size_t size() const { return partition_.n; }
  const Partition& partition() const { return partition_; }
  const OverlapWeights& weights() const { return weights_; }
  const SchwarzConfig& config() const { return cfg_; }
  const CsrMatrix& matrix() const { return *a_; }
  const CoarseSpace* coarse() const { return coarse_.get(); }
  std::size_t local_size(std::size_t i) const { return local_[i].size(); }
  const Factorization& local_factorization(std::size_t i) const { return local_[i]; }

  /// Whether C^-1 is symmetric as a bilinear form.
  bool symmetric() const { return symmetric_; }

  /// h = C^-1 g
  void apply(std::span<const double> g, std::span<double> h) const {
    const std::size_t n = size();
    detail::require(g.size() == n && h.size() == n, "schwarz apply: dimension mismatch");
    switch (cfg_.variant) {
      case Variant::one_level:
        apply_one_level(g, h);
        return;
      case Variant::additive_two_level: {
        apply_one_level(g, h);
        Vector fg = coarse_->apply_f(g);
        axpy(1.0, fg, h);
        return;
      }
      case Variant::deflated: {
        Vector c(n);
        apply_one_level(g, c);
        coarse_->apply_gt(*a_, c, h);
        Vector fg = coarse_->apply_f(g);
        axpy(1.0, fg, h);
        return;
      }
      case Variant::balanced: {
        Vector fg = coarse_->apply_f(g);
        Vector gg(n);
        a_->multiply(fg, gg);
        for (std::size_t j = 0; j < n; ++j) gg[j] = g[j] - gg[j];
        Vector c(n);
        apply_one_level(gg, c);
        coarse_->apply_gt(*a_, c, h);
        axpy(1.0, fg, h);
        return;
      }
    }
  }

  Vector apply(std::span<const double> g) const {
    Vector h(g.size());
    apply(g, h);
    return h;
  }

  /// h = sum_i R_i^T D_i A_i^-1 R_i g, summed in subdomain order.
  void apply_one_level(std::span<const double> g, std::span<double> h) const {
    const std::size_t parts = partition_.parts();
    std::vector<Vector> corrections(parts);
    parallel_for(
        parts,
        [&](std::size_t i) {
          const auto& range = partition_.overlapped[i];
          Vector gi = restrict_to(range, g);
          Vector di(range.length);
          local_[i].solve(gi, di);
          switch (cfg_.weighting) {
            case Weighting::none: break;
            case Weighting::omega:
              for (auto& v : di) v *= weights_.omega[i];
              break;
            case Weighting::d_matrix:
              for (std::size_t j = 0; j < di.size(); ++j) di[j] *= weights_.d[i][j];
              break;
          }
          corrections[i] = std::move(di);
        },
        cfg_.workers);
    std::fill(h.begin(), h.end(), 0.0);
    for (std::size_t i = 0; i < parts; ++i) add_extended(partition_.overlapped[i], corrections[i], h);
  }

 private:
  bool compute_symmetry() const {
    if (cfg_.variant == Variant::deflated) return false;
    if (cfg_.weighting != Weighting::d_matrix) return true;
    // D_i must be a multiple of the identity on each subdomain.
    for (const auto& di : weights_.d)
      for (double v : di)
        if (v != di.front()) return false;
    return true;
  }

  std::shared_ptr<const CsrMatrix> a_;
  Partition partition_;
  std::shared_ptr<const CoarseSpace> coarse_;
  SchwarzConfig cfg_;
  OverlapWeights weights_;
  std::vector<Factorization> local_;
  bool symmetric_ = true;
};

/// Convenience setup from a matrix and partition parameters.
inline SchwarzOperator make_schwarz(std::shared_ptr<const CsrMatrix> a, std::size_t parts, double gamma,
                                    std::size_t q, SchwarzConfig cfg) {
  Partition partition = Partition::build(a->rows(), parts, gamma);
  std::shared_ptr<const CoarseSpace> coarse;
  if (cfg.variant != Variant::one_level) coarse = std::make_shared<CoarseSpace>(build_coarse(partition, *a, q));
  return SchwarzOperator(std::move(a), std::move(partition), std::move(coarse), cfg);
}

/// Identity preconditioner (plain CG / unpreconditioned Richardson).
struct IdentityPreconditioner {
  std::size_t n = 0;
  bool symmetric() const { return true; }
  std::size_t size() const { return n; }
  void apply(std::span<const double> g, std::span<double> h) const { std::copy(g.begin(), g.end(), h.begin()); }
};

}  // namespace sfcdd
