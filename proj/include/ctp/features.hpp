#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "ctp/contention.hpp"

namespace ctp {

using Vec3 = std::array<double, 3>;

inline constexpr std::size_t kPolyFeatures = 10;  // including the constant

/// Degree-2 monomials of (a, b, c) in the fixed order
/// [1, a, b, c, a^2, ab, ac, b^2, bc, c^2].
constexpr std::array<double, kPolyFeatures> poly2_expand(const Vec3& x) noexcept {
  const double a = x[0], b = x[1], c = x[2];
  return {1.0, a, b, c, a * a, a * b, a * c, b * b, b * c, c * c};
}

/// Gaussian kernel exp(-gamma * ||x - l||^2).
inline double rbf_kernel(const Vec3& x, const Vec3& l, double gamma) noexcept {
  const double d0 = x[0] - l[0], d1 = x[1] - l[1], d2 = x[2] - l[2];
  return std::exp(-gamma * (d0 * d0 + d1 * d1 + d2 * d2));
}

/// Per-dimension centering and scaling of the three counters. A dimension
/// with zero variance keeps std = 1 and is flagged as degenerate.
struct Standardizer {
  Vec3 means{0.0, 0.0, 0.0};
  Vec3 stds{1.0, 1.0, 1.0};
  std::array<bool, 3> degenerate{false, false, false};

  /// Population statistics. Throws EmptyInput.
  static Standardizer fit(std::span<const Vec3> inputs);

  Vec3 apply(const Vec3& x) const noexcept {
    return {(x[0] - means[0]) / stds[0], (x[1] - means[1]) / stds[1], (x[2] - means[2]) / stds[2]};
  }
  Vec3 invert(const Vec3& z) const noexcept {
    return {z[0] * stds[0] + means[0], z[1] * stds[1] + means[1], z[2] * stds[2] + means[2]};
  }
  bool any_degenerate() const noexcept { return degenerate[0] || degenerate[1] || degenerate[2]; }

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

inline Vec3 counters_of(const ContentionVector& v) noexcept { return v.counters(); }

}  // namespace ctp
