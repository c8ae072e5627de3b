// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <string>
#include <string_view>

namespace rr {

enum class SemiringKind { kReal, kMaxPlus };

/// Value-level semiring descriptor: <R, +, *, 0, 1> or
/// <R u {-inf}, max, +, -inf, 0>. Selected at runtime so configs can swap it.
class Semiring {
 public:
  constexpr explicit Semiring(SemiringKind kind = SemiringKind::kReal) : kind_(kind) {}

  static constexpr Semiring real() { return Semiring(SemiringKind::kReal); }
  static constexpr Semiring max_plus() { return Semiring(SemiringKind::kMaxPlus); }

  /// Accepts "real" or "maxplus"; anything else is a ConfigError.
  static Semiring parse(std::string_view name);

  constexpr SemiringKind kind() const { return kind_; }
  std::string_view name() const;

  constexpr double zero() const {
    return kind_ == SemiringKind::kReal ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  constexpr double one() const { return kind_ == SemiringKind::kReal ? 1.0 : 0.0; }

  bool is_member(double a) const;

  // Checked operations: reject values outside the carrier.
  double plus(double a, double b) const;
  double times(double a, double b) const;

  // Unchecked forms for inner loops over already-validated weights.
  double add(double a, double b) const {
    if (kind_ == SemiringKind::kReal) return a + b;
    return a >= b ? a : b;
  }
  double mul(double a, double b) const {
    if (kind_ == SemiringKind::kReal) return a * b;
    // -inf absorbs; guard against -inf + +inf which cannot arise in the carrier
    if (a == zero() || b == zero()) return zero();
    return a + b;
  }

  friend constexpr bool operator==(Semiring a, Semiring b) { return a.kind_ == b.kind_; }

 private:
  SemiringKind kind_;
};

}  // namespace rr
