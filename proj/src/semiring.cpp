// SPDX-License-Identifier: Apache-2.0
#include "rr/semiring.hpp"

#include <cmath>

#include "rr/error.hpp"

namespace rr {

Semiring Semiring::parse(std::string_view name) {
  if (name == "real") return real();
  if (name == "maxplus" || name == "max-plus") return max_plus();
  throw Error(ErrorCode::kConfigError, "unknown semiring '" + std::string(name) + "'");
}

std::string_view Semiring::name() const {
  return kind_ == SemiringKind::kReal ? "real" : "maxplus";
}

bool Semiring::is_member(double a) const {
  if (kind_ == SemiringKind::kReal) return std::isfinite(a);
  return !std::isnan(a) && a != std::numeric_limits<double>::infinity();
}

static void require_member(const Semiring& s, double a) {
  if (!s.is_member(a)) {
    throw Error(ErrorCode::kNonMemberElement,
                std::to_string(a) + " is not in the " + std::string(s.name()) + " carrier");
  }
}

double Semiring::plus(double a, double b) const {
  require_member(*this, a);
  require_member(*this, b);
  return add(a, b);
}

double Semiring::times(double a, double b) const {
  require_member(*this, a);
  require_member(*this, b);
  return mul(a, b);
}

}  // namespace rr
