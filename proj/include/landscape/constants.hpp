#pragma once

#include <cmath>
#include <numbers>

namespace landscape {

/// Model constants that depend only on the interaction order p.
///   hessian_scale  = 1/sqrt(p(p-1))
///   gradient_scale = (p-1)/sqrt(p(p-1))
///   exponent_scale = 1/(2p^2)
struct ModelConstants {
  double hessian_scale;
  double gradient_scale;
  double exponent_scale;
};

inline ModelConstants model_constants(int p) {
  const double pp = static_cast<double>(p);
  const double root = std::sqrt(pp * (pp - 1.0));
  return {1.0 / root, (pp - 1.0) / root, 1.0 / (2.0 * pp * pp)};
}

inline constexpr double kLogSqrtTwoPi = 0.91893853320467274178;  // log(sqrt(2 pi))

}  // namespace landscape
