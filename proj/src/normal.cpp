#include "hughop/normal.hpp"

#include <cmath>
#include <numbers>

namespace hughop {
namespace {

constexpr double kLeftTail = -8.0;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// Mills ratio R(x) = Φ(-x)/φ(x) for x > 0 by Lentz's continued fraction
// R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))).
double mills_ratio(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    d = x + k * d;
    if (std::abs(d) < tiny) d = tiny;
    c = x + k / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / f;
}

}  // namespace

double normal_pdf(double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double log_normal_cdf(double z) {
  if (z < kLeftTail) return -0.5 * z * z - kLogSqrt2Pi + std::log(mills_ratio(-z));
  if (z > 5.0) return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
  return std::log(normal_cdf(z));
}

double inverse_mills(double z) {
  if (z < kLeftTail) return 1.0 / mills_ratio(-z);
  return normal_pdf(z) / normal_cdf(z);
}

double inverse_mills_derivative(double z) {
  const double m = inverse_mills(z);
  return -m * (z + m);
}

}  // namespace hughop
