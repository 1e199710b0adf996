#pragma once

namespace hughop {

/// Standard normal density.
double normal_pdf(double z);

/// log Φ(z), accurate in both tails (continued fraction below z = -8).
double log_normal_cdf(double z);

/// Inverse Mills ratio φ(z)/Φ(z); finite for all finite z.
double inverse_mills(double z);

/// d/dz [φ(z)/Φ(z)] = -m(z)(z + m(z)).
double inverse_mills_derivative(double z);

double normal_cdf(double z);

}  // namespace hughop
