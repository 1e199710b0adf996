#pragma once

#include "hughop/chain.hpp"
#include "hughop/metric.hpp"

namespace hughop {

/// Proposal-variance multiplier: 1/‖g‖² (Raw) or 1/(1 + ‖g‖²) (Plus1).
enum class HopGuard { Raw, Plus1 };

/// Hop proposal scales. μ is stored directly; with_kappa() sets μ² = κλ.
struct HopParams {
  double lambda = 1.0;  ///< along-gradient scale
  double mu = 1.0;      ///< perpendicular scale
  bool use_hessian = false;
  double eps = kDefaultMetricFloor;
  HopGuard guard = HopGuard::Plus1;
  FactorKind factor_kind = FactorKind::Triangular;

  double kappa() const { return mu * mu / lambda; }
  void validate() const;

  static HopParams with_kappa(double lambda, double kappa, HopGuard guard = HopGuard::Plus1);
  static HopParams with_mu(double lambda, double mu, HopGuard guard = HopGuard::Plus1);
  /// λ = 2.5√d / 10, κ = 0.5.
  static HopParams defaults(int dim);
};

/// The Gaussian log density of y under the Hop proposal from x, with the
/// terms that went into it.
struct HopProposalDensity {
  double log_density = 0.0;
  double grad_norm_sq = 0.0;    ///< ‖g‖² (or gᵀΣg with the Hessian metric)
  double scale_sq = 0.0;        ///< guard multiplier s²
  double along_gradient = 0.0;  ///< (y - x)ᵀg
  double quadratic = 0.0;       ///< (y - x)ᵀ C⁻¹ (y - x)
  double log_det = 0.0;         ///< log det C
};

/// Proposal y = x + s Aᵀ[μz + (λ-μ) ĝ(ĝᵀz)], z ~ N(0, I); A = I unless a
/// metric is given, in which case ĝ is the unit vector along A g.
Vector hop_propose(const Vector& x, const Vector& g, const HopParams& params, Rng& rng,
                   const LocalMetric* metric = nullptr);

/// Exact log density of y under hop_propose(x, ·) with gradient g at x.
HopProposalDensity hop_log_density(const Vector& x, const Vector& y, const Vector& g,
                                   const HopParams& params, const LocalMetric* metric = nullptr);

/// Dense proposal covariance C(x); used for diagnostics and tests.
Matrix hop_covariance(const Vector& g, const HopParams& params, const LocalMetric* metric = nullptr);

struct HopOutcome : StepOutcome {
  Vector proposal;
};

/// log r(x, y) = ℓ(y) - ℓ(x) + log q(x | y) - log q(y | x), evaluating the
/// target at y (and the local metric at both ends with use_hessian).
double hop_log_ratio(const Target& target, const ChainState& from, const Vector& y,
                     const HopParams& params, double* log_density_y = nullptr,
                     Vector* gradient_y = nullptr);

/// One Hop Metropolis-Hastings step. Updates `state` in place on acceptance.
HopOutcome hop_step(const Target& target, ChainState& state, const HopParams& params, Rng& rng);

}  // namespace hughop
