#pragma once

#include "hughop/chain.hpp"
#include "hughop/metric.hpp"

#include <optional>
#include <vector>

namespace hughop {

enum class HugMode {
  Plain,         ///< v ~ N(0, I), plain reflections
  FixedPrecond,  ///< v ~ N(0, Σ₀), reflections in the Σ₀ metric
  Hessian,       ///< reflections in the local metric Σ(x') at every bounce
};

struct HugParams {
  double T = 1.0;  ///< integration time
  int B = 10;      ///< bounces; the step is δ = T / B
  HugMode mode = HugMode::Plain;
  /// Required in FixedPrecond mode; see with_fixed_covariance().
  std::optional<LocalMetric> fixed_metric;
  double eps = kDefaultMetricFloor;
  double zero_grad_tol = 1e-12;
  FactorKind factor_kind = FactorKind::Triangular;
  /// Hessian mode only: draw v from N(0, Σ(x₀)) (true) or N(0, I) (false).
  bool local_velocity = true;
  bool record_bounces = false;

  double step() const { return B > 0 ? T / B : 0.0; }
  void validate() const;

  static HugParams plain(double T, int B);
  static HugParams with_fixed_covariance(double T, int B, const Matrix& covariance);
  static HugParams hessian(double T, int B, double eps = kDefaultMetricFloor);
};

/// v - 2(vᵀĝ)ĝ. Returns v unchanged when ‖g‖ <= zero_grad_tol.
Vector reflect(const Vector& v, const Vector& g, double zero_grad_tol = 1e-12);

/// v - 2 (vᵀg)/(gᵀΣg) Σg. When gᵀΣg <= tol the reflection is skipped and
/// `skipped` (if given) is set.
Vector reflect_in_metric(const Vector& v, const Vector& g, const Matrix& covariance,
                         double tol = 1e-300, bool* skipped = nullptr);

struct HugTrajectory {
  Vector x;
  Vector v;
  std::vector<Vector> bounce_points;  ///< x'_b, filled when record_bounces is set
  int skipped_reflections = 0;
};

/// B repetitions of: x' = x + δv/2; reflect v at g(x'); x = x' + δv/2.
/// Throws TrajectoryError (with the bounce index) on a non-finite state.
HugTrajectory hug_trajectory(const Target& target, const Vector& x0, const Vector& v0,
                             const HugParams& params);

struct HugOutcome : StepOutcome {
  Vector proposal;
  Vector proposed_velocity;
  Vector initial_velocity;
  std::vector<Vector> bounce_points;
};

/// log q(v | x) for the velocity law of `params` at x (needs Hessian at x in
/// Hessian mode).
double hug_velocity_log_density(const Target& target, const Vector& x, const Vector& v,
                                const HugParams& params);

/// One Hug Metropolis-Hastings step. Updates `state` in place on acceptance.
HugOutcome hug_step(const Target& target, ChainState& state, const HugParams& params, Rng& rng);

}  // namespace hughop
