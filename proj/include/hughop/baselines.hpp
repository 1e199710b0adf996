#pragma once

#include "hughop/chain.hpp"
#include "hughop/metric.hpp"

#include <optional>

namespace hughop {

/// Leapfrog HMC in momentum form: p ~ N(0, M), kinetic energy ½pᵀM⁻¹p.
struct HmcParams {
  int L = 10;          ///< leapfrog steps
  double delta = 0.1;  ///< step size
  /// Mass matrix; identity when unset. Set through with_mass().
  std::optional<LocalMetric> mass;

  double integration_time() const { return L * delta; }
  void validate() const;
  HmcParams& with_mass(const Matrix& m);
};

struct PhasePoint {
  Vector x;
  Vector p;
};

/// L iterations of half-kick / drift x += δM⁻¹p / half-kick.
/// Throws TrajectoryError with the step index on a non-finite state.
PhasePoint leapfrog(const Target& target, const Vector& x, const Vector& p, const HmcParams& params);

/// -ℓ(x) + ½pᵀM⁻¹p
double hamiltonian(const Target& target, const Vector& x, const Vector& p, const HmcParams& params);

struct HmcOutcome : StepOutcome {
  Vector proposal;
};

HmcOutcome hmc_step(const Target& target, ChainState& state, const HmcParams& params, Rng& rng);

enum class LocalCovariance { None, Fixed, Hessian };

/// Random walk Metropolis, y ~ N(x, h² C(x)).
struct RwmParams {
  double step_scale = 1.0;
  LocalCovariance local = LocalCovariance::None;
  std::optional<LocalMetric> fixed;  ///< C for LocalCovariance::Fixed
  double eps = kDefaultMetricFloor;  ///< floor for LocalCovariance::Hessian

  void validate() const;
  static RwmParams isotropic(double step_scale);
  static RwmParams with_fixed(double step_scale, const Matrix& covariance);
  static RwmParams with_hessian(double step_scale, double eps = kDefaultMetricFloor);
};

struct RwmOutcome : StepOutcome {
  Vector proposal;
};

RwmOutcome rwm_step(const Target& target, ChainState& state, const RwmParams& params, Rng& rng);

/// MALA: y ~ N(x + (h²/2) g(x), h² I).
struct MalaParams {
  double step_scale = 0.5;
  void validate() const;
};

struct MalaOutcome : StepOutcome {
  Vector proposal;
};

/// ℓ(y) - ℓ(x) + log q(x | y) - log q(y | x) for the MALA proposal.
double mala_log_ratio(const ChainState& from, const ChainState& to, const MalaParams& params);

MalaOutcome mala_step(const Target& target, ChainState& state, const MalaParams& params, Rng& rng);

}  // namespace hughop
