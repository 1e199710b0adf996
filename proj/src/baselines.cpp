#include "hughop/baselines.hpp"

#include <cmath>

namespace hughop {

// ------------------------------------------------------------------------ HMC

void HmcParams::validate() const {
  if (L < 0) throw ConfigError("hmc: L must be >= 0");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("hmc: delta must be positive");
}

HmcParams& HmcParams::with_mass(const Matrix& m) {
  mass = LocalMetric::from_covariance(m);
  return *this;
}

namespace {

Vector inverse_mass_times(const HmcParams& params, const Vector& p) {
  return params.mass ? Vector(params.mass->precision * p) : p;
}

double kinetic(const HmcParams& params, const Vector& p) {
  return 0.5 * (params.mass ? params.mass->inverse_quadratic(p) : p.squaredNorm());
}

}  // namespace

PhasePoint leapfrog(const Target& target, const Vector& x, const Vector& p, const HmcParams& params) {
  if (x.size() != target.dim() || p.size() != target.dim()) {
    throw DimensionError("leapfrog: x/p length does not match the target");
  }
  PhasePoint out{x, p};
  if (params.L == 0) return out;
  Vector g = target.gradient(out.x);
  for (int l = 0; l < params.L; ++l) {
    out.p += 0.5 * params.delta * g;
    out.x += params.delta * inverse_mass_times(params, out.p);
    if (!out.x.allFinite()) throw TrajectoryError("leapfrog: non-finite position", l);
    g = target.gradient(out.x);
    out.p += 0.5 * params.delta * g;
    if (!out.p.allFinite()) throw TrajectoryError("leapfrog: non-finite momentum", l);
  }
  return out;
}

double hamiltonian(const Target& target, const Vector& x, const Vector& p, const HmcParams& params) {
  return -target.log_density(x) + kinetic(params, p);
}

HmcOutcome hmc_step(const Target& target, ChainState& state, const HmcParams& params, Rng& rng) {
  params.validate();
  HmcOutcome out;
  try {
    const Vector z = standard_normal(rng, target.dim());
    // M = AᵀA, so Aᵀz ~ N(0, M).
    const Vector p0 = params.mass ? Vector(params.mass->factor.transpose() * z) : z;
    const PhasePoint end = leapfrog(target, state.x, p0, params);
    double end_log_density = 0.0;
    Vector end_gradient;
    target.value_and_gradient(end.x, end_log_density, end_gradient);
    out.log_alpha = (end_log_density - kinetic(params, end.p)) - (state.log_density - kinetic(params, p0));
    if (std::isnan(out.log_alpha)) throw NonFiniteError("hmc: NaN log acceptance ratio");
    out.proposal = end.x;
    out.accepted = accept_log_ratio(out.log_alpha, rng);
    if (out.accepted) {
      state.x = end.x;
      state.log_density = end_log_density;
      state.gradient = std::move(end_gradient);
    }
  } catch (const Error& e) {
    out.failed = true;
    out.failure = e.what();
    out.log_alpha = -std::numeric_limits<double>::infinity();
  }
  return out;
}

// ------------------------------------------------------------------------ RWM

void RwmParams::validate() const {
  if (!(step_scale >= 0.0) || !std::isfinite(step_scale)) throw ConfigError("rwm: step scale must be >= 0");
  if (local == LocalCovariance::Fixed && !fixed) throw ConfigError("rwm: fixed covariance missing");
  if (!(eps > 0.0)) throw ConfigError("rwm: eps must be positive");
}

RwmParams RwmParams::isotropic(double step_scale) {
  RwmParams p;
  p.step_scale = step_scale;
  return p;
}

RwmParams RwmParams::with_fixed(double step_scale, const Matrix& covariance) {
  RwmParams p = isotropic(step_scale);
  p.local = LocalCovariance::Fixed;
  p.fixed = LocalMetric::from_covariance(covariance);
  return p;
}

RwmParams RwmParams::with_hessian(double step_scale, double eps) {
  RwmParams p = isotropic(step_scale);
  p.local = LocalCovariance::Hessian;
  p.eps = eps;
  return p;
}

RwmOutcome rwm_step(const Target& target, ChainState& state, const RwmParams& params, Rng& rng) {
  params.validate();
  RwmOutcome out;
  try {
    const Vector z = standard_normal(rng, target.dim());
    const double h = params.step_scale;
    double log_q_ratio = 0.0;
    switch (params.local) {
      case LocalCovariance::None:
        out.proposal = state.x + h * z;
        break;
      case LocalCovariance::Fixed:
        out.proposal = state.x + h * (params.fixed->factor.transpose() * z);
        break;
      case LocalCovariance::Hessian: {
        const LocalMetric mx = local_covariance(target.hessian(state.x), params.eps);
        out.proposal = state.x + h * (mx.factor.transpose() * z);
        const LocalMetric my = local_covariance(target.hessian(out.proposal), params.eps);
        // N(·; ·, h²Σ): the h² factors cancel between the two directions.
        const Vector delta = out.proposal - state.x;
        const double h2 = h * h;
        const double forward = -0.5 * (mx.log_det + mx.inverse_quadratic(delta) / h2);
        const double backward = -0.5 * (my.log_det + my.inverse_quadratic(delta) / h2);
        log_q_ratio = backward - forward;
        break;
      }
    }
    double ly = 0.0;
    Vector gy;
    target.value_and_gradient(out.proposal, ly, gy);
    out.log_alpha = ly - state.log_density + log_q_ratio;
    if (std::isnan(out.log_alpha)) throw NonFiniteError("rwm: NaN log acceptance ratio");
    out.accepted = accept_log_ratio(out.log_alpha, rng);
    if (out.accepted) {
      state.x = out.proposal;
      state.log_density = ly;
      state.gradient = std::move(gy);
    }
  } catch (const Error& e) {
    out.failed = true;
    out.failure = e.what();
    out.log_alpha = -std::numeric_limits<double>::infinity();
  }
  return out;
}

// ----------------------------------------------------------------------- MALA

void MalaParams::validate() const {
  if (!(step_scale > 0.0) || !std::isfinite(step_scale)) throw ConfigError("mala: step scale must be positive");
}

double mala_log_ratio(const ChainState& from, const ChainState& to, const MalaParams& params) {
  const double h2 = params.step_scale * params.step_scale;
  const Vector fwd = to.x - from.x - 0.5 * h2 * from.gradient;
  const Vector bwd = from.x - to.x - 0.5 * h2 * to.gradient;
  return to.log_density - from.log_density - 0.5 * (bwd.squaredNorm() - fwd.squaredNorm()) / h2;
}

MalaOutcome mala_step(const Target& target, ChainState& state, const MalaParams& params, Rng& rng) {
  params.validate();
  MalaOutcome out;
  try {
    const double h = params.step_scale;
    const Vector drift = state.x + 0.5 * h * h * state.gradient;
    if (!drift.allFinite()) throw NonFiniteError("mala: non-finite drift");
    out.proposal = drift + h * standard_normal(rng, target.dim());
    ChainState next = ChainState::at(target, out.proposal);
    out.log_alpha = mala_log_ratio(state, next, params);
    if (std::isnan(out.log_alpha)) throw NonFiniteError("mala: NaN log acceptance ratio");
    out.accepted = accept_log_ratio(out.log_alpha, rng);
    if (out.accepted) state = std::move(next);
  } catch (const Error& e) {
    out.failed = true;
    out.failure = e.what();
    out.log_alpha = -std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace hughop
