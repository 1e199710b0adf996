#include "hughop/hug.hpp"

#include <cmath>
#include <numbers>

namespace hughop {

void HugParams::validate() const {
  if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigError("hug: T must be finite and >= 0");
  if (B < 1) throw ConfigError("hug: B must be a positive integer");
  if (mode == HugMode::FixedPrecond && !fixed_metric) {
    throw ConfigError("hug: fixed preconditioning needs a covariance matrix");
  }
  if (!(eps > 0.0)) throw ConfigError("hug: eps must be positive");
}

HugParams HugParams::plain(double T, int B) {
  HugParams p;
  p.T = T;
  p.B = B;
  return p;
}

HugParams HugParams::with_fixed_covariance(double T, int B, const Matrix& covariance) {
  HugParams p = plain(T, B);
  p.mode = HugMode::FixedPrecond;
  p.fixed_metric = LocalMetric::from_covariance(covariance);
  return p;
}

HugParams HugParams::hessian(double T, int B, double eps) {
  HugParams p = plain(T, B);
  p.mode = HugMode::Hessian;
  p.eps = eps;
  return p;
}

Vector reflect(const Vector& v, const Vector& g, double zero_grad_tol) {
  if (v.size() != g.size()) throw DimensionError("reflect: velocity and gradient lengths differ");
  if (!v.allFinite() || !g.allFinite()) throw NonFiniteError("reflect: non-finite input");
  const double norm = g.norm();
  if (norm <= zero_grad_tol) return v;
  const Vector unit = g / norm;
  return v - 2.0 * v.dot(unit) * unit;
}

Vector reflect_in_metric(const Vector& v, const Vector& g, const Matrix& covariance, double tol,
                         bool* skipped) {
  if (v.size() != g.size() || covariance.rows() != v.size() || covariance.cols() != v.size()) {
    throw DimensionError("reflect_in_metric: dimension mismatch");
  }
  if (!v.allFinite() || !g.allFinite()) throw NonFiniteError("reflect_in_metric: non-finite input");
  const Vector sg = covariance * g;
  const double denom = g.dot(sg);
  if (!(denom > tol)) {
    if (skipped) *skipped = true;
    return v;
  }
  if (skipped) *skipped = false;
  return v - (2.0 * v.dot(g) / denom) * sg;
}

HugTrajectory hug_trajectory(const Target& target, const Vector& x0, const Vector& v0,
                             const HugParams& params) {
  if (x0.size() != target.dim() || v0.size() != target.dim()) {
    throw DimensionError("hug_trajectory: x0/v0 length does not match the target");
  }
  const double half = 0.5 * params.step();
  HugTrajectory out{x0, v0, {}, 0};
  if (params.step() == 0.0) return out;
  if (params.record_bounces) out.bounce_points.reserve(params.B);

  for (int b = 0; b < params.B; ++b) {
    out.x += half * out.v;
    if (!out.x.allFinite()) throw TrajectoryError("hug: non-finite position", b);
    if (params.record_bounces) out.bounce_points.push_back(out.x);

    const Vector g = target.gradient(out.x);
    if (!g.allFinite()) throw TrajectoryError("hug: non-finite gradient", b);
    switch (params.mode) {
      case HugMode::Plain:
        out.v = reflect(out.v, g, params.zero_grad_tol);
        break;
      case HugMode::FixedPrecond: {
        bool skipped = false;
        out.v = reflect_in_metric(out.v, g, params.fixed_metric->covariance, 1e-300, &skipped);
        out.skipped_reflections += skipped;
        break;
      }
      case HugMode::Hessian: {
        LocalMetric m;
        try {
          m = local_covariance(target.hessian(out.x), params.eps, params.factor_kind);
        } catch (const FactorizationError& e) {
          throw TrajectoryError(std::string("hug: ") + e.what(), b);
        }
        bool skipped = false;
        out.v = reflect_in_metric(out.v, g, m.covariance, 1e-300, &skipped);
        out.skipped_reflections += skipped;
        break;
      }
    }
    out.x += half * out.v;
    if (!out.x.allFinite() || !out.v.allFinite()) throw TrajectoryError("hug: non-finite state", b);
  }
  return out;
}

namespace {

// Metric defining q(· | x); identity for Plain.
LocalMetric velocity_metric(const Target& target, const Vector& x, const HugParams& params) {
  switch (params.mode) {
    case HugMode::Plain:
      return LocalMetric::identity(target.dim());
    case HugMode::FixedPrecond:
      return *params.fixed_metric;
    case HugMode::Hessian:
      if (!params.local_velocity) return LocalMetric::identity(target.dim());
      return local_covariance(target.hessian(x), params.eps, params.factor_kind);
  }
  return LocalMetric::identity(target.dim());
}

}  // namespace

double hug_velocity_log_density(const Target& target, const Vector& x, const Vector& v,
                                const HugParams& params) {
  return velocity_metric(target, x, params).log_normal_density(v);
}

HugOutcome hug_step(const Target& target, ChainState& state, const HugParams& params, Rng& rng) {
  params.validate();
  HugOutcome out;
  try {
    const LocalMetric start_metric = velocity_metric(target, state.x, params);
    const Vector z = standard_normal(rng, target.dim());
    // AᵀA = Σ, so Aᵀz ~ N(0, Σ).
    out.initial_velocity = start_metric.factor.transpose() * z;

    HugTrajectory traj = hug_trajectory(target, state.x, out.initial_velocity, params);
    const double end_log_density = target.log_density(traj.x);
    const double end_log_q = velocity_metric(target, traj.x, params).log_normal_density(traj.v);
    const double start_log_q = start_metric.log_normal_density(out.initial_velocity);

    out.log_alpha = (end_log_density + end_log_q) - (state.log_density + start_log_q);
    if (!std::isfinite(out.log_alpha) && !(out.log_alpha == -std::numeric_limits<double>::infinity())) {
      throw NonFiniteError("hug: non-finite log acceptance ratio");
    }
    out.proposal = std::move(traj.x);
    out.proposed_velocity = std::move(traj.v);
    out.bounce_points = std::move(traj.bounce_points);
    out.accepted = accept_log_ratio(out.log_alpha, rng);
    if (out.accepted) {
      state.x = out.proposal;
      state.log_density = end_log_density;
      state.gradient = target.gradient(state.x);
    }
  } catch (const Error& e) {
    out.failed = true;
    out.failure = e.what();
    out.log_alpha = -std::numeric_limits<double>::infinity();
    out.accepted = false;
  }
  return out;
}

}  // namespace hughop
