#include "hughop/hop.hpp"

#include <cmath>
#include <numbers>
#include <optional>

namespace hughop {
namespace {

constexpr double kRawGuardFloor = 1e-12;

// ‖g‖² in the proposal metric and the guard multiplier s².
struct Scaling {
  double grad_norm_sq;
  double scale_sq;
  bool isotropic;  // g == 0 under Plus1: the gradient direction is undefined
};

Scaling scaling(const Vector& g, const HopParams& p, const LocalMetric* metric) {
  const double gn2 = metric ? g.dot(metric->covariance * g) : g.squaredNorm();
  if (!std::isfinite(gn2)) throw NonFiniteError("hop: non-finite gradient norm");
  if (p.guard == HopGuard::Raw) {
    if (!(std::sqrt(gn2) > kRawGuardFloor)) {
      throw Error("hop: gradient norm is ~0 under the raw 1/|g|^2 guard; use the plus1 guard");
    }
    return {gn2, 1.0 / gn2, false};
  }
  return {gn2, 1.0 / (1.0 + gn2), gn2 == 0.0};
}

}  // namespace

void HopParams::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("hop: lambda must be positive");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("hop: mu must be strictly positive");
  if (!(eps > 0.0)) throw ConfigError("hop: eps must be positive");
}

HopParams HopParams::with_kappa(double lambda, double kappa, HopGuard guard) {
  if (!(kappa > 0.0)) throw ConfigError("hop: kappa must be strictly positive");
  HopParams p;
  p.lambda = lambda;
  p.mu = std::sqrt(kappa * lambda);
  p.guard = guard;
  p.validate();
  return p;
}

HopParams HopParams::with_mu(double lambda, double mu, HopGuard guard) {
  HopParams p;
  p.lambda = lambda;
  p.mu = mu;
  p.guard = guard;
  p.validate();
  return p;
}

HopParams HopParams::defaults(int dim) { return with_kappa(2.5 * std::sqrt(double(dim)) / 10.0, 0.5); }

Vector hop_propose(const Vector& x, const Vector& g, const HopParams& params, Rng& rng,
                   const LocalMetric* metric) {
  if (x.size() != g.size()) throw DimensionError("hop_propose: x and g lengths differ");
  const Scaling sc = scaling(g, params, metric);
  const Vector z = standard_normal(rng, x.size());
  Vector step = params.mu * z;
  if (!sc.isotropic) {
    const Vector tg = metric ? Vector(metric->factor * g) : g;
    const Vector unit = tg / std::sqrt(sc.grad_norm_sq);
    step += (params.lambda - params.mu) * unit.dot(z) * unit;
  }
  if (metric) step = metric->factor.transpose() * step;
  return x + std::sqrt(sc.scale_sq) * step;
}

HopProposalDensity hop_log_density(const Vector& x, const Vector& y, const Vector& g,
                                   const HopParams& params, const LocalMetric* metric) {
  if (x.size() != y.size() || x.size() != g.size()) throw DimensionError("hop_log_density: length mismatch");
  const Scaling sc = scaling(g, params, metric);
  const double d = static_cast<double>(x.size());
  const Vector delta = y - x;
  const double lam2 = params.lambda * params.lambda;
  const double mu2 = params.mu * params.mu;

  HopProposalDensity out;
  out.grad_norm_sq = sc.grad_norm_sq;
  out.scale_sq = sc.scale_sq;
  out.along_gradient = delta.dot(g);

  // B⁻¹ = I/μ² + (1/λ² - 1/μ²) ĝĝᵀ, in the metric's whitened coordinates.
  const double perp = metric ? metric->inverse_quadratic(delta) : delta.squaredNorm();
  double q = perp / mu2;
  double log_det_b = 2.0 * d * std::log(params.mu);
  if (!sc.isotropic) {
    q += (1.0 / lam2 - 1.0 / mu2) * out.along_gradient * out.along_gradient / sc.grad_norm_sq;
    log_det_b = 2.0 * std::log(params.lambda) + 2.0 * (d - 1.0) * std::log(params.mu);
  }
  out.quadratic = q / sc.scale_sq;
  out.log_det = d * std::log(sc.scale_sq) + log_det_b + (metric ? metric->log_det : 0.0);
  out.log_density = -0.5 * (d * std::log(2.0 * std::numbers::pi) + out.log_det + out.quadratic);
  return out;
}

Matrix hop_covariance(const Vector& g, const HopParams& params, const LocalMetric* metric) {
  const Scaling sc = scaling(g, params, metric);
  const Eigen::Index d = g.size();
  Matrix b = params.mu * params.mu * Matrix::Identity(d, d);
  if (!sc.isotropic) {
    const Vector tg = metric ? Vector(metric->factor * g) : g;
    const Vector unit = tg / std::sqrt(sc.grad_norm_sq);
    b += (params.lambda * params.lambda - params.mu * params.mu) * unit * unit.transpose();
  }
  if (metric) b = metric->factor.transpose() * b * metric->factor;
  return sc.scale_sq * b;
}

namespace {

double log_ratio_impl(const Target& target, const ChainState& from, const Vector& y,
                      const HopParams& params, const LocalMetric* metric_x, double* log_density_y,
                      Vector* gradient_y) {
  double ly = 0.0;
  Vector gy;
  target.value_and_gradient(y, ly, gy);
  if (!std::isfinite(ly) || !gy.allFinite()) throw NonFiniteError("hop: non-finite target at proposal");

  double forward = 0.0;
  double backward = 0.0;
  if (params.use_hessian) {
    const LocalMetric my = local_covariance(target.hessian(y), params.eps, params.factor_kind);
    forward = hop_log_density(from.x, y, from.gradient, params, metric_x).log_density;
    backward = hop_log_density(y, from.x, gy, params, &my).log_density;
  } else {
    forward = hop_log_density(from.x, y, from.gradient, params).log_density;
    backward = hop_log_density(y, from.x, gy, params).log_density;
  }
  if (log_density_y) *log_density_y = ly;
  if (gradient_y) *gradient_y = std::move(gy);
  return ly - from.log_density + backward - forward;
}

}  // namespace

double hop_log_ratio(const Target& target, const ChainState& from, const Vector& y,
                     const HopParams& params, double* log_density_y, Vector* gradient_y) {
  if (!params.use_hessian) return log_ratio_impl(target, from, y, params, nullptr, log_density_y, gradient_y);
  const LocalMetric mx = local_covariance(target.hessian(from.x), params.eps, params.factor_kind);
  return log_ratio_impl(target, from, y, params, &mx, log_density_y, gradient_y);
}

HopOutcome hop_step(const Target& target, ChainState& state, const HopParams& params, Rng& rng) {
  params.validate();
  HopOutcome out;
  try {
    std::optional<LocalMetric> mx;
    if (params.use_hessian) mx = local_covariance(target.hessian(state.x), params.eps, params.factor_kind);
    const LocalMetric* metric = mx ? &*mx : nullptr;
    out.proposal = hop_propose(state.x, state.gradient, params, rng, metric);
    if (!out.proposal.allFinite()) throw NonFiniteError("hop: non-finite proposal");
    double ly = 0.0;
    Vector gy;
    out.log_alpha = log_ratio_impl(target, state, out.proposal, params, metric, &ly, &gy);
    if (std::isnan(out.log_alpha)) throw NonFiniteError("hop: NaN log acceptance ratio");
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
    out.accepted = false;
  }
  return out;
}

}  // namespace hughop
