#include "hughop/target.hpp"

namespace hughop {

void Target::check_input(const Vector& x) const {
  if (x.size() != dim()) {
    throw DimensionError(name() + ": expected input of length " + std::to_string(dim()) +
                         ", got " + std::to_string(x.size()));
  }
  if (!x.allFinite()) throw NonFiniteError(name() + ": non-finite input");
}

double Target::log_density(const Vector& x) const {
  check_input(x);
  return log_density_impl(x);
}

Vector Target::gradient(const Vector& x) const {
  check_input(x);
  return gradient_impl(x);
}

Matrix Target::hessian(const Vector& x) const {
  check_input(x);
  if (!has_hessian()) throw NoHessianError(name() + ": no Hessian available");
  return hessian_impl(x);
}

void Target::value_and_gradient(const Vector& x, double& value, Vector& grad) const {
  check_input(x);
  value_and_gradient_impl(x, value, grad);
}

Matrix Target::sample_exact(Rng& rng, int n) const {
  if (!has_exact_sampler()) throw NoExactSamplerError(name() + ": no exact sampler");
  if (n < 0) throw Error("sample_exact: negative sample count");
  Matrix out(n, dim());
  for (int i = 0; i < n; ++i) out.row(i) = sample_impl(rng).transpose();
  return out;
}

Vector Target::sample_one(Rng& rng) const {
  if (!has_exact_sampler()) throw NoExactSamplerError(name() + ": no exact sampler");
  return sample_impl(rng);
}

Matrix Target::hessian_impl(const Vector&) const {
  throw NoHessianError(name() + ": no Hessian available");
}

void Target::value_and_gradient_impl(const Vector& x, double& value, Vector& grad) const {
  value = log_density_impl(x);
  grad = gradient_impl(x);
}

Vector Target::sample_impl(Rng&) const {
  throw NoExactSamplerError(name() + ": no exact sampler");
}

}  // namespace hughop
