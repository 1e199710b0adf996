#pragma once

#include "hughop/common.hpp"

#include <memory>
#include <string>

namespace hughop {

/// A differentiable log-density. ℓ is unnormalised: each concrete target
/// documents which x-independent constant it drops.
///
/// The public entry points validate their input (length and finiteness) and
/// forward to the protected virtuals, so implementations can assume a well
/// formed x. Targets are immutable once built and may be shared between
/// concurrently running chains.
class Target {
 public:
  virtual ~Target() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;

  virtual bool has_hessian() const { return false; }
  virtual bool has_exact_sampler() const { return false; }

  double log_density(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;

  /// ℓ(x) and ∇ℓ(x) together; models share work between the two.
  void value_and_gradient(const Vector& x, double& value, Vector& grad) const;

  /// n i.i.d. draws as rows of an n × dim matrix.
  Matrix sample_exact(Rng& rng, int n) const;
  Vector sample_one(Rng& rng) const;

 protected:
  virtual double log_density_impl(const Vector& x) const = 0;
  virtual Vector gradient_impl(const Vector& x) const = 0;
  virtual Matrix hessian_impl(const Vector& x) const;
  virtual void value_and_gradient_impl(const Vector& x, double& value, Vector& grad) const;
  virtual Vector sample_impl(Rng& rng) const;

 private:
  void check_input(const Vector& x) const;
};

using TargetPtr = std::shared_ptr<const Target>;

}  // namespace hughop
