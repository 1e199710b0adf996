#pragma once

#include "hughop/target.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace hughop {

// Scale presets.
/// "U": every scale 1.
Vector unit_scales(int dim);
/// "L": scale of component i (0-based) is dim - i, i.e. dim, dim-1, ..., 1.
Vector linear_scales(int dim);
/// "linear10": scale of component i (1-based) is 10 i / dim.
Vector linear10_scales(int dim);

/// Centred Gaussian with diagonal covariance diag(σ²).
/// ℓ(x) = -½ Σ (xᵢ/σᵢ)²; drops the Gaussian normaliser.
class GaussianDiag final : public Target {
 public:
  explicit GaussianDiag(Vector scales);
  static GaussianDiag from_precisions(const Vector& precisions);

  int dim() const override { return static_cast<int>(scales_.size()); }
  std::string name() const override { return "GaussianDiag"; }
  bool has_hessian() const override { return true; }
  bool has_exact_sampler() const override { return true; }
  const Vector& scales() const { return scales_; }
  const Vector& precisions() const { return precisions_; }

 protected:
  double log_density_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;
  Matrix hessian_impl(const Vector& x) const override;
  Vector sample_impl(Rng& rng) const override;

 private:
  Vector scales_;
  Vector precisions_;
};

/// Product over components of a centred logistic density with scale σᵢ and a
/// N(0, a²σᵢ²) density:
///   ℓ(x) = Σ [ -2 log cosh(xᵢ/(2σᵢ)) - ½ (xᵢ/(aσᵢ))² ],
/// i.e. the constant -2 log 2 per component is dropped so that ℓ(0) = 0.
/// Exact draws use rejection from the logistic with acceptance exp(-½(x/aσ)²).
class LogisticGaussian final : public Target {
 public:
  LogisticGaussian(double a, Vector scales);

  int dim() const override { return static_cast<int>(scales_.size()); }
  std::string name() const override { return "LG"; }
  bool has_hessian() const override { return true; }
  bool has_exact_sampler() const override { return true; }
  double a() const { return a_; }

 protected:
  double log_density_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;
  Matrix hessian_impl(const Vector& x) const override;
  Vector sample_impl(Rng& rng) const override;

 private:
  double a_;
  Vector scales_;
};

/// ℓ(x) = Σ [ -½ (xᵢ/σᵢ)⁴ - ½ (xᵢ/(aσᵢ))² ]  (no constant to drop beyond the
/// normaliser). Exact draws by rejection from N(0, a²σᵢ²).
class QuarticGaussian final : public Target {
 public:
  QuarticGaussian(double a, Vector scales);

  int dim() const override { return static_cast<int>(scales_.size()); }
  std::string name() const override { return "QG"; }
  bool has_hessian() const override { return true; }
  bool has_exact_sampler() const override { return true; }

 protected:
  double log_density_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;
  Matrix hessian_impl(const Vector& x) const override;
  Vector sample_impl(Rng& rng) const override;

 private:
  double a_;
  Vector scales_;
};

/// Banana(a, c, b): X₁ ~ N(0, a²), X₂ | X₁ ~ N(r(X₁² - a²), s²) with
/// s = c√(1-b²), r = bc√2/(2a²).
/// ℓ(x) = -x₁²/(2a²) - (x₂ - r(x₁² - a²))²/(2s²); normaliser dropped.
class Banana2D final : public Target {
 public:
  Banana2D(double a, double c, double b = 0.70710678118654752440);

  int dim() const override { return 2; }
  std::string name() const override { return "Banana"; }
  bool has_hessian() const override { return true; }
  bool has_exact_sampler() const override { return true; }
  double s() const { return s_; }
  double r() const { return r_; }

 protected:
  double log_density_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;
  Matrix hessian_impl(const Vector& x) const override;
  Vector sample_impl(Rng& rng) const override;

 private:
  double a_, c_, b_, s_, r_;
};

/// Equal mixture of N(μ, Σ) and N(-μ, Σ) with
///   μ = (a√(1-1/λ²), b√(1-1/λ²)),  Σ = diag((a/λ)², (b/λ)²).
/// ℓ(x) = log(exp(q₊) + exp(q₋)) with qₖ the Gaussian quadratic forms; the
/// shared constant log(½) - log(2π) - ½ log det Σ is dropped.
class Bimodal2D final : public Target {
 public:
  Bimodal2D(double a, double b, double separation = 3.0);

  int dim() const override { return 2; }
  std::string name() const override { return "Bimodal"; }
  bool has_hessian() const override { return true; }
  bool has_exact_sampler() const override { return true; }
  const Eigen::Vector2d& mean() const { return mean_; }
  const Eigen::Vector2d& variances() const { return variances_; }

 protected:
  double log_density_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;
  Matrix hessian_impl(const Vector& x) const override;
  Vector sample_impl(Rng& rng) const override;

 private:
  Eigen::Vector2d mean_;
  Eigen::Vector2d variances_;
};

/// Equal mixture of N(0, diag(2a²-1, 1)) and N(0, diag(1, b²-1)).
/// ℓ(x) = log Σₖ exp(-½ log det Σₖ - ½ xᵀΣₖ⁻¹x); the constant
/// log(½) - log(2π) is dropped. Requires 2a² > 1 and b² > 1.
class PlusPrism2D final : public Target {
 public:
  PlusPrism2D(double a, double b);

  int dim() const override { return 2; }
  std::string name() const override { return "PlusPrism"; }
  bool has_hessian() const override { return true; }
  bool has_exact_sampler() const override { return true; }
  const Eigen::Vector2d& variances(int component) const { return variances_[component]; }

 protected:
  double log_density_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;
  Matrix hessian_impl(const Vector& x) const override;
  Vector sample_impl(Rng& rng) const override;

 private:
  Eigen::Vector2d variances_[2];
};

/// A 2-D head target in coordinates 1-2 with independent centred Gaussian
/// tail coordinates 3..d; ℓ is the sum of the two parts.
class EmbeddedTarget final : public Target {
 public:
  EmbeddedTarget(TargetPtr head, Vector tail_scales);

  int dim() const override { return 2 + static_cast<int>(tail_.dim()); }
  std::string name() const override { return "Embedded" + head_->name(); }
  bool has_hessian() const override { return head_->has_hessian(); }
  bool has_exact_sampler() const override { return head_->has_exact_sampler(); }
  const Target& head() const { return *head_; }
  const GaussianDiag& tail() const { return tail_; }

 protected:
  double log_density_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;
  Matrix hessian_impl(const Vector& x) const override;
  Vector sample_impl(Rng& rng) const override;

 private:
  TargetPtr head_;
  GaussianDiag tail_;
};

/// Builds a target from a name + parameter map, e.g.
///   {"target": "LG", "a": 5, "scales": "L", "dim": 25}
/// Recognised names (case-insensitive): gaussian, LG, QG, banana, bimodal,
/// plusprism. The 2-D shapes are embedded in `dim` dimensions when dim > 2.
/// "scales" is "U", "L", "linear10" or an explicit array; "name" is accepted
/// as an alias of "target".
TargetPtr make_target(const nlohmann::json& spec);

struct NamedTarget {
  std::string label;
  TargetPtr target;
};

/// The eleven comparison targets in `dim` dimensions: {Gaussian, LG(a=5),
/// QG(a=3), Banana, Bimodal, PlusPrism} x {U, L}, without PlusPrism-U.
std::vector<NamedTarget> comparison_targets(int dim);

}  // namespace hughop
