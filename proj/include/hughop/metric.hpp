#pragma once

#include "hughop/common.hpp"

namespace hughop {

enum class FactorKind {
  Triangular,  ///< A = Lᵀ from the Cholesky factor Σ = LLᵀ (upper triangular)
  Spectral,    ///< symmetric root A = V diag(√s) Vᵀ
};

/// Position-dependent covariance Σ(x) built from the Hessian, plus a factor A
/// with AᵀA = Σ and the pieces needed to evaluate N(0, Σ) densities.
struct LocalMetric {
  Matrix covariance;
  Matrix factor;
  Matrix precision;
  double log_det = 0.0;
  /// True when −H was not positive definite with margin ε and the
  /// |Λ|⁻¹ + εI branch was used.
  bool regularised = false;

  int dim() const { return static_cast<int>(covariance.rows()); }

  /// vᵀΣ⁻¹v
  double inverse_quadratic(const Vector& v) const { return v.dot(precision * v); }

  /// log N(v; 0, Σ) including the 2π constant.
  double log_normal_density(const Vector& v) const;

  static LocalMetric identity(int dim);
  /// Metric for a fixed covariance matrix; factorises and inverts once.
  static LocalMetric from_covariance(const Matrix& covariance,
                                     FactorKind kind = FactorKind::Triangular);
};

inline constexpr double kDefaultMetricFloor = 1e-6;
/// |λ| below this is clamped before inversion.
inline constexpr double kEigenFloor = 1e-12;

/// Σ = (−H)⁻¹ when every eigenvalue of −H exceeds ε; otherwise, with the
/// spectral decomposition H = V Λ Vᵀ, Σ = V (|Λ|⁻¹ + εI) Vᵀ.
LocalMetric local_covariance(const Matrix& hessian, double eps = kDefaultMetricFloor,
                             FactorKind kind = FactorKind::Triangular);

/// Any A with AᵀA = Σ. Throws FactorizationError carrying the failing pivot
/// (triangular) or the smallest eigenvalue (spectral).
Matrix factor(const Matrix& covariance, FactorKind kind = FactorKind::Triangular);

}  // namespace hughop
