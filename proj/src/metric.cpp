#include "hughop/metric.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace hughop {
namespace {

void check_symmetric(const Matrix& m, double tol, const char* what) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(what) + ": matrix is not square");
  if (!m.allFinite()) throw NonFiniteError(std::string(what) + ": non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) {
    throw Error(std::string(what) + ": matrix is not symmetric");
  }
}

Matrix cholesky_upper(const Matrix& s) {
  const Eigen::Index n = s.rows();
  Matrix lower = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = s(j, j) - lower.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0)) {
      throw FactorizationError("factor: covariance is not positive definite (pivot " +
                                   std::to_string(j) + " = " + std::to_string(pivot) + ")",
                               static_cast<int>(j), pivot);
    }
    const double root = std::sqrt(pivot);
    lower(j, j) = root;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      lower(i, j) = (s(i, j) - lower.row(i).head(j).dot(lower.row(j).head(j))) / root;
    }
  }
  return lower.transpose();
}

}  // namespace

double LocalMetric::log_normal_density(const Vector& v) const {
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  return -0.5 * (dim() * log_2pi + log_det + inverse_quadratic(v));
}

LocalMetric LocalMetric::identity(int dim) {
  LocalMetric m;
  m.covariance = Matrix::Identity(dim, dim);
  m.factor = Matrix::Identity(dim, dim);
  m.precision = Matrix::Identity(dim, dim);
  m.log_det = 0.0;
  return m;
}

LocalMetric LocalMetric::from_covariance(const Matrix& covariance, FactorKind kind) {
  check_symmetric(covariance, 1e-8, "from_covariance");
  LocalMetric m;
  m.covariance = 0.5 * (covariance + covariance.transpose());
  m.factor = hughop::factor(m.covariance, kind);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m.covariance);
  m.precision = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                eig.eigenvectors().transpose();
  m.log_det = eig.eigenvalues().array().log().sum();
  return m;
}

Matrix factor(const Matrix& covariance, FactorKind kind) {
  if (covariance.rows() != covariance.cols()) throw DimensionError("factor: matrix is not square");
  if (!covariance.allFinite()) throw NonFiniteError("factor: non-finite entries");
  if (kind == FactorKind::Triangular) return cholesky_upper(covariance);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance);
  const double smallest = eig.eigenvalues().minCoeff();
  if (!(smallest > 0.0)) {
    Eigen::Index where = 0;
    eig.eigenvalues().minCoeff(&where);
    throw FactorizationError("factor: covariance has non-positive eigenvalue " +
                                 std::to_string(smallest),
                             static_cast<int>(where), smallest);
  }
  return eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

LocalMetric local_covariance(const Matrix& hessian, double eps, FactorKind kind) {
  if (!(eps > 0.0)) throw ConfigError("local_covariance: eps must be positive");
  check_symmetric(hessian, 1e-8, "local_covariance");

  const Matrix sym = 0.5 * (hessian + hessian.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector& lambda = eig.eigenvalues();
  const Matrix& vecs = eig.eigenvectors();

  LocalMetric m;
  Vector cov_eigen(lambda.size());
  // All eigenvalues of −H above ε: Σ = (−H)⁻¹.
  if ((-lambda.array() > eps).all()) {
    cov_eigen = (-lambda).cwiseInverse();
  } else {
    m.regularised = true;
    cov_eigen = lambda.cwiseAbs().cwiseMax(kEigenFloor).cwiseInverse().array() + eps;
  }
  m.covariance = vecs * cov_eigen.asDiagonal() * vecs.transpose();
  m.covariance = 0.5 * (m.covariance + m.covariance.transpose());
  m.precision = vecs * cov_eigen.cwiseInverse().asDiagonal() * vecs.transpose();
  m.log_det = cov_eigen.array().log().sum();
  if (kind == FactorKind::Spectral) {
    m.factor = vecs * cov_eigen.cwiseSqrt().asDiagonal() * vecs.transpose();
  } else {
    m.factor = cholesky_upper(m.covariance);
  }
  return m;
}

}  // namespace hughop
