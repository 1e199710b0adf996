#pragma once

#include "hughop/baselines.hpp"
#include "hughop/hop.hpp"
#include "hughop/hug.hpp"
#include "hughop/target.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <variant>

namespace hughop {

// --------------------------------------------------------------------- cauchit

/// Binary regression with the cauchit link; responses coded ±1.
struct CauchitData {
  Matrix X;  ///< N × M design
  Vector y;  ///< ±1
  Vector true_beta;
  std::uint64_t seed = 0;
};

/// ½ + atan(z)/π, evaluated without cancellation for z ≪ 0.
double cauchit_inverse_link(double z);

/// Covariates N(0, 1), β from N(0, 1/τ) unless `beta` is given, responses
/// +1 with probability ½ + atan(xᵀβ)/π.
CauchitData simulate_cauchit(int N, int M, double tau, std::uint64_t seed,
                             const std::optional<Vector>& beta = std::nullopt);

/// ℓ(β) = -(τ/2)‖β‖² + Σᵢ log(½ + atan(zᵢ)/π), zᵢ = yᵢxᵢᵀβ. No constant dropped.
class CauchitPosterior final : public Target {
 public:
  CauchitPosterior(CauchitData data, double tau);

  int dim() const override { return static_cast<int>(data_.X.cols()); }
  std::string name() const override { return "Cauchit"; }
  bool has_hessian() const override { return true; }
  const CauchitData& data() const { return data_; }

 protected:
  double log_density_impl(const Vector& beta) const override;
  Vector gradient_impl(const Vector& beta) const override;
  Matrix hessian_impl(const Vector& beta) const override;
  void value_and_gradient_impl(const Vector& beta, double& value, Vector& grad) const override;

 private:
  CauchitData data_;
  Matrix signed_X_;  // rows yᵢxᵢᵀ
  double tau_;
};

// ----------------------------------------------------------------------- Rasch

/// M questions × N people, Y(i, j) = ±1.
struct RaschData {
  Matrix Y;
  Vector true_beta;  ///< length M, true_beta[0] = 0
  Vector true_eta;   ///< length N
  std::uint64_t seed = 0;
};

/// β₁ = 0, β₂..β_M and η ~ N(0, 1/τ); Y(i, j) = +1 w.p. Φ(ηⱼ - βᵢ).
RaschData simulate_rasch(int M, int N, double tau, std::uint64_t seed);

/// Free parameters ordered (β₂, …, β_M, η₁, …, η_N); β₁ is pinned.
/// ℓ = Σᵢⱼ log Φ(zᵢⱼ) - (τ/2)(Σβ² + Ση²), zᵢⱼ = yᵢⱼ(ηⱼ - βᵢ).
class RaschPosterior final : public Target {
 public:
  RaschPosterior(RaschData data, double tau, double pinned_beta1 = 0.0);

  int dim() const override { return static_cast<int>(data_.Y.rows() - 1 + data_.Y.cols()); }
  std::string name() const override { return "Rasch"; }
  bool has_hessian() const override { return true; }
  int questions() const { return static_cast<int>(data_.Y.rows()); }
  int people() const { return static_cast<int>(data_.Y.cols()); }

 protected:
  double log_density_impl(const Vector& theta) const override;
  Vector gradient_impl(const Vector& theta) const override;
  Matrix hessian_impl(const Vector& theta) const override;

 private:
  Vector full_beta(const Vector& theta) const;
  RaschData data_;
  double tau_;
  double pinned_;
};

// ------------------------------------------------------------- spatial probit

struct SpatialProbitData {
  int rows = 0;  ///< m
  int cols = 0;  ///< n
  Vector y;      ///< ±1, cell (k, l) at index k * cols + l
  Matrix distance;
  double true_rho = 0.0;
  double true_psi = 0.0;
  Vector true_x;
  std::uint64_t seed = 0;
};

/// Euclidean distances between the cells of an m × n grid.
Matrix grid_distances(int rows, int cols);

struct GpCovariance {
  Matrix covariance;
  Matrix factor;  ///< AᵀA = Σ
  double log_det = 0.0;
};

/// Σ_gg' = exp(ρ - e^{-ψ} D_gg') with optional diagonal jitter, its triangular
/// factor and log det. Throws FactorizationError when Σ is numerically singular.
GpCovariance gp_covariance(double rho, double psi, const Matrix& distance, double jitter = 0.0);

/// Simulates X ~ N(0, Σ(ρ, ψ)) on the grid and Y_g = +1 w.p. Φ(X_g).
SpatialProbitData simulate_spatial(int rows, int cols, double rho, double psi, std::uint64_t seed,
                                   double jitter = 1e-10);

/// Σ_g log Φ(y_g w_g) with w = Aᵀz.
double spatial_log_likelihood(const SpatialProbitData& data, const Matrix& factor, const Vector& z);

/// Target over the whitened field Z given θ:
/// ℓ(z) = Σ_g log Φ(y_g [Aᵀz]_g) - ½zᵀz; θ-only terms dropped.
/// With `use_likelihood` false the target is the N(0, I) prior.
class SpatialConditional final : public Target {
 public:
  SpatialConditional(const SpatialProbitData& data, Matrix factor, bool use_likelihood = true);

  int dim() const override { return static_cast<int>(factor_.rows()); }
  std::string name() const override { return "SpatialConditional"; }
  bool has_hessian() const override { return true; }

 protected:
  double log_density_impl(const Vector& z) const override;
  Vector gradient_impl(const Vector& z) const override;
  Matrix hessian_impl(const Vector& z) const override;

 private:
  Vector y_;
  Matrix factor_;
  bool use_likelihood_;
};

SpatialConditional spatial_conditional_target(double rho, double psi, const SpatialProbitData& data,
                                              bool use_likelihood = true, double jitter = 1e-10);

/// Inner kernel for the Z-block.
struct HugHopInner {
  HugParams hug;
  HopParams hop;
};
using SpatialInnerKernel = std::variant<HugHopInner, HmcParams>;

struct SpatialState {
  Vector z;
  double rho = 0.0;
  double psi = 0.0;
  /// A(θ) for the current θ; recomputed by gibbs_step when empty.
  Matrix factor;
};

struct GibbsOptions {
  double tau = 1.0;             ///< prior precision on ρ and ψ
  double theta_step = 0.3;      ///< isotropic RWM scale for θ
  bool use_likelihood = true;   ///< false: likelihood replaced by a constant
  double jitter = 1e-10;
};

struct GibbsOutcome {
  bool inner_accepted = false;  ///< Hug or HMC
  bool hop_accepted = false;
  bool theta_accepted = false;
  bool theta_failed = false;
};

/// Joint log target of (ρ, ψ, z) up to a constant:
/// Σ_g log Φ(y_g [A(θ)ᵀz]_g) - ½zᵀz - (τ/2)(ρ² + ψ²).
double spatial_joint_log_density(const SpatialProbitData& data, const SpatialState& state,
                                 const GibbsOptions& options);

/// One Metropolis-within-Gibbs sweep: Z | θ with the inner kernel, then θ | Z
/// by isotropic RWM on the joint target (Σ(θ) refactorised per proposal).
GibbsOutcome gibbs_step(const SpatialProbitData& data, SpatialState& state,
                        const SpatialInnerKernel& inner, const GibbsOptions& options, Rng& rng);

// ---------------------------------------------------------------- dataset I/O

/// Writes delimited text files plus a JSON manifest (seed, sizes, true
/// parameters) into `dir`; returns the manifest path.
std::filesystem::path write_dataset(const CauchitData& data, double tau, const std::filesystem::path& dir);
std::filesystem::path write_dataset(const RaschData& data, double tau, const std::filesystem::path& dir);
std::filesystem::path write_dataset(const SpatialProbitData& data, double tau,
                                    const std::filesystem::path& dir);

CauchitData read_cauchit_dataset(const std::filesystem::path& dir);
RaschData read_rasch_dataset(const std::filesystem::path& dir);
SpatialProbitData read_spatial_dataset(const std::filesystem::path& dir);

}  // namespace hughop
