#include "hughop/models.hpp"

#include "hughop/normal.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace hughop {

// --------------------------------------------------------------------- cauchit

double cauchit_inverse_link(double z) {
  // For z < 0, ½ + atan(z)/π = atan(-1/z)/π.
  if (z < 0.0) return std::atan(-1.0 / z) / std::numbers::pi;
  return 0.5 + std::atan(z) / std::numbers::pi;
}

namespace {

// d/dz log F(z) with F the cauchit inverse link.
double cauchit_score(double z) {
  const double f = 1.0 / (std::numbers::pi * (1.0 + z * z));
  return f / cauchit_inverse_link(z);
}

double cauchit_score_derivative(double z) {
  const double r = cauchit_score(z);
  return r * (-2.0 * z / (1.0 + z * z) - r);
}

void require_sizes(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

CauchitData simulate_cauchit(int N, int M, double tau, std::uint64_t seed, const std::optional<Vector>& beta) {
  require_sizes(N >= 1 && M >= 1, "simulate_cauchit: N and M must be >= 1");
  require_sizes(tau > 0.0, "simulate_cauchit: tau must be positive");
  Rng rng(seed);
  std::normal_distribution<double> normal;
  CauchitData d;
  d.seed = seed;
  d.X.resize(N, M);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j) d.X(i, j) = normal(rng);
  if (beta) {
    require_sizes(beta->size() == M, "simulate_cauchit: beta has the wrong length");
    d.true_beta = *beta;
  } else {
    d.true_beta = standard_normal(rng, M) / std::sqrt(tau);
  }
  d.y.resize(N);
  for (int i = 0; i < N; ++i) {
    const double p = cauchit_inverse_link(d.X.row(i).dot(d.true_beta));
    d.y[i] = uniform01(rng) < p ? 1.0 : -1.0;
  }
  return d;
}

CauchitPosterior::CauchitPosterior(CauchitData data, double tau) : data_(std::move(data)), tau_(tau) {
  require_sizes(tau_ > 0.0, "cauchit: tau must be positive");
  require_sizes(data_.y.size() == data_.X.rows(), "cauchit: y and X row counts differ");
  signed_X_ = data_.y.asDiagonal() * data_.X;
}

double CauchitPosterior::log_density_impl(const Vector& beta) const {
  const Vector z = signed_X_ * beta;
  double l = -0.5 * tau_ * beta.squaredNorm();
  for (Eigen::Index i = 0; i < z.size(); ++i) l += std::log(cauchit_inverse_link(z[i]));
  return l;
}

Vector CauchitPosterior::gradient_impl(const Vector& beta) const {
  double value = 0.0;
  Vector g;
  value_and_gradient_impl(beta, value, g);
  return g;
}

void CauchitPosterior::value_and_gradient_impl(const Vector& beta, double& value, Vector& grad) const {
  const Vector z = signed_X_ * beta;
  Vector score(z.size());
  value = -0.5 * tau_ * beta.squaredNorm();
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double F = cauchit_inverse_link(z[i]);
    value += std::log(F);
    score[i] = 1.0 / (std::numbers::pi * (1.0 + z[i] * z[i]) * F);
  }
  grad = signed_X_.transpose() * score - tau_ * beta;
}

Matrix CauchitPosterior::hessian_impl(const Vector& beta) const {
  const Vector z = signed_X_ * beta;
  Vector w(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) w[i] = cauchit_score_derivative(z[i]);
  Matrix h = signed_X_.transpose() * w.asDiagonal() * signed_X_;
  h.diagonal().array() -= tau_;
  return h;
}

// ----------------------------------------------------------------------- Rasch

RaschData simulate_rasch(int M, int N, double tau, std::uint64_t seed) {
  require_sizes(M >= 2 && N >= 1, "simulate_rasch: need M >= 2 and N >= 1");
  require_sizes(tau > 0.0, "simulate_rasch: tau must be positive");
  Rng rng(seed);
  RaschData d;
  d.seed = seed;
  d.true_beta = standard_normal(rng, M) / std::sqrt(tau);
  d.true_beta[0] = 0.0;
  d.true_eta = standard_normal(rng, N) / std::sqrt(tau);
  d.Y.resize(M, N);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < N; ++j)
      d.Y(i, j) = uniform01(rng) < normal_cdf(d.true_eta[j] - d.true_beta[i]) ? 1.0 : -1.0;
  return d;
}

RaschPosterior::RaschPosterior(RaschData data, double tau, double pinned_beta1)
    : data_(std::move(data)), tau_(tau), pinned_(pinned_beta1) {
  require_sizes(data_.Y.rows() >= 2 && data_.Y.cols() >= 1, "rasch: need M >= 2 and N >= 1");
  require_sizes(tau_ > 0.0, "rasch: tau must be positive");
}

Vector RaschPosterior::full_beta(const Vector& theta) const {
  Vector beta(questions());
  beta[0] = pinned_;
  beta.tail(questions() - 1) = theta.head(questions() - 1);
  return beta;
}

double RaschPosterior::log_density_impl(const Vector& theta) const {
  const int M = questions();
  const Vector beta = full_beta(theta);
  const auto eta = theta.tail(people());
  double l = -0.5 * tau_ * (theta.head(M - 1).squaredNorm() + eta.squaredNorm());
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < people(); ++j) l += log_normal_cdf(data_.Y(i, j) * (eta[j] - beta[i]));
  return l;
}

Vector RaschPosterior::gradient_impl(const Vector& theta) const {
  const int M = questions();
  const int N = people();
  const Vector beta = full_beta(theta);
  const auto eta = theta.tail(N);
  Vector g = -tau_ * theta;
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      const double y = data_.Y(i, j);
      const double t = y * inverse_mills(y * (eta[j] - beta[i]));
      if (i > 0) g[i - 1] -= t;
      g[M - 1 + j] += t;
    }
  }
  return g;
}

Matrix RaschPosterior::hessian_impl(const Vector& theta) const {
  const int M = questions();
  const int N = people();
  const Vector beta = full_beta(theta);
  const auto eta = theta.tail(N);
  Matrix h = Matrix::Zero(dim(), dim());
  h.diagonal().setConstant(-tau_);
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      const double y = data_.Y(i, j);
      // y² = 1, so every second derivative is ±m'(z).
      const double c = inverse_mills_derivative(y * (eta[j] - beta[i]));
      const int e = M - 1 + j;
      h(e, e) += c;
      if (i > 0) {
        h(i - 1, i - 1) += c;
        h(i - 1, e) -= c;
        h(e, i - 1) -= c;
      }
    }
  }
  return h;
}

// ------------------------------------------------------------- spatial probit

Matrix grid_distances(int rows, int cols) {
  require_sizes(rows >= 1 && cols >= 1, "grid_distances: empty grid");
  const int n = rows * cols;
  Matrix d(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double dk = a / cols - b / cols;
      const double dl = a % cols - b % cols;
      d(a, b) = std::sqrt(dk * dk + dl * dl);
    }
  }
  return d;
}

GpCovariance gp_covariance(double rho, double psi, const Matrix& distance, double jitter) {
  if (!std::isfinite(rho) || !std::isfinite(psi)) throw NonFiniteError("gp_covariance: non-finite theta");
  if (distance.rows() != distance.cols()) throw DimensionError("gp_covariance: D is not square");
  GpCovariance out;
  const double inv_range = std::exp(-psi);
  out.covariance = (rho - inv_range * distance.array()).exp().matrix();
  out.covariance.diagonal().array() += jitter;
  try {
    out.factor = factor(out.covariance, FactorKind::Triangular);
  } catch (const FactorizationError& e) {
    throw FactorizationError(std::string(e.what()) + "; Sigma(theta) is near-singular, try a larger jitter",
                             e.index(), e.pivot());
  }
  out.log_det = 2.0 * out.factor.diagonal().array().log().sum();
  return out;
}

SpatialProbitData simulate_spatial(int rows, int cols, double rho, double psi, std::uint64_t seed, double jitter) {
  SpatialProbitData d;
  d.rows = rows;
  d.cols = cols;
  d.distance = grid_distances(rows, cols);
  d.true_rho = rho;
  d.true_psi = psi;
  d.seed = seed;
  Rng rng(seed);
  const GpCovariance cov = gp_covariance(rho, psi, d.distance, jitter);
  d.true_x = cov.factor.transpose() * standard_normal(rng, rows * cols);
  d.y.resize(rows * cols);
  for (int g = 0; g < rows * cols; ++g) d.y[g] = uniform01(rng) < normal_cdf(d.true_x[g]) ? 1.0 : -1.0;
  return d;
}

double spatial_log_likelihood(const SpatialProbitData& data, const Matrix& factor, const Vector& z) {
  const Vector w = factor.transpose() * z;
  double l = 0.0;
  for (Eigen::Index g = 0; g < w.size(); ++g) l += log_normal_cdf(data.y[g] * w[g]);
  return l;
}

SpatialConditional::SpatialConditional(const SpatialProbitData& data, Matrix factor, bool use_likelihood)
    : y_(data.y), factor_(std::move(factor)), use_likelihood_(use_likelihood) {
  if (factor_.rows() != factor_.cols() || factor_.rows() != y_.size()) {
    throw DimensionError("SpatialConditional: factor does not match the grid");
  }
}

double SpatialConditional::log_density_impl(const Vector& z) const {
  double l = -0.5 * z.squaredNorm();
  if (!use_likelihood_) return l;
  const Vector w = factor_.transpose() * z;
  for (Eigen::Index g = 0; g < w.size(); ++g) l += log_normal_cdf(y_[g] * w[g]);
  return l;
}

Vector SpatialConditional::gradient_impl(const Vector& z) const {
  if (!use_likelihood_) return -z;
  const Vector w = factor_.transpose() * z;
  Vector t(w.size());
  for (Eigen::Index g = 0; g < w.size(); ++g) t[g] = y_[g] * inverse_mills(y_[g] * w[g]);
  return factor_ * t - z;
}

Matrix SpatialConditional::hessian_impl(const Vector& z) const {
  Matrix h = -Matrix::Identity(dim(), dim());
  if (!use_likelihood_) return h;
  const Vector w = factor_.transpose() * z;
  Vector c(w.size());
  for (Eigen::Index g = 0; g < w.size(); ++g) c[g] = inverse_mills_derivative(y_[g] * w[g]);
  h += factor_ * c.asDiagonal() * factor_.transpose();
  return h;
}

SpatialConditional spatial_conditional_target(double rho, double psi, const SpatialProbitData& data,
                                              bool use_likelihood, double jitter) {
  return SpatialConditional(data, gp_covariance(rho, psi, data.distance, jitter).factor, use_likelihood);
}

double spatial_joint_log_density(const SpatialProbitData& data, const SpatialState& state,
                                 const GibbsOptions& options) {
  const Matrix factor = state.factor.size() ? state.factor
                                            : gp_covariance(state.rho, state.psi, data.distance, options.jitter).factor;
  double l = -0.5 * state.z.squaredNorm() - 0.5 * options.tau * (state.rho * state.rho + state.psi * state.psi);
  if (options.use_likelihood) l += spatial_log_likelihood(data, factor, state.z);
  return l;
}

GibbsOutcome gibbs_step(const SpatialProbitData& data, SpatialState& state, const SpatialInnerKernel& inner,
                        const GibbsOptions& options, Rng& rng) {
  GibbsOutcome out;
  if (state.factor.size() == 0) {
    state.factor = gp_covariance(state.rho, state.psi, data.distance, options.jitter).factor;
  }

  // Z | θ
  const SpatialConditional conditional(data, state.factor, options.use_likelihood);
  ChainState zs = ChainState::at(conditional, state.z);
  if (const auto* hh = std::get_if<HugHopInner>(&inner)) {
    out.inner_accepted = hug_step(conditional, zs, hh->hug, rng).accepted;
    out.hop_accepted = hop_step(conditional, zs, hh->hop, rng).accepted;
  } else {
    out.inner_accepted = hmc_step(conditional, zs, std::get<HmcParams>(inner), rng).accepted;
  }
  state.z = zs.x;

  // θ | Z
  std::normal_distribution<double> normal;
  const double rho = state.rho + options.theta_step * normal(rng);
  const double psi = state.psi + options.theta_step * normal(rng);
  const double prior_now = -0.5 * options.tau * (state.rho * state.rho + state.psi * state.psi);
  const double prior_new = -0.5 * options.tau * (rho * rho + psi * psi);
  try {
    const Matrix factor = gp_covariance(rho, psi, data.distance, options.jitter).factor;
    double log_ratio = prior_new - prior_now;
    if (options.use_likelihood) {
      log_ratio += spatial_log_likelihood(data, factor, state.z) - zs.log_density - 0.5 * state.z.squaredNorm();
    }
    out.theta_accepted = accept_log_ratio(log_ratio, rng);
    if (out.theta_accepted) {
      state.rho = rho;
      state.psi = psi;
      state.factor = factor;
    }
  } catch (const Error&) {
    out.theta_failed = true;
  }
  return out;
}

// ---------------------------------------------------------------- dataset I/O

namespace {

namespace fs = std::filesystem;

void write_matrix(const fs::path& path, const Matrix& m) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
    os << '\n';
  }
}

Matrix read_matrix(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw Error(path.string() + ": ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
  }
  return m;
}

nlohmann::json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

fs::path write_manifest(const fs::path& dir, const nlohmann::json& manifest) {
  const fs::path path = dir / "manifest.json";
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << manifest.dump(2) << '\n';
  return path;
}

nlohmann::json read_manifest(const fs::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw Error("cannot read " + (dir / "manifest.json").string());
  return nlohmann::json::parse(is);
}

}  // namespace

fs::path write_dataset(const CauchitData& data, double tau, const fs::path& dir) {
  fs::create_directories(dir);
  write_matrix(dir / "X.csv", data.X);
  write_matrix(dir / "y.csv", data.y);
  return write_manifest(dir, {{"model", "cauchit"},
                              {"seed", data.seed},
                              {"N", data.X.rows()},
                              {"M", data.X.cols()},
                              {"tau", tau},
                              {"true_beta", to_json(data.true_beta)},
                              {"files", {"X.csv", "y.csv"}},
                              {"version", kVersion}});
}

fs::path write_dataset(const RaschData& data, double tau, const fs::path& dir) {
  fs::create_directories(dir);
  write_matrix(dir / "Y.csv", data.Y);
  return write_manifest(dir, {{"model", "rasch"},
                              {"seed", data.seed},
                              {"M", data.Y.rows()},
                              {"N", data.Y.cols()},
                              {"tau", tau},
                              {"true_beta", to_json(data.true_beta)},
                              {"true_eta", to_json(data.true_eta)},
                              {"files", {"Y.csv"}},
                              {"version", kVersion}});
}

fs::path write_dataset(const SpatialProbitData& data, double tau, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream os(dir / "grid.csv");
  if (!os) throw Error("cannot write grid.csv");
  os << "# k,l,y\n";
  for (int g = 0; g < data.rows * data.cols; ++g) os << g / data.cols << ',' << g % data.cols << ',' << data.y[g] << '\n';
  os.close();
  return write_manifest(dir, {{"model", "spatial"},
                              {"seed", data.seed},
                              {"rows", data.rows},
                              {"cols", data.cols},
                              {"tau", tau},
                              {"true_rho", data.true_rho},
                              {"true_psi", data.true_psi},
                              {"true_x", to_json(data.true_x)},
                              {"z_dim", data.rows * data.cols},
                              {"total_dim", data.rows * data.cols + 2},
                              {"files", {"grid.csv"}},
                              {"version", kVersion}});
}

CauchitData read_cauchit_dataset(const fs::path& dir) {
  const auto manifest = read_manifest(dir);
  CauchitData d;
  d.X = read_matrix(dir / "X.csv");
  d.y = read_matrix(dir / "y.csv").col(0);
  d.true_beta = vector_from(manifest.at("true_beta"));
  d.seed = manifest.at("seed").get<std::uint64_t>();
  return d;
}

RaschData read_rasch_dataset(const fs::path& dir) {
  const auto manifest = read_manifest(dir);
  RaschData d;
  d.Y = read_matrix(dir / "Y.csv");
  d.true_beta = vector_from(manifest.at("true_beta"));
  d.true_eta = vector_from(manifest.at("true_eta"));
  d.seed = manifest.at("seed").get<std::uint64_t>();
  return d;
}

SpatialProbitData read_spatial_dataset(const fs::path& dir) {
  const auto manifest = read_manifest(dir);
  SpatialProbitData d;
  d.rows = manifest.at("rows").get<int>();
  d.cols = manifest.at("cols").get<int>();
  d.true_rho = manifest.at("true_rho").get<double>();
  d.true_psi = manifest.at("true_psi").get<double>();
  d.true_x = vector_from(manifest.at("true_x"));
  d.seed = manifest.at("seed").get<std::uint64_t>();
  d.distance = grid_distances(d.rows, d.cols);
  const Matrix grid = read_matrix(dir / "grid.csv");
  d.y.resize(d.rows * d.cols);
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    d.y[static_cast<Eigen::Index>(grid(r, 0)) * d.cols + static_cast<Eigen::Index>(grid(r, 1))] = grid(r, 2);
  }
  return d;
}

}  // namespace hughop
