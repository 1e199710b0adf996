#include "hughop/targets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace hughop {
namespace {

constexpr double kLog2 = 0.69314718055994530942;

// log cosh(t) without overflow for large |t|.
double log_cosh(double t) {
  const double a = std::abs(t);
  return a + std::log1p(std::exp(-2.0 * a)) - kLog2;
}

void require_positive(const Vector& v, const char* what) {
  if (v.size() == 0) throw ConfigError(std::string(what) + ": empty scale vector");
  if (!v.allFinite() || (v.array() <= 0.0).any()) {
    throw ConfigError(std::string(what) + ": scales must be finite and positive");
  }
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(what) + " must be finite and positive");
  }
}

// Two-component mixture in log space: given per-component log weights qₖ,
// gradients gₖ and (constant) Hessians Hₖ, accumulate ℓ, ∇ℓ and ∇²ℓ.
struct Mixture2 {
  double q[2];
  Eigen::Vector2d g[2];
  Eigen::Matrix2d h[2];

  double value() const {
    const double m = std::max(q[0], q[1]);
    return m + std::log(std::exp(q[0] - m) + std::exp(q[1] - m));
  }
  Eigen::Vector2d weights() const {
    const double l = value();
    return {std::exp(q[0] - l), std::exp(q[1] - l)};
  }
  Eigen::Vector2d gradient() const {
    const auto w = weights();
    return w[0] * g[0] + w[1] * g[1];
  }
  Eigen::Matrix2d hessian() const {
    const auto w = weights();
    const Eigen::Vector2d mean_g = w[0] * g[0] + w[1] * g[1];
    Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
    for (int k = 0; k < 2; ++k) out += w[k] * (h[k] + g[k] * g[k].transpose());
    return out - mean_g * mean_g.transpose();
  }
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

Vector unit_scales(int dim) { return Vector::Ones(dim); }

Vector linear_scales(int dim) {
  Vector s(dim);
  for (int i = 0; i < dim; ++i) s[i] = dim - i;
  return s;
}

Vector linear10_scales(int dim) {
  Vector s(dim);
  for (int i = 0; i < dim; ++i) s[i] = 10.0 * (i + 1) / dim;
  return s;
}

// ---------------------------------------------------------------- GaussianDiag

GaussianDiag::GaussianDiag(Vector scales) : scales_(std::move(scales)) {
  require_positive(scales_, "GaussianDiag");
  precisions_ = scales_.array().square().inverse();
}

GaussianDiag GaussianDiag::from_precisions(const Vector& precisions) {
  require_positive(precisions, "GaussianDiag precisions");
  return GaussianDiag(precisions.array().rsqrt().matrix());
}

double GaussianDiag::log_density_impl(const Vector& x) const {
  return -0.5 * (x.array().square() * precisions_.array()).sum();
}

Vector GaussianDiag::gradient_impl(const Vector& x) const {
  return -(x.array() * precisions_.array()).matrix();
}

Matrix GaussianDiag::hessian_impl(const Vector&) const {
  return Matrix((-precisions_).asDiagonal());
}

Vector GaussianDiag::sample_impl(Rng& rng) const {
  return (standard_normal(rng, dim()).array() * scales_.array()).matrix();
}

// ------------------------------------------------------------ LogisticGaussian

LogisticGaussian::LogisticGaussian(double a, Vector scales) : a_(a), scales_(std::move(scales)) {
  require_positive(a_, "LG a");
  require_positive(scales_, "LG");
}

double LogisticGaussian::log_density_impl(const Vector& x) const {
  double l = 0.0;
  for (int i = 0; i < dim(); ++i) {
    const double u = x[i] / scales_[i];
    l += -2.0 * log_cosh(0.5 * u) - 0.5 * u * u / (a_ * a_);
  }
  return l;
}

Vector LogisticGaussian::gradient_impl(const Vector& x) const {
  Vector g(dim());
  for (int i = 0; i < dim(); ++i) {
    const double s = scales_[i];
    g[i] = -std::tanh(0.5 * x[i] / s) / s - x[i] / (a_ * a_ * s * s);
  }
  return g;
}

Matrix LogisticGaussian::hessian_impl(const Vector& x) const {
  Vector h(dim());
  for (int i = 0; i < dim(); ++i) {
    const double s = scales_[i];
    const double sech = 1.0 / std::cosh(0.5 * x[i] / s);
    h[i] = -0.5 * sech * sech / (s * s) - 1.0 / (a_ * a_ * s * s);
  }
  return Matrix(h.asDiagonal());
}

Vector LogisticGaussian::sample_impl(Rng& rng) const {
  Vector x(dim());
  for (int i = 0; i < dim(); ++i) {
    const double s = scales_[i];
    for (;;) {
      double u = uniform01(rng);
      if (u <= 0.0 || u >= 1.0) continue;
      const double cand = s * std::log(u / (1.0 - u));
      const double z = cand / (a_ * s);
      if (uniform01(rng) < std::exp(-0.5 * z * z)) {
        x[i] = cand;
        break;
      }
    }
  }
  return x;
}

// ------------------------------------------------------------- QuarticGaussian

QuarticGaussian::QuarticGaussian(double a, Vector scales) : a_(a), scales_(std::move(scales)) {
  require_positive(a_, "QG a");
  require_positive(scales_, "QG");
}

double QuarticGaussian::log_density_impl(const Vector& x) const {
  double l = 0.0;
  for (int i = 0; i < dim(); ++i) {
    const double u = x[i] / scales_[i];
    const double u2 = u * u;
    l += -0.5 * u2 * u2 - 0.5 * u2 / (a_ * a_);
  }
  return l;
}

Vector QuarticGaussian::gradient_impl(const Vector& x) const {
  Vector g(dim());
  for (int i = 0; i < dim(); ++i) {
    const double s = scales_[i];
    const double u = x[i] / s;
    g[i] = -2.0 * u * u * u / s - u / (a_ * a_ * s);
  }
  return g;
}

Matrix QuarticGaussian::hessian_impl(const Vector& x) const {
  Vector h(dim());
  for (int i = 0; i < dim(); ++i) {
    const double s = scales_[i];
    const double u = x[i] / s;
    h[i] = -6.0 * u * u / (s * s) - 1.0 / (a_ * a_ * s * s);
  }
  return Matrix(h.asDiagonal());
}

Vector QuarticGaussian::sample_impl(Rng& rng) const {
  std::normal_distribution<double> normal;
  Vector x(dim());
  for (int i = 0; i < dim(); ++i) {
    for (;;) {
      const double cand = a_ * scales_[i] * normal(rng);
      const double u = cand / scales_[i];
      if (uniform01(rng) < std::exp(-0.5 * u * u * u * u)) {
        x[i] = cand;
        break;
      }
    }
  }
  return x;
}

// -------------------------------------------------------------------- Banana2D

Banana2D::Banana2D(double a, double c, double b) : a_(a), c_(c), b_(b) {
  require_positive(a_, "Banana a");
  require_positive(c_, "Banana c");
  if (!(b_ > 0.0 && b_ < 1.0)) throw ConfigError("Banana bananacity b must lie in (0, 1)");
  s_ = c_ * std::sqrt(1.0 - b_ * b_);
  r_ = b_ * c_ * std::sqrt(2.0) / (2.0 * a_ * a_);
}

double Banana2D::log_density_impl(const Vector& x) const {
  const double m = x[1] - r_ * (x[0] * x[0] - a_ * a_);
  return -0.5 * x[0] * x[0] / (a_ * a_) - 0.5 * m * m / (s_ * s_);
}

Vector Banana2D::gradient_impl(const Vector& x) const {
  const double m = x[1] - r_ * (x[0] * x[0] - a_ * a_);
  const double s2 = s_ * s_;
  Vector g(2);
  g[0] = -x[0] / (a_ * a_) + 2.0 * r_ * x[0] * m / s2;
  g[1] = -m / s2;
  return g;
}

Matrix Banana2D::hessian_impl(const Vector& x) const {
  const double m = x[1] - r_ * (x[0] * x[0] - a_ * a_);
  const double s2 = s_ * s_;
  Matrix h(2, 2);
  h(0, 0) = -1.0 / (a_ * a_) + 2.0 * r_ * m / s2 - 4.0 * r_ * r_ * x[0] * x[0] / s2;
  h(0, 1) = h(1, 0) = 2.0 * r_ * x[0] / s2;
  h(1, 1) = -1.0 / s2;
  return h;
}

Vector Banana2D::sample_impl(Rng& rng) const {
  std::normal_distribution<double> normal;
  Vector x(2);
  x[0] = a_ * normal(rng);
  x[1] = r_ * (x[0] * x[0] - a_ * a_) + s_ * normal(rng);
  return x;
}

// ------------------------------------------------------------------- Bimodal2D

Bimodal2D::Bimodal2D(double a, double b, double separation) {
  require_positive(a, "Bimodal a");
  require_positive(b, "Bimodal b");
  if (!(separation >= 1.0) || !std::isfinite(separation)) {
    throw ConfigError("Bimodal separation must be >= 1");
  }
  const double shift = std::sqrt(1.0 - 1.0 / (separation * separation));
  mean_ = {a * shift, b * shift};
  variances_ = {a * a / (separation * separation), b * b / (separation * separation)};
}

namespace {
Mixture2 bimodal_parts(const Vector& x, const Eigen::Vector2d& mean, const Eigen::Vector2d& var) {
  Mixture2 m;
  const Eigen::Vector2d xv(x[0], x[1]);
  for (int k = 0; k < 2; ++k) {
    const Eigen::Vector2d centre = k == 0 ? mean : Eigen::Vector2d(-mean);
    const Eigen::Vector2d dev = xv - centre;
    m.q[k] = -0.5 * (dev.array().square() / var.array()).sum();
    m.g[k] = -(dev.array() / var.array()).matrix();
    m.h[k] = Eigen::Matrix2d((-var.array().inverse()).matrix().asDiagonal());
  }
  return m;
}
}  // namespace

double Bimodal2D::log_density_impl(const Vector& x) const {
  return bimodal_parts(x, mean_, variances_).value();
}

Vector Bimodal2D::gradient_impl(const Vector& x) const {
  return bimodal_parts(x, mean_, variances_).gradient();
}

Matrix Bimodal2D::hessian_impl(const Vector& x) const {
  return bimodal_parts(x, mean_, variances_).hessian();
}

Vector Bimodal2D::sample_impl(Rng& rng) const {
  const double sign = uniform01(rng) < 0.5 ? 1.0 : -1.0;
  Vector z = standard_normal(rng, 2);
  return (sign * mean_.array() + variances_.array().sqrt() * z.array()).matrix();
}

// ----------------------------------------------------------------- PlusPrism2D

PlusPrism2D::PlusPrism2D(double a, double b) {
  if (!(2.0 * a * a > 1.0) || !(b * b > 1.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw ConfigError("PlusPrism requires 2a^2 > 1 and b^2 > 1");
  }
  variances_[0] = {2.0 * a * a - 1.0, 1.0};
  variances_[1] = {1.0, b * b - 1.0};
}

namespace {
Mixture2 plus_parts(const Vector& x, const Eigen::Vector2d* var) {
  Mixture2 m;
  const Eigen::Vector2d xv(x[0], x[1]);
  for (int k = 0; k < 2; ++k) {
    m.q[k] = -0.5 * std::log(var[k].prod()) - 0.5 * (xv.array().square() / var[k].array()).sum();
    m.g[k] = -(xv.array() / var[k].array()).matrix();
    m.h[k] = Eigen::Matrix2d((-var[k].array().inverse()).matrix().asDiagonal());
  }
  return m;
}
}  // namespace

double PlusPrism2D::log_density_impl(const Vector& x) const { return plus_parts(x, variances_).value(); }

Vector PlusPrism2D::gradient_impl(const Vector& x) const { return plus_parts(x, variances_).gradient(); }

Matrix PlusPrism2D::hessian_impl(const Vector& x) const { return plus_parts(x, variances_).hessian(); }

Vector PlusPrism2D::sample_impl(Rng& rng) const {
  const int k = uniform01(rng) < 0.5 ? 0 : 1;
  Vector z = standard_normal(rng, 2);
  return (variances_[k].array().sqrt() * z.array()).matrix();
}

// -------------------------------------------------------------- EmbeddedTarget

EmbeddedTarget::EmbeddedTarget(TargetPtr head, Vector tail_scales)
    : head_(std::move(head)), tail_(std::move(tail_scales)) {
  if (!head_ || head_->dim() != 2) throw ConfigError("EmbeddedTarget needs a 2-D head target");
}

double EmbeddedTarget::log_density_impl(const Vector& x) const {
  return head_->log_density(x.head(2)) + tail_.log_density(x.tail(x.size() - 2));
}

Vector EmbeddedTarget::gradient_impl(const Vector& x) const {
  Vector g(dim());
  g.head(2) = head_->gradient(x.head(2));
  g.tail(dim() - 2) = tail_.gradient(x.tail(dim() - 2));
  return g;
}

Matrix EmbeddedTarget::hessian_impl(const Vector& x) const {
  Matrix h = Matrix::Zero(dim(), dim());
  h.topLeftCorner(2, 2) = head_->hessian(x.head(2));
  h.bottomRightCorner(dim() - 2, dim() - 2) = tail_.hessian(x.tail(dim() - 2));
  return h;
}

Vector EmbeddedTarget::sample_impl(Rng& rng) const {
  Vector x(dim());
  x.head(2) = head_->sample_one(rng);
  x.tail(dim() - 2) = tail_.sample_one(rng);
  return x;
}

// --------------------------------------------------------------------- factory

namespace {

Vector resolve_scales(const nlohmann::json& spec, int dim) {
  if (!spec.contains("scales")) return unit_scales(dim);
  const auto& s = spec.at("scales");
  if (s.is_array()) {
    Vector v(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) v[static_cast<Eigen::Index>(i)] = s[i].get<double>();
    if (v.size() != dim) throw ConfigError("target.scales: length does not match dim");
    return v;
  }
  const std::string preset = lower(s.get<std::string>());
  if (preset == "u" || preset == "unit" || preset == "iso") return unit_scales(dim);
  if (preset == "l" || preset == "linear") return linear_scales(dim);
  if (preset == "linear10") return linear10_scales(dim);
  throw ConfigError("target.scales: unknown preset '" + s.get<std::string>() + "'");
}

TargetPtr embed(TargetPtr head, const Vector& scales) {
  if (scales.size() == 2) return head;
  return std::make_shared<EmbeddedTarget>(std::move(head), scales.tail(scales.size() - 2));
}

}  // namespace

TargetPtr make_target(const nlohmann::json& spec) {
  try {
    std::string name;
    if (spec.contains("target")) {
      name = spec.at("target").get<std::string>();
    } else if (spec.contains("name")) {
      name = spec.at("name").get<std::string>();
    } else {
      throw ConfigError("target: missing 'target' name");
    }
    name = lower(name);
    if (name == "gaussian" && spec.contains("precisions")) {
      const auto& p = spec.at("precisions");
      Vector v(static_cast<Eigen::Index>(p.size()));
      for (std::size_t i = 0; i < p.size(); ++i) v[static_cast<Eigen::Index>(i)] = p[i].get<double>();
      return std::make_shared<GaussianDiag>(GaussianDiag::from_precisions(v));
    }
    const int dim = spec.value("dim", spec.contains("scales") && spec.at("scales").is_array()
                                          ? static_cast<int>(spec.at("scales").size())
                                          : 2);
    if (dim < 1) throw ConfigError("target.dim must be positive");
    const Vector scales = resolve_scales(spec, dim);

    if (name == "gaussian" || name == "gaussiandiag") return std::make_shared<GaussianDiag>(scales);
    if (name == "lg") return std::make_shared<LogisticGaussian>(spec.value("a", 5.0), scales);
    if (name == "qg") return std::make_shared<QuarticGaussian>(spec.value("a", 3.0), scales);

    if (dim < 2) throw ConfigError("target '" + name + "' needs dim >= 2");
    if (name == "banana") {
      auto head = std::make_shared<Banana2D>(spec.value("a", scales[0]), spec.value("c", scales[1]),
                                             spec.value("b", std::sqrt(0.5)));
      return embed(head, scales);
    }
    if (name == "bimodal") {
      auto head = std::make_shared<Bimodal2D>(spec.value("a", scales[0]), spec.value("b", scales[1]),
                                              spec.value("separation", 3.0));
      return embed(head, scales);
    }
    if (name == "plusprism") {
      auto head = std::make_shared<PlusPrism2D>(spec.value("a", scales[0]), spec.value("b", scales[1]));
      return embed(head, scales);
    }
    throw ConfigError("target: unknown target '" + name + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("target: ") + e.what());
  }
}

std::vector<NamedTarget> comparison_targets(int dim) {
  std::vector<NamedTarget> out;
  for (const char* preset : {"U", "L"}) {
    for (const char* name : {"gaussian", "LG", "QG", "banana", "bimodal", "plusprism"}) {
      if (std::string(name) == "plusprism" && std::string(preset) == "U") continue;
      nlohmann::json spec = {{"target", name}, {"dim", dim}, {"scales", preset}};
      out.push_back({std::string(name) + "-" + preset, make_target(spec)});
    }
  }
  return out;
}

}  // namespace hughop
