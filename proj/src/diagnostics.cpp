#include "hughop/diagnostics.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>

namespace hughop {
namespace {

constexpr Eigen::Index kMinLength = 100;

// Centres the series and rejects degenerate input.
Vector centred(const Vector& series) {
  if (series.size() < kMinLength) {
    throw Error("ess: series too short (" + std::to_string(series.size()) + " < 100)");
  }
  if (!series.allFinite()) throw NonFiniteError("ess: non-finite value in series");
  const double scale = series.cwiseAbs().maxCoeff();
  Vector c = series.array() - series.mean();
  if (c.cwiseAbs().maxCoeff() <= 1e-13 * scale || c.squaredNorm() == 0.0) throw Error("ess: zero variance");
  return c;
}

Vector autocovariance(const Vector& c) {
  const Eigen::Index n = c.size();
  Eigen::Index m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<double> padded(m, 0.0);
  std::copy(c.data(), c.data() + n, padded.begin());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, padded);
  for (auto& s : spectrum) s = std::norm(s);
  std::vector<double> acov;
  fft.inv(acov, spectrum);
  Vector out(n);
  for (Eigen::Index k = 0; k < n; ++k) out[k] = acov[k] / n;
  return out;
}

double clamp_ess(double n, double tau) {
  if (!(tau > 1.0 / n)) return n;
  return std::clamp(n / tau, 1.0, n);
}

}  // namespace

Vector autocorrelation(const Vector& series) {
  const Vector acov = autocovariance(centred(series));
  return acov / acov[0];
}

double ess(const Vector& series, EssMethod method) {
  if (method == EssMethod::BatchMeans) return ess_batch_means(series);
  const Vector acov = autocovariance(centred(series));
  const Eigen::Index n = acov.size();
  // Γₘ = γ₂ₘ + γ₂ₘ₊₁, summed while positive and forced non-increasing.
  double sum = 0.0;
  double previous = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; 2 * m + 1 < n; ++m) {
    double pair = acov[2 * m] + acov[2 * m + 1];
    if (m > 0 && !(pair > 0.0)) break;
    pair = std::min(pair, previous);
    sum += pair;
    previous = pair;
  }
  const double tau = (-acov[0] + 2.0 * sum) / acov[0];
  return clamp_ess(static_cast<double>(n), tau);
}

double ess_batch_means(const Vector& series) {
  const Vector c = centred(series);
  const Eigen::Index n = c.size();
  const Eigen::Index batches = static_cast<Eigen::Index>(std::sqrt(static_cast<double>(n)));
  const Eigen::Index len = n / batches;
  const Eigen::Index used = batches * len;
  const double mean = c.head(used).mean();
  const double var = (c.head(used).array() - mean).square().sum() / used;
  double bm = 0.0;
  for (Eigen::Index b = 0; b < batches; ++b) {
    const double d = c.segment(b * len, len).mean() - mean;
    bm += d * d;
  }
  bm /= (batches - 1);
  return clamp_ess(static_cast<double>(used), len * bm / var);
}

nlohmann::json RunSummary::to_json() const {
  nlohmann::json j;
  j["iterations"] = iterations;
  j["kept"] = kept;
  j["burn_in_fraction"] = burn_in_fraction;
  j["min_ess_x"] = min_ess_x;
  j["ess_logpi"] = ess_logpi;
  j["min_ess_x_per_1000"] = min_ess_x_per_1000;
  j["ess_logpi_per_1000"] = ess_logpi_per_1000;
  j["min_ess_x_per_second"] = min_ess_x_per_second;
  j["ess_logpi_per_second"] = ess_logpi_per_second;
  j["ess_components"] = std::vector<double>(ess_components.data(), ess_components.data() + ess_components.size());
  j["acceptance"] = acceptance;
  j["failures"] = failures;
  j["wall_time"] = wall_time;
  j["degenerate"] = degenerate;
  if (degenerate) j["degenerate_reason"] = degenerate_reason;
  return j;
}

RunSummary summarize_run(const Trace& trace, double burn_in_fraction) {
  if (trace.positions.rows() == 0 || trace.iterations == 0) throw Error("summarize_run: empty trace");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw ConfigError("summarize_run: burn-in fraction must be in [0, 1)");
  }
  if (trace.log_target.size() != trace.positions.rows()) {
    throw DimensionError("summarize_run: positions and log_target lengths differ");
  }
  RunSummary s;
  s.iterations = trace.iterations;
  s.burn_in_fraction = burn_in_fraction;
  s.wall_time = trace.wall_time;

  const Eigen::Index stored = trace.positions.rows();
  const Eigen::Index skip = static_cast<Eigen::Index>(std::floor(burn_in_fraction * stored));
  s.kept = stored - skip;
  const long first_iter = static_cast<long>(std::floor(burn_in_fraction * trace.iterations));
  const long kept_iters = trace.iterations - first_iter;

  for (std::size_t k = 0; k < trace.kernels.size(); ++k) {
    const auto& flags = trace.accepted.at(k);
    long count = 0;
    for (std::size_t i = static_cast<std::size_t>(first_iter); i < flags.size(); ++i) count += flags[i];
    const long denom = static_cast<long>(flags.size()) - first_iter;
    s.acceptance[trace.kernels[k]] = denom > 0 ? static_cast<double>(count) / denom : 0.0;
    s.failures[trace.kernels[k]] = k < trace.failures.size() ? trace.failures[k] : 0;
  }

  const Eigen::Index d = trace.positions.cols();
  s.ess_components = Vector::Zero(d);
  try {
    for (Eigen::Index j = 0; j < d; ++j) s.ess_components[j] = ess(trace.positions.col(j).tail(s.kept));
    s.min_ess_x = s.ess_components.minCoeff();
    s.ess_logpi = ess(trace.log_target.tail(s.kept));
  } catch (const Error& e) {
    s.degenerate = true;
    s.degenerate_reason = e.what();
    s.min_ess_x = 0.0;
    s.ess_logpi = 0.0;
  }
  s.min_ess_x_per_1000 = 1000.0 * s.min_ess_x / kept_iters;
  s.ess_logpi_per_1000 = 1000.0 * s.ess_logpi / kept_iters;
  const double seconds = trace.wall_time * static_cast<double>(kept_iters) / trace.iterations;
  if (seconds > 0.0) {
    s.min_ess_x_per_second = s.min_ess_x / seconds;
    s.ess_logpi_per_second = s.ess_logpi / seconds;
  }
  return s;
}

}  // namespace hughop
