#pragma once

#include "hughop/common.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace hughop {

enum class EssMethod {
  InitialMonotone,  ///< Geyer's initial monotone positive sequence (default)
  BatchMeans,
};

/// Effective sample size n / (1 + 2 Σ ρ̂ₖ), autocovariances by FFT and the sum
/// truncated by the initial monotone positive sequence rule. Clamped to
/// [1, n]; a series whose estimated integrated autocorrelation time is below
/// 1/n (strong negative correlation, e.g. ±1 alternation) gets ESS = n.
/// Throws Error on n < 100 or zero variance.
double ess(const Vector& series, EssMethod method = EssMethod::InitialMonotone);

/// Batch-means estimate with ⌊√n⌋ batches of equal length.
double ess_batch_means(const Vector& series);

/// Normalised autocorrelations ρ̂₀..ρ̂_{n-1} (biased estimator, ρ̂₀ = 1).
Vector autocorrelation(const Vector& series);

/// What a chain run recorded. Rows of `positions` and entries of `log_target`
/// are the stored (post-thinning) states; `accepted[k][i]` is the accept flag
/// of kernel k at iteration i (all iterations, not thinned).
struct Trace {
  Matrix positions;
  Vector log_target;
  std::vector<std::string> kernels;
  std::vector<std::vector<std::uint8_t>> accepted;
  std::vector<long> failures;  ///< numerical failures per kernel
  long iterations = 0;
  int thin = 1;
  double wall_time = 0.0;  ///< seconds, whole run including burn-in
};

struct RunSummary {
  long iterations = 0;
  long kept = 0;  ///< stored states after burn-in
  double burn_in_fraction = 0.0;
  Vector ess_components;
  double min_ess_x = 0.0;
  double ess_logpi = 0.0;
  double min_ess_x_per_1000 = 0.0;
  double ess_logpi_per_1000 = 0.0;
  double min_ess_x_per_second = 0.0;
  double ess_logpi_per_second = 0.0;
  std::map<std::string, double> acceptance;
  std::map<std::string, long> failures;
  double wall_time = 0.0;
  bool degenerate = false;
  std::string degenerate_reason;

  nlohmann::json to_json() const;
};

/// Discards the first `burn_in_fraction` of the stored states and computes
/// ESS per component, ESS of ℓ and per-kernel acceptance (over post-burn-in
/// iterations). Per-1000 figures are per 1000 post-burn-in iterations;
/// per-second figures use the wall time scaled to the post-burn-in share.
/// A constant series marks the summary degenerate instead of throwing.
RunSummary summarize_run(const Trace& trace, double burn_in_fraction = 0.0);

}  // namespace hughop
