// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures. Pass criterion numbers as arguments to run a subset.

#include "hughop/baselines.hpp"
#include "hughop/diagnostics.hpp"
#include "hughop/harness.hpp"
#include "hughop/hop.hpp"
#include "hughop/hug.hpp"
#include "hughop/models.hpp"
#include "hughop/targets.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

using namespace hughop;
using nlohmann::json;
using testutil::loglog_slope;
using testutil::median;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Velocity draw and Hug parameters for one of the three modes.
HugParams hug_mode_params(int mode, const Target& t, double T, int B) {
  if (mode == 0) return HugParams::plain(T, B);
  if (mode == 1) {
    // A fixed, non-trivial diagonal preconditioner.
    Vector diag(t.dim());
    for (int i = 0; i < t.dim(); ++i) diag[i] = 0.5 + 0.1 * (i % 7);
    return HugParams::with_fixed_covariance(T, B, diag.asDiagonal().toDenseMatrix());
  }
  return HugParams::hessian(T, B);
}

Vector draw_velocity(const Target& t, const Vector& x, const HugParams& p, Rng& rng) {
  const Vector z = standard_normal(rng, t.dim());
  if (p.mode == HugMode::Plain) return z;
  if (p.mode == HugMode::FixedPrecond) return p.fixed_metric->factor.transpose() * z;
  return local_covariance(t.hessian(x), p.eps).factor.transpose() * z;
}

// 1. Skew-reversibility of the Hug inner loop. Errors are relative to the
// largest state along the round trip; the report names every (target, mode)
// over tolerance together with how strongly its forward map amplifies a
// 1e-14 perturbation of x0, which bounds the attainable round-trip accuracy.
Verdict skew_reversibility() {
  static const char* mode_names[] = {"plain", "fixed", "hessian"};
  Rng rng(101);
  double worst = 0.0;
  int runs = 0;
  std::string over;
  for (const auto& [label, target] : comparison_targets(25)) {
    for (int mode = 0; mode < 3; ++mode) {
      double worst_here = 0.0, amplification = 0.0;
      for (int trial = 0; trial < 100; ++trial) {
        const double T = 0.2 + 2.8 * uniform01(rng);
        const int B = 1 + static_cast<int>(20 * uniform01(rng));
        const HugParams p = hug_mode_params(mode, *target, T, B);
        const Vector x0 = target->sample_one(rng);
        const Vector v0 = draw_velocity(*target, x0, p, rng);
        const HugTrajectory fwd = hug_trajectory(*target, x0, v0, p);
        const HugTrajectory back = hug_trajectory(*target, fwd.x, -fwd.v, p);
        const double ex = (back.x - x0).norm() / std::max({1.0, x0.norm(), fwd.x.norm()});
        const double ev = (-back.v - v0).norm() / std::max({1.0, v0.norm(), fwd.v.norm()});
        worst_here = std::max({worst_here, ex, ev});
        const Vector e = 1e-14 * std::max(1.0, x0.norm()) * standard_normal(rng, target->dim());
        amplification = std::max(amplification, (hug_trajectory(*target, x0 + e, v0, p).x - fwd.x).norm() / e.norm());
        ++runs;
      }
      worst = std::max(worst, worst_here);
      if (worst_here > 1e-10) {
        over += fmt(" %s/%s %.1e (amplification %.1e);", label.c_str(), mode_names[mode], worst_here, amplification);
      }
    }
  }
  return {worst <= 1e-10, fmt("%d round trips over 11 targets x 3 modes, worst relative error %.2e (tol 1e-10)", runs,
                              worst) + (over.empty() ? std::string() : " over tol:" + over)};
}

// 2. Unit Jacobian of (x0, v0) -> (xB, vB) in d = 2.
Verdict volume_preservation() {
  Rng rng(202);
  const std::vector<TargetPtr> heads = {
      std::make_shared<Banana2D>(1.0, 1.0), std::make_shared<Bimodal2D>(1.0, 2.0),
      std::make_shared<PlusPrism2D>(1.0, 2.0), std::make_shared<LogisticGaussian>(5.0, unit_scales(2))};
  double worst = 0.0;
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Target& t = *heads[trial % heads.size()];
    const HugParams p = HugParams::plain(0.5 + uniform01(rng), 1 + trial % 5);
    Vector s(4);
    s.head(2) = t.sample_one(rng);
    s.tail(2) = standard_normal(rng, 2);
    auto map = [&](const Vector& u) {
      const HugTrajectory r = hug_trajectory(t, u.head(2), u.tail(2), p);
      Vector out(4);
      out << r.x, r.v;
      return out;
    };
    Matrix J(4, 4);
    for (int i = 0; i < 4; ++i) {
      Vector a = s, b = s;
      a[i] += h;
      b[i] -= h;
      J.col(i) = (map(a) - map(b)) / (2 * h);
    }
    // Each reflection has determinant -1, so det J = (-1)^B; the volume
    // element is |det J|.
    worst = std::max(worst, std::abs(std::abs(J.determinant()) - 1.0));
  }
  return {worst <= 1e-4, fmt("20 trials on 2-D targets, max ||det J| - 1| = %.2e (tol 1e-4)", worst)};
}

// 3. Total Hug error at fixed T decays like δ².
Verdict hug_error_scaling() {
  const LogisticGaussian t(5.0, unit_scales(25));
  const std::vector<int> Bs = {5, 10, 20, 40};
  const int n = 2000;
  Rng rng(303);
  std::vector<Vector> xs, vs;
  for (int i = 0; i < n; ++i) {
    xs.push_back(t.sample_one(rng));
    vs.push_back(standard_normal(rng, 25));
  }
  std::vector<double> deltas, errs;
  for (int B : Bs) {
    const HugParams p = HugParams::plain(1.0, B);
    std::vector<double> e;
    for (int i = 0; i < n; ++i) e.push_back(std::abs(t.log_density(hug_trajectory(t, xs[i], vs[i], p).x) - t.log_density(xs[i])));
    deltas.push_back(p.step());
    errs.push_back(median(e));
  }
  const double slope = loglog_slope(deltas, errs);
  return {std::abs(slope - 2.0) <= 0.3,
          fmt("LG(a=5) d=25 T=1: median |dl| %.3g %.3g %.3g %.3g for B=5..40, slope %.3f (2 +- 0.3)", errs[0], errs[1],
              errs[2], errs[3], slope)};
}

// 4. A single HugHess bounce changes ℓ by O(δ³).
Verdict hessian_bounce_scaling() {
  const LogisticGaussian t(5.0, unit_scales(25));
  const std::vector<double> deltas = {0.4, 0.2, 0.1, 0.05};
  const int n = 2000;
  Rng rng(404);
  std::vector<Vector> xs, vs;
  for (int i = 0; i < n; ++i) {
    xs.push_back(t.sample_one(rng));
    vs.push_back(local_covariance(t.hessian(xs.back())).factor.transpose() * standard_normal(rng, 25));
  }
  std::vector<double> errs;
  for (double d : deltas) {
    const HugParams p = HugParams::hessian(d, 1);
    std::vector<double> e;
    for (int i = 0; i < n; ++i) e.push_back(std::abs(t.log_density(hug_trajectory(t, xs[i], vs[i], p).x) - t.log_density(xs[i])));
    errs.push_back(median(e));
  }
  const double slope = loglog_slope(deltas, errs);
  return {std::abs(slope - 3.0) <= 0.4,
          fmt("HugHess single bounce on LG(a=5) d=25: median |dl| %.3g %.3g %.3g %.3g, slope %.3f (3 +- 0.4)", errs[0],
              errs[1], errs[2], errs[3], slope)};
}

// 5. Hop acceptance approaches 2Φ(−κ/2).
Verdict hop_acceptance_limit() {
  bool ok = true;
  std::string detail;
  std::uint64_t k = 0;
  for (double kappa : {0.5, 1.0, 2.0}) {
    const Theorem2Result r = theorem2_experiment(0.5, 5.0, 200, 2.0, kappa, 100000, child_seed(505, k++));
    const double err = std::abs(r.mean_acceptance - r.limit);
    ok = ok && err <= 0.03;
    detail += fmt("kappa=%.1f: %.4f vs %.4f; ", kappa, r.mean_acceptance, r.limit);
  }
  return {ok, detail + "tol 0.03"};
}

// 6. Every kernel leaves GaussianDiag(d=5) invariant.
Verdict exactness() {
  const GaussianDiag t(linear_scales(5));
  const Vector sd = t.scales();
  struct Case {
    std::string name;
    std::vector<KernelSpec> kernels;
  };
  std::vector<Case> cases = {
      {"hug+hop", {{"hug", HugParams::plain(3.0, 10)}, {"hop", HopParams::with_kappa(1.0, 0.5)}}},
      {"hmc", {{"hmc", HmcParams{10, 0.1, std::nullopt}}}},
      {"rwm", {{"rwm", RwmParams::isotropic(2.0)}}},
      {"mala", {{"mala", MalaParams{0.8}}}},
  };
  bool ok = true;
  std::string detail;
  std::uint64_t seed = 606;
  for (const auto& c : cases) {
    ChainOptions opt;
    opt.iterations = 200000;
    opt.burn_in = 0.0;
    opt.seed = seed++;
    const ChainResult r = run_chain(t, c.kernels, opt);
    const Matrix& X = r.trace.positions;
    double worst_z = 0.0, worst_var = 0.0, min_p = 1.0;
    for (int j = 0; j < 5; ++j) {
      const Vector col = X.col(j);
      const double e = r.summary.ess_components[j];
      const double mean = col.mean();
      const double var = (col.array() - mean).square().mean();
      worst_z = std::max(worst_z, std::abs(mean) / (sd[j] / std::sqrt(e)));
      worst_var = std::max(worst_var, std::abs(var / (sd[j] * sd[j]) - 1.0));
      // Thin by the slower of the autocorrelation times of x and x²: a
      // sign-alternating chain can have ESS(x) ≈ n while |x| mixes slowly.
      const double e_sq = ess(col.array().square().matrix());
      const long thin = std::max(1L, static_cast<long>(std::ceil(col.size() / std::min(e, e_sq))));
      std::vector<double> sample;
      for (Eigen::Index i = 0; i < col.size(); i += thin) sample.push_back(col[i]);
      const double D = testutil::ks_statistic(sample, [&](double x) { return normal_cdf(x / sd[j]); });
      min_p = std::min(min_p, testutil::ks_pvalue(D, sample.size()));
    }
    const bool pass = worst_z <= 3.0 && worst_var <= 0.05 && min_p >= 0.01;
    ok = ok && pass;
    detail += fmt("%s: max|mean|/se %.2f, max rel var err %.3f, min KS p %.3f; ", c.name.c_str(), worst_z, worst_var, min_p);
  }
  return {ok, detail};
}

// 7. Hop ESS(ℓ) per iteration holds up from d = 10 to d = 100.
Verdict hop_dimension_robustness() {
  const json isolg1 = {{"target", "LG"}, {"a", 1}, {"scales", "U"}, {"label", "ISOLG1"}};
  const auto rows = hop_scaling_experiment({isolg1}, {10, 100}, {1, 2, 4, 6, 8, 12, 16, 24, 32}, {0.25, 0.5, 1.0}, 200000,
                                           0.2, 707);
  const auto best = hop_scaling_optima(rows);
  if (best.size() != 2) return {false, "missing optimum"};
  const double ratio = best[1].summary.ess_logpi_per_1000 / best[0].summary.ess_logpi_per_1000;
  return {ratio >= 0.6, fmt("ISOLG1 optimum d=10: lambda=%.2g kappa=%.2g ESS(l)/1000=%.1f; d=100: lambda=%.2g kappa=%.2g "
                            "ESS(l)/1000=%.1f; ratio %.3f (>= 0.6)",
                            best[0].lambda, best[0].kappa, best[0].summary.ess_logpi_per_1000, best[1].lambda,
                            best[1].kappa, best[1].summary.ess_logpi_per_1000, ratio)};
}

// 8. Tuned κ lands in [0.25, 1]; some Hug δ gives acceptance in [0.6, 0.85].
Verdict tuning_bands() {
  TuneOptions opt;
  opt.pilot_iterations = 20000;
  opt.objective = "ess_logpi_per_1000";
  json hop = resolve_config(json::object(), {});
  hop["target"] = {{"target", "LG"}, {"a", 1}, {"scales", "U"}, {"dim", 25}};
  hop["kernels"] = json::array({{{"kernel", "hop"}, {"lambda", 1}, {"kappa", 0.5}}});
  hop["seed"] = 808;
  const TuneResult h = grid_tune(hop, {{"kernels.0.lambda", {1, 2, 4, 8, 16}}, {"kernels.0.kappa", {0.25, 0.5, 1, 2}}}, opt);
  const double kappa = h.cells[h.best].assignment["kernels.0.kappa"].get<double>();
  const double lambda = h.cells[h.best].assignment["kernels.0.lambda"].get<double>();
  const bool kappa_ok = kappa >= 0.25 && kappa <= 1.0;

  json hug = resolve_config(json::object(), {});
  hug["target"] = {{"target", "gaussian"}, {"scales", "L"}, {"dim", 25}};
  hug["kernels"] = json::array({{{"kernel", "hug"}, {"T", 1.0}, {"B", 1}}, {{"kernel", "hop"}}});
  hug["seed"] = 809;
  TuneOptions hopt;
  hopt.pilot_iterations = 10000;
  hopt.objective = "geomean_per_1000";
  // With T = 1 the step δ = 1/B never exceeds 1, where acceptance on this
  // target is still ~0.94, so T and B are tuned jointly.
  const TuneResult g = grid_tune(hug, {{"kernels.0.T", {1, 2, 4, 8}}, {"kernels.0.B", {1, 2, 4, 8, 16}}}, hopt);
  auto delta_of = [](const GridCell& c) {
    return c.assignment["kernels.0.T"].get<double>() / c.assignment["kernels.0.B"].get<int>();
  };
  std::string in_band;
  for (const auto& c : g.cells) {
    const double a = c.summary.acceptance.at("hug");
    if (a >= 0.6 && a <= 0.85) in_band += fmt("T=%.3g/B=%d->delta=%.3g(%.3f) ", c.assignment["kernels.0.T"].get<double>(),
                   c.assignment["kernels.0.B"].get<int>(), delta_of(c), a);
  }
  const double best_acc = g.cells[g.best].summary.acceptance.at("hug");
  return {kappa_ok && !in_band.empty(),
          fmt("Hop ISOLG1 d=25 best lambda=%.3g kappa=%.3g; Hug on Gaussian-L d=25 deltas with acceptance in [0.6,0.85]: "
              "%s; tuner selected T=%.3g delta=%.3g acceptance %.3f",
              lambda, kappa, in_band.empty() ? "none" : in_band.c_str(),
              g.cells[g.best].assignment["kernels.0.T"].get<double>(), delta_of(g.cells[g.best]), best_acc)};
}

// 9. Cauchit: Hug-and-Hop wins on X, HMC wins on ℓ (per iteration).
Verdict cauchit_ordering() {
  json base = resolve_config(json::object(), {});
  base["model"] = {{"name", "cauchit"}, {"N", 500}, {"M", 10}, {"tau", 1.0}, {"data_seed", 909}};
  base["iterations"] = 50000;
  base["burn_in"] = 0.2;

  // Both samplers are tuned on the cauchit posterior with pilot chains.
  const CauchitData data = simulate_cauchit(500, 10, 1.0, 909);
  const CauchitPosterior post(data, 1.0);
  auto tune = [&](const std::vector<json>& grid_kernels, std::uint64_t seed) {
    double best = -1.0;
    json chosen;
    for (const auto& ks : grid_kernels) {
      std::vector<KernelSpec> kernels;
      for (std::size_t i = 0; i < ks.size(); ++i) kernels.push_back(make_kernel(ks[i], 10));
      ChainOptions opt;
      opt.iterations = 10000;
      opt.burn_in = 0.2;
      opt.seed = seed;
      opt.start = Vector::Zero(10);
      const RunSummary s = run_chain(post, kernels, opt).summary;
      // Cost is counted in gradient evaluations per iteration (L for HMC,
      // B + 1 for Hug then Hop): a deterministic stand-in for wall time,
      // which on a shared core made the tuned HMC length vary run to run.
      const double grads = ks[0].at("kernel") == "hmc" ? ks[0].at("L").get<double>()
                                                       : ks[0].at("B").get<double>() + 1.0;
      const double score =
          s.degenerate ? 0.0 : std::sqrt(s.min_ess_x_per_1000 * s.ess_logpi_per_1000) / grads;
      if (score > best) {
        best = score;
        chosen = ks;
      }
    }
    return chosen;
  };
  std::vector<json> hmc_grid, hh_grid;
  for (int L : {1, 2, 4, 6, 8, 10})
    for (double d : {0.03, 0.05, 0.075, 0.1, 0.15, 0.2, 0.3, 0.45})
      hmc_grid.push_back(json::array({{{"kernel", "hmc"}, {"L", L}, {"delta", d}}}));
  for (int B : {3, 5, 8})
    for (double T : {0.3, 0.6, 1.0})
      for (double lambda : {2, 6, 12})
        for (double kappa : {0.25, 0.6, 1.0})
          hh_grid.push_back(json::array({{{"kernel", "hug"}, {"T", T}, {"B", B}},
                                         {{"kernel", "hop"}, {"lambda", lambda}, {"kappa", kappa}}}));
  const json hmc = tune(hmc_grid, 911);
  const json hh = tune(hh_grid, 912);

  auto final_run = [&](const json& kernels, std::uint64_t seed) {
    json c = base;
    c["kernels"] = kernels;
    c["seed"] = seed;
    return run_model(c).chain.summary;
  };
  const RunSummary s_hmc = final_run(hmc, 913);
  const RunSummary s_hh = final_run(hh, 914);
  const bool x_ok = s_hh.min_ess_x_per_1000 > s_hmc.min_ess_x_per_1000;
  const bool l_ok = s_hmc.ess_logpi_per_1000 > s_hh.ess_logpi_per_1000;
  return {x_ok && l_ok,
          fmt("tuned HMC %s; tuned Hug+Hop %s; per 1000 iterations minESS(X): HH %.0f vs HMC %.0f; ESS(l): HMC %.0f vs HH "
              "%.0f",
              hmc.dump().c_str(), hh.dump().c_str(), s_hh.min_ess_x_per_1000, s_hmc.min_ess_x_per_1000,
              s_hmc.ess_logpi_per_1000, s_hh.ess_logpi_per_1000)};
}

// 10. Gradients and Hessians of every target and model against finite differences.
Verdict derivative_oracles() {
  Rng rng(1010);
  std::vector<NamedTarget> all = comparison_targets(25);
  all.push_back({"Cauchit", std::make_shared<CauchitPosterior>(simulate_cauchit(500, 10, 1.0, 1), 1.0)});
  all.push_back({"Rasch", std::make_shared<RaschPosterior>(simulate_rasch(10, 100, 1.0, 2), 1.0)});
  const SpatialProbitData sp = simulate_spatial(4, 4, std::log(2.0), std::log(0.2), 3);
  all.push_back({"SpatialZ", std::make_shared<SpatialConditional>(spatial_conditional_target(std::log(2.0), std::log(0.2), sp))});
  double worst_g = 0.0, worst_h = 0.0;
  std::string worst_name;
  for (const auto& [label, t] : all) {
    for (int i = 0; i < 20; ++i) {
      const Vector x = t->has_exact_sampler() ? t->sample_one(rng) : Vector(0.5 * standard_normal(rng, t->dim()));
      const double eg = testutil::rel_err(t->gradient(x), testutil::fd_gradient(*t, x));
      const double eh = testutil::rel_err(t->hessian(x), testutil::fd_hessian(*t, x));
      if (eg > worst_g || eh > worst_h) worst_name = label;
      worst_g = std::max(worst_g, eg);
      worst_h = std::max(worst_h, eh);
    }
  }
  return {worst_g < 1e-5 && worst_h < 1e-4,
          fmt("%zu targets x 20 points: worst gradient rel err %.2e (< 1e-5), Hessian %.2e (< 1e-4), worst at %s",
              all.size(), worst_g, worst_h, worst_name.c_str())};
}

// 11. Δℓ along a long Hug trajectory stays bounded.
Verdict stability_traces() {
  const std::vector<std::pair<std::string, json>> specs = {
      {"LG-U", {{"target", "LG"}, {"scales", "U"}, {"dim", 25}}},
      {"LG-L", {{"target", "LG"}, {"scales", "L"}, {"dim", 25}}},
      {"Gaussian-U", {{"target", "gaussian"}, {"scales", "U"}, {"dim", 25}}},
      {"Gaussian-L", {{"target", "gaussian"}, {"scales", "L"}, {"dim", 25}}}};
  bool ok = true;
  std::string detail;
  std::uint64_t seed = 1111;
  for (const auto& [label, spec] : specs) {
    const TargetPtr t = make_target(spec);
    const StabilityTrace tr = stability_experiment(*t, 0.1, 10000, seed++);
    const double early = std::max(tr.delta_l.head(100).cwiseAbs().maxCoeff(), 1e-8);
    const double all = tr.delta_l.cwiseAbs().maxCoeff();
    const bool pass = !tr.diverged && tr.delta_l.size() == 10000 && all <= 10.0 * early;
    ok = ok && pass;
    detail += fmt("%s max|dl| %.3g (first 100: %.3g); ", label.c_str(), all, early);
  }
  return {ok, detail + "bound 10x early window"};
}

// 12. ESS estimator on white noise and AR(1).
Verdict ess_estimator() {
  const long n = 100000;
  Rng rng(1212);
  const Vector w = standard_normal(rng, n);
  Vector ar(n);
  ar[0] = 0.0;
  const Vector e = standard_normal(rng, n);
  for (long i = 1; i < n; ++i) ar[i] = 0.5 * ar[i - 1] + e[i];
  const double ew = ess(w), ea = ess(ar);
  const bool ok = std::abs(ew / n - 1.0) <= 0.05 && std::abs(ea / (n / 3.0) - 1.0) <= 0.10;
  return {ok, fmt("white noise %.0f (n=%ld, 5%%), AR(1) rho=0.5 %.0f vs n/3=%.0f (10%%)", ew, n, ea, n / 3.0)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"skew-reversibility", skew_reversibility},
      {"volume preservation", volume_preservation},
      {"Hug error O(delta^2) at fixed T", hug_error_scaling},
      {"HugHess single-bounce O(delta^3)", hessian_bounce_scaling},
      {"Hop limiting acceptance", hop_acceptance_limit},
      {"exactness on GaussianDiag", exactness},
      {"Hop dimensional robustness", hop_dimension_robustness},
      {"tuning bands", tuning_bands},
      {"cauchit ordering vs HMC", cauchit_ordering},
      {"gradient/Hessian oracles", derivative_oracles},
      {"stability traces", stability_traces},
      {"ESS estimator", ess_estimator},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !v.pass;
  }
  return failures;
}
