#include "hughop/baselines.hpp"
#include "hughop/diagnostics.hpp"
#include "hughop/hug.hpp"
#include "hughop/targets.hpp"
#include "../test_util.hpp"

#include <doctest.h>

#include <functional>

using namespace hughop;
using doctest::Approx;

namespace {

// Means within 3 MC standard errors, variances within 5%.
void check_moments(const Matrix& xs, const Vector& scales) {
  for (int j = 0; j < xs.cols(); ++j) {
    const Vector c = xs.col(j);
    const double m = c.mean();
    const double var = (c.array() - m).square().mean();
    CAPTURE(j);
    CHECK(std::abs(m) <= 3 * std::sqrt(var / ess(c)));
    CHECK(std::abs(var / (scales[j] * scales[j]) - 1.0) <= 0.05);
  }
}

Matrix run(const Target& t, long n, std::uint64_t seed, const std::function<void(ChainState&, Rng&)>& step) {
  Rng rng(seed);
  ChainState s = ChainState::at(t, t.sample_one(rng));
  Matrix xs(n, t.dim());
  for (long i = 0; i < n; ++i) {
    step(s, rng);
    xs.row(i) = s.x.transpose();
  }
  return xs;
}

}  // namespace

TEST_CASE("leapfrog limits and reversibility") {
  const LogisticGaussian t(5.0, linear_scales(4));
  Rng rng(1);
  const Vector x = t.sample_one(rng), p = standard_normal(rng, 4);
  HmcParams tiny;
  tiny.L = 1;
  tiny.delta = 1e-8;
  const PhasePoint a = leapfrog(t, x, p, tiny);
  CHECK((a.x - x).norm() < 1e-7);
  CHECK((a.p - p).norm() < 1e-7);

  HmcParams hp;
  hp.L = 20;
  hp.delta = 0.2;
  const PhasePoint f = leapfrog(t, x, p, hp);
  const PhasePoint b = leapfrog(t, f.x, -f.p, hp);
  CHECK((b.x - x).norm() < 1e-10);
  CHECK((b.p + p).norm() < 1e-10);

  hp.with_mass(testutil::random_spd(rng, 4));
  const PhasePoint fm = leapfrog(t, x, p, hp);
  const PhasePoint bm = leapfrog(t, fm.x, -fm.p, hp);
  CHECK((bm.x - x).norm() < 1e-10);
}

TEST_CASE("leapfrog energy error is second order") {
  const GaussianDiag t(unit_scales(1));
  const Vector x{{1.0}}, p{{0.0}};
  std::vector<double> deltas, errs;
  for (double d : {0.2, 0.1, 0.05, 0.025}) {
    HmcParams hp;
    hp.delta = d;
    hp.L = static_cast<int>(std::lround(1.0 / d));
    const PhasePoint e = leapfrog(t, x, p, hp);
    deltas.push_back(d);
    errs.push_back(std::abs(hamiltonian(t, e.x, e.p, hp) - hamiltonian(t, x, p, hp)));
  }
  CHECK(testutil::loglog_slope(deltas, errs) == Approx(2.0).epsilon(0.1));
}

TEST_CASE("zero leapfrog steps always accept") {
  const GaussianDiag t(unit_scales(3));
  Rng rng(2);
  ChainState s = ChainState::at(t, t.sample_one(rng));
  HmcParams hp;
  hp.L = 0;
  const HmcOutcome o = hmc_step(t, s, hp, rng);
  CHECK(o.acceptance_probability() == 1.0);
  CHECK(o.proposal == s.x);
}

TEST_CASE("HMC, RWM and MALA leave a Gaussian invariant") {
  const GaussianDiag t(linear_scales(5));
  HmcParams hp;
  hp.L = 10;
  hp.delta = 0.1;
  check_moments(run(t, 100000, 3, [&](ChainState& s, Rng& r) { hmc_step(t, s, hp, r); }), t.scales());
  const RwmParams rp = RwmParams::isotropic(2.0);
  check_moments(run(t, 200000, 4, [&](ChainState& s, Rng& r) { rwm_step(t, s, rp, r); }), t.scales());
  const MalaParams mp{0.8};
  check_moments(run(t, 100000, 5, [&](ChainState& s, Rng& r) { mala_step(t, s, mp, r); }), t.scales());
}

TEST_CASE("HMC on quartic tails fails where Hug stays finite") {
  const QuarticGaussian t(3.0, unit_scales(2));
  const Vector x{{6.0, 6.0}};
  HmcParams hp;
  hp.L = 10;
  hp.delta = 0.3;
  const Vector p{{0.5, -0.5}};
  bool unstable = false;
  try {
    const PhasePoint e = leapfrog(t, x, p, hp);
    unstable = !std::isfinite(hamiltonian(t, e.x, e.p, hp)) ||
               std::abs(hamiltonian(t, e.x, e.p, hp) - hamiltonian(t, x, p, hp)) > 1e6;
  } catch (const TrajectoryError&) {
    unstable = true;
  }
  CHECK(unstable);
  Rng rng(6);
  ChainState s = ChainState::at(t, x);
  const HugOutcome o = hug_step(t, s, HugParams::plain(1.0, 10), rng);
  CHECK(!o.failed);
  CHECK(o.proposal.allFinite());
}

TEST_CASE("RWM acceptance and symmetric ratio") {
  const GaussianDiag t(unit_scales(1));
  Rng rng(7);
  ChainState s = ChainState::at(t, t.sample_one(rng));
  const RwmParams rp = RwmParams::isotropic(2.4);
  double acc = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double before = s.log_density;
    const RwmOutcome o = rwm_step(t, s, rp, rng);
    CHECK(o.log_alpha == Approx(t.log_density(o.proposal) - before).epsilon(1e-12));
    acc += o.acceptance_probability();
  }
  acc /= n;
  CHECK(acc >= 0.35);
  CHECK(acc <= 0.55);
}

TEST_CASE("Hessian RWM on a Gaussian equals fixed-covariance RWM") {
  const GaussianDiag t(linear_scales(4));
  const Matrix S = t.scales().array().square().matrix().asDiagonal();
  const RwmParams hess = RwmParams::with_hessian(0.8);
  const RwmParams fixed = RwmParams::with_fixed(0.8, S);
  const Matrix a = run(t, 2000, 8, [&](ChainState& s, Rng& r) { rwm_step(t, s, hess, r); });
  const Matrix b = run(t, 2000, 8, [&](ChainState& s, Rng& r) { rwm_step(t, s, fixed, r); });
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Hessian RWM leaves a non-Gaussian target invariant in mean") {
  const LogisticGaussian t(5.0, unit_scales(3));
  const Matrix xs = run(t, 100000, 9, [&](ChainState& s, Rng& r) { rwm_step(t, s, RwmParams::with_hessian(1.0), r); });
  for (int j = 0; j < 3; ++j) {
    const Vector c = xs.col(j);
    const double var = (c.array() - c.mean()).square().mean();
    CHECK(std::abs(c.mean()) <= 3 * std::sqrt(var / ess(c)));
  }
}

TEST_CASE("MALA ratio antisymmetry and small-step limit") {
  const LogisticGaussian t(5.0, linear_scales(3));
  Rng rng(10);
  const MalaParams mp{0.7};
  for (int i = 0; i < 50; ++i) {
    const ChainState a = ChainState::at(t, t.sample_one(rng)), b = ChainState::at(t, t.sample_one(rng));
    CHECK(mala_log_ratio(a, b, mp) == Approx(-mala_log_ratio(b, a, mp)).epsilon(1e-10));
  }
  const GaussianDiag g(unit_scales(5));
  ChainState s = ChainState::at(g, g.sample_one(rng));
  double acc = 0;
  for (int i = 0; i < 5000; ++i) acc += mala_step(g, s, MalaParams{1e-3}, rng).acceptance_probability();
  CHECK(acc / 5000 > 0.999);
}

TEST_CASE("baseline parameter validation") {
  HmcParams hp;
  hp.delta = 0.0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  CHECK_THROWS_AS(MalaParams{0.0}.validate(), ConfigError);
  RwmParams rp = RwmParams::isotropic(1.0);
  rp.local = LocalCovariance::Fixed;
  CHECK_THROWS_AS(rp.validate(), ConfigError);
}
