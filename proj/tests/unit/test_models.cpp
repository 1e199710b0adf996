#include "hughop/diagnostics.hpp"
#include "hughop/models.hpp"
#include "hughop/normal.hpp"
#include "../test_util.hpp"

#include <doctest.h>

#include <filesystem>

using namespace hughop;
using doctest::Approx;
using testutil::fd_gradient;
using testutil::fd_hessian;
using testutil::rel_err;

TEST_CASE("cauchit inverse link") {
  CHECK(cauchit_inverse_link(0.0) == 0.5);
  CHECK(cauchit_inverse_link(1.0) == Approx(0.75).epsilon(1e-15));
  CHECK(cauchit_inverse_link(-1e12) > 0.0);
  CHECK(cauchit_inverse_link(-3.0) == Approx(0.5 + std::atan(-3.0) / std::numbers::pi).epsilon(1e-14));
}

TEST_CASE("cauchit simulation with a zero coefficient vector") {
  const CauchitData d = simulate_cauchit(100000, 2, 1.0, 11, Vector::Zero(2));
  const double rate = (d.y.array() > 0).cast<double>().mean();
  CHECK(std::abs(rate - 0.5) < 0.01);
}

TEST_CASE("cauchit posterior") {
  const CauchitData d = simulate_cauchit(200, 5, 1.0, 12);
  const CauchitPosterior post(d, 1.0);
  CHECK(post.log_density(Vector::Zero(5)) == Approx(200 * std::log(0.5)));
  const Vector g0 = (2.0 / std::numbers::pi) * (d.X.transpose() * d.y);
  CHECK((post.gradient(Vector::Zero(5)) - g0).norm() < 1e-12 * (1 + g0.norm()));
  Rng rng(13);
  for (int i = 0; i < 20; ++i) {
    const Vector b = testutil::random_point(rng, 5);
    CHECK(rel_err(post.gradient(b), fd_gradient(post, b)) < 1e-5);
    CHECK(rel_err(post.hessian(b), fd_hessian(post, b)) < 1e-4);
  }
  CHECK(std::isfinite(post.log_density(Vector::Constant(5, 1e6))));
}

TEST_CASE("rasch posterior") {
  const RaschData d = simulate_rasch(6, 30, 1.0, 14);
  CHECK(d.true_beta[0] == 0.0);
  const RaschPosterior post(d, 1.0);
  CHECK(post.dim() == 5 + 30);
  CHECK(post.log_density(Vector::Zero(35)) == Approx(6 * 30 * std::log(0.5)));
  // At zero every observation contributes ±φ(0)/Φ(0) = ±0.7979.
  CHECK(inverse_mills(0.0) == Approx(0.7978845608));
  const Vector g = post.gradient(Vector::Zero(35));
  const Vector eta_grad = g.tail(30);
  for (int j = 0; j < 30; ++j) CHECK(eta_grad[j] == Approx(inverse_mills(0.0) * d.Y.col(j).sum()));
  Rng rng(15);
  for (int i = 0; i < 20; ++i) {
    const Vector th = testutil::random_point(rng, 35);
    CHECK(rel_err(post.gradient(th), fd_gradient(post, th)) < 1e-5);
    CHECK(rel_err(post.hessian(th), fd_hessian(post, th)) < 1e-4);
  }
  const RaschPosterior shifted(d, 1.0, 0.7);
  const Vector th = testutil::random_point(rng, 35);
  CHECK(shifted.log_density(th) != post.log_density(th));
}

TEST_CASE("extreme probit arguments stay finite") {
  CHECK(std::isfinite(log_normal_cdf(-38.0)));
  CHECK(log_normal_cdf(-38.0) == Approx(-0.5 * 38 * 38 - std::log(38.0 * std::sqrt(2 * std::numbers::pi))).epsilon(1e-3));
  CHECK(std::isfinite(inverse_mills(-38.0)));
  CHECK(inverse_mills(-38.0) == Approx(38.0).epsilon(1e-3));
  CHECK(std::isfinite(inverse_mills_derivative(-38.0)));
  CHECK(log_normal_cdf(0.0) == Approx(std::log(0.5)));
  CHECK(normal_cdf(1.0) == Approx(0.8413447461));
}

TEST_CASE("GP covariance") {
  const Matrix D = grid_distances(2, 2);
  CHECK(D(0, 3) == Approx(std::sqrt(2.0)));
  const GpCovariance c = gp_covariance(std::log(2.0), std::log(0.2), D);
  for (int g = 0; g < 4; ++g) CHECK(c.covariance(g, g) == Approx(2.0));
  CHECK(c.covariance(0, 1) == Approx(0.01348).epsilon(1e-3));
  CHECK(rel_err(c.factor.transpose() * c.factor, c.covariance) < 1e-12);
  const GpCovariance far = gp_covariance(0.0, -20.0, grid_distances(3, 3));
  CHECK((far.covariance - Matrix::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK_THROWS_AS(gp_covariance(0.0, 50.0, grid_distances(3, 3)), FactorizationError);
}

TEST_CASE("spatial conditional target") {
  const SpatialProbitData d = simulate_spatial(2, 2, std::log(2.0), std::log(0.2), 16);
  const SpatialConditional t = spatial_conditional_target(0.3, -0.5, d);
  CHECK(t.log_density(Vector::Zero(4)) == Approx(4 * std::log(0.5)));
  Rng rng(17);
  for (int i = 0; i < 20; ++i) {
    const Vector z = testutil::random_point(rng, 4);
    CHECK(rel_err(t.gradient(z), fd_gradient(t, z)) < 1e-5);
    CHECK(rel_err(t.hessian(z), fd_hessian(t, z)) < 1e-4);
  }
}

TEST_CASE("zero theta step leaves theta fixed while Z moves") {
  const SpatialProbitData d = simulate_spatial(3, 3, 0.0, 0.0, 18);
  SpatialState s{Vector::Zero(9), 0.2, -0.1, {}};
  GibbsOptions opt;
  opt.theta_step = 0.0;
  Rng rng(19);
  const SpatialInnerKernel k = HugHopInner{HugParams::plain(1.0, 5), HopParams::with_kappa(1.0, 0.5)};
  for (int i = 0; i < 50; ++i) gibbs_step(d, s, k, opt, rng);
  CHECK(s.rho == 0.2);
  CHECK(s.psi == -0.1);
  CHECK(s.z.norm() > 0.0);
}

TEST_CASE("prior-only Gibbs recovers the prior") {
  const SpatialProbitData d = simulate_spatial(4, 4, 0.0, 0.0, 20);
  SpatialState s{Vector::Zero(16), 0.0, 0.0, {}};
  GibbsOptions opt;
  opt.use_likelihood = false;
  opt.theta_step = 1.5;
  Rng rng(21);
  const SpatialInnerKernel k = HugHopInner{HugParams::plain(2.0, 5), HopParams::with_kappa(2.0, 0.5)};
  const int n = 20000;
  Matrix zs(n, 16);
  Vector rho(n), psi(n);
  for (int i = 0; i < n; ++i) {
    gibbs_step(d, s, k, opt, rng);
    zs.row(i) = s.z.transpose();
    rho[i] = s.rho;
    psi[i] = s.psi;
  }
  for (int j = 0; j < 16; ++j) {
    const Vector c = zs.col(j);
    CHECK((c.array() - c.mean()).square().mean() == Approx(1.0).epsilon(0.05));
  }
  for (const Vector* c : {&rho, &psi}) {
    const double m = c->mean();
    const double var = (c->array() - m).square().mean();
    CHECK(std::abs(m) <= 3 * std::sqrt(var / ess(*c)));
    CHECK(var == Approx(1.0).epsilon(0.15));
  }
}

TEST_CASE("both inner kernels target the same joint posterior") {
  const SpatialProbitData d = simulate_spatial(2, 2, std::log(2.0), std::log(0.2), 22);
  GibbsOptions opt;
  opt.theta_step = 0.8;
  auto moments = [&](const SpatialInnerKernel& k, std::uint64_t seed, Vector& se) {
    SpatialState s{Vector::Zero(4), 0.0, 0.0, {}};
    Rng rng(seed);
    const int n = 60000;
    Matrix zs(n, 4);
    for (int i = 0; i < n; ++i) {
      gibbs_step(d, s, k, opt, rng);
      zs.row(i) = s.z.transpose();
    }
    Vector m(4);
    se.resize(4);
    for (int j = 0; j < 4; ++j) {
      const Vector c = zs.col(j).tail(n / 2);
      m[j] = c.mean();
      se[j] = std::sqrt((c.array() - m[j]).square().mean() / ess(c));
    }
    return m;
  };
  HmcParams hp;
  hp.L = 5;
  hp.delta = 0.25;
  Vector se1, se2;
  const Vector m1 = moments(HugHopInner{HugParams::plain(1.0, 5), HopParams::with_kappa(1.0, 0.5)}, 23, se1);
  const Vector m2 = moments(hp, 24, se2);
  for (int j = 0; j < 4; ++j) CHECK(std::abs(m1[j] - m2[j]) <= 4 * std::hypot(se1[j], se2[j]));
}

TEST_CASE("8x8 calibration: the 95% interval for rho covers the truth") {
  int covered = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const SpatialProbitData d = simulate_spatial(8, 8, std::log(2.0), std::log(0.2), 1000 + rep);
    SpatialState s{Vector::Zero(64), 0.0, 0.0, {}};
    GibbsOptions opt;
    opt.theta_step = 0.4;
    Rng rng(2000 + rep);
    const SpatialInnerKernel k = HugHopInner{HugParams::plain(1.0, 5), HopParams::with_kappa(2.0, 0.5)};
    const int burn = 2000, n = 6000;
    std::vector<double> rho;
    for (int i = 0; i < burn + n; ++i) {
      gibbs_step(d, s, k, opt, rng);
      if (i >= burn) rho.push_back(s.rho);
    }
    std::sort(rho.begin(), rho.end());
    const double lo = rho[static_cast<std::size_t>(0.025 * n)], hi = rho[static_cast<std::size_t>(0.975 * n)];
    covered += lo <= std::log(2.0) && std::log(2.0) <= hi;
  }
  CHECK(covered >= 8);
}

TEST_CASE("dataset round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "hughop_dataset_test";
  std::filesystem::remove_all(dir);
  const CauchitData c = simulate_cauchit(20, 3, 1.0, 25);
  write_dataset(c, 1.0, dir / "c");
  const CauchitData c2 = read_cauchit_dataset(dir / "c");
  CHECK((c2.X - c.X).norm() < 1e-12);
  CHECK(c2.y == c.y);
  CHECK(c2.seed == 25);
  const RaschData r = simulate_rasch(4, 7, 1.0, 26);
  write_dataset(r, 1.0, dir / "r");
  CHECK(read_rasch_dataset(dir / "r").Y == r.Y);
  const SpatialProbitData s = simulate_spatial(3, 2, 0.0, 0.0, 27);
  write_dataset(s, 1.0, dir / "s");
  const SpatialProbitData s2 = read_spatial_dataset(dir / "s");
  CHECK(s2.rows == 3);
  CHECK(s2.cols == 2);
  CHECK(s2.y == s.y);
  CHECK((s2.distance - s.distance).norm() < 1e-12);
  CHECK_THROWS_AS(read_rasch_dataset(dir / "missing"), Error);
  std::filesystem::remove_all(dir);
}
