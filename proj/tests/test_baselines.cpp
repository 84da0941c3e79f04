#include <cmath>

#include "doctest.h"
#include "lfire/baselines.hpp"
#include "lfire/error.hpp"
#include "lfire/metrics.hpp"

using namespace lfire;

TEST_CASE("synthetic likelihood in one dimension") {
  Rng rng(1, 0);
  Eigen::MatrixXd sims(50, 1);
  for (int i = 0; i < 50; ++i) sims(i, 0) = 2.0 + 1.5 * rng.normal();
  double mean = sims.mean();
  double var = 0;
  for (int i = 0; i < 50; ++i) var += (sims(i, 0) - mean) * (sims(i, 0) - mean);
  var /= 49.0;
  const double x = 3.1;
  const double expect = -0.5 * std::log(2 * M_PI * var) - 0.5 * (x - mean) * (x - mean) / var;
  CHECK(std::fabs(synthetic_loglik(sims, Eigen::VectorXd::Constant(1, x)) - expect) < 1e-12);
  CHECK(std::fabs(synthetic_loglik(sims, Eigen::VectorXd::Constant(1, mean)) + 0.5 * std::log(2 * M_PI * var)) <
        1e-12);
  CHECK(fit_synthetic_likelihood(sims).jitter == 0.0);
}

TEST_CASE("synthetic likelihood jitter") {
  SUBCASE("identical simulations") {
    const Eigen::MatrixXd sims = Eigen::MatrixXd::Ones(10, 3);
    const SyntheticLikelihoodFit f = fit_synthetic_likelihood(sims);
    CHECK(f.jitter > 0.0);
    CHECK(std::isfinite(f.log_density(Eigen::VectorXd::Ones(3))));
  }
  SUBCASE("smallest sufficient member of the schedule") {
    Rng rng(2, 0);
    Eigen::MatrixXd sims(40, 3);
    for (int i = 0; i < 40; ++i) {
      const double a = rng.normal();
      sims.row(i) << a, 2.0 * a, rng.normal();
    }
    const SyntheticLikelihoodFit f = fit_synthetic_likelihood(sims);
    REQUIRE(f.jitter > 0.0);
    const Eigen::RowVectorXd mu = sims.colwise().mean();
    const Eigen::MatrixXd c = sims.rowwise() - mu;
    const Eigen::MatrixXd s = c.transpose() * c / 39.0;
    const double scale = s.diagonal().mean();
    auto ok = [&](double j) {
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s + j * Eigen::MatrixXd::Identity(3, 3));
      const auto ev = es.eigenvalues();
      return ev.minCoeff() > 0 && ev.maxCoeff() / ev.minCoeff() <= 1e12;
    };
    CHECK(ok(f.jitter));
    const double eps = f.jitter / scale;
    CHECK(std::fabs(std::log10(eps) - std::round(std::log10(eps))) < 1e-9);
    if (eps > 1.5e-6) CHECK_FALSE(ok(f.jitter / 10.0));
  }
  CHECK_THROWS_AS((void)fit_synthetic_likelihood(Eigen::MatrixXd::Ones(1, 2)), ConfigError);
}

TEST_CASE("abc selection") {
  Rng rng(3, 0);
  const int n = 10000;
  Eigen::MatrixXd th(n, 1), st(n, 2);
  for (int i = 0; i < n; ++i) {
    th(i, 0) = rng.uniform();
    st.row(i) << th(i, 0) + 0.1 * rng.normal(), 100.0 * rng.normal();
  }
  const Eigen::Vector2d obs(0.5, 0.0);
  AbcOptions rate;
  rate.rate = 0.02;
  const AbcResult r = abc_select(th, st, obs, rate);
  CHECK(r.accepted.rows() == 200);
  CHECK(r.acceptance_rate == doctest::Approx(0.02));
  CHECK((r.distances.array() <= r.threshold).all());
  // Brute-force distance of the first accepted row.
  const Eigen::RowVectorXd mu = st.colwise().mean();
  double best = 1e300;
  for (int i = 0; i < n; ++i) {
    double d = 0;
    for (int j = 0; j < 2; ++j) {
      const double sd = std::sqrt((st.col(j).array() - mu[j]).square().sum() / n);
      d += std::pow((st(i, j) - obs[j]) / sd, 2);
    }
    best = std::min(best, std::sqrt(d));
  }
  CHECK(r.distances[0] == doctest::Approx(best).epsilon(1e-12));

  AbcOptions all;
  all.threshold = std::numeric_limits<double>::infinity();
  const AbcResult a = abc_select(th, st, obs, all);
  CHECK(a.accepted.rows() == n);
  CHECK(a.accepted.mean() == doctest::Approx(0.5).epsilon(0.02));
  AbcOptions none;
  none.threshold = -1.0;
  CHECK_THROWS_AS((void)abc_select(th, st, obs, none), DegeneratePosterior);
  AbcOptions both = rate;
  both.threshold = 1.0;
  CHECK_THROWS_AS((void)abc_select(th, st, obs, both), ConfigError);
}

TEST_CASE("rejection abc on the arch model") {
  SummaryMapSpec s;
  s.base = BaseMap::Arch;
  const Model m = make_model(ArchModelSpec{}, s);
  Rng obs(4, 0);
  const Dataset x0 = simulate(m.simulator, Eigen::Vector2d(0.3, 0.7), obs);
  AbcOptions o;
  o.n_sims = 5000;
  o.rate = 0.02;
  Rng rng(5, 0);
  const AbcResult r = rejection_abc(m, x0, o, rng);
  CHECK(r.accepted.rows() == 100);
  CHECK(std::fabs(r.accepted.col(0).mean() - 0.3) < 0.3);
}

TEST_CASE("gaussian oracle") {
  const GaussianModelSpec spec;
  Eigen::VectorXd grid(2);
  grid << -25.0, 2.3;
  const GaussianOracle o = gaussian_true_posterior(1.0, spec, grid);
  CHECK(o.alpha2[1] == doctest::Approx(-1.0 / 18.0).epsilon(1e-12));
  CHECK(o.alpha2[1] == doctest::Approx(-0.05556).epsilon(1e-4));
  CHECK(o.alpha1[1] == doctest::Approx(0.25556).epsilon(1e-4));
  CHECK(o.posterior.density[0] == 0.0);

  const Eigen::VectorXd fine = cell_centered_axis(-20.0, 20.0, 40000);
  for (double x0 : {-19.0, 0.0, 2.3, 12.0}) {
    const GaussianOracle g = gaussian_true_posterior(x0, spec, fine);
    double integral = 0;
    for (Eigen::Index i = 0; i < fine.size(); ++i) {
      integral += std::exp(g.alpha0[i] + g.alpha1[i] * x0 + g.alpha2[i] * x0 * x0) * 1e-3;
    }
    CHECK(std::fabs(integral - 1.0) < 1e-6);
  }
}

TEST_CASE("gauss-hermite rule") {
  const GaussHermite gh = gauss_hermite(20);
  // Moments of N(0,1) through x = sqrt(2) t.
  auto moment = [&](int k) {
    double acc = 0;
    for (Eigen::Index i = 0; i < gh.nodes.size(); ++i) acc += gh.weights[i] * std::pow(std::sqrt(2.0) * gh.nodes[i], k);
    return acc / std::sqrt(M_PI);
  };
  CHECK(moment(0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(moment(2) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(moment(4) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(moment(6) == doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("arch exact likelihood") {
  ArchModelSpec spec;
  Rng rng(6, 0);
  const Eigen::VectorXd y = simulate_arch(spec, 0.3, 0.7, rng);
  const GaussHermite g64 = gauss_hermite(64), g128 = gauss_hermite(128), g256 = gauss_hermite(256);
  // The e(0) integrand has branch points at +-i sqrt(0.2 / theta2): doubling
  // the order converges to 1e-8 only while theta2 stays small, and merely
  // improves the error elsewhere.
  for (double t1 : {-0.9, 0.0, 0.3, 0.95}) {
    for (double t2 : {0.01, 0.05}) {
      CHECK(std::fabs(arch_log_likelihood(y, t1, t2, g64) - arch_log_likelihood(y, t1, t2, g128)) < 1e-8);
    }
    for (double t2 : {0.3, 0.7, 0.99}) {
      const double ref = arch_log_likelihood(y, t1, t2, g256);
      CHECK(std::fabs(arch_log_likelihood(y, t1, t2, g128) - ref) < std::fabs(arch_log_likelihood(y, t1, t2, g64) - ref));
      CHECK(std::fabs(arch_log_likelihood(y, t1, t2, g64) - ref) < 1e-3);
    }
  }
  // theta2 = 0: the latent drops out and the likelihood is Gaussian.
  double direct = 0;
  double prev = 0;
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    const double r = y[t] - 0.3 * prev;
    direct += -0.5 * std::log(2 * M_PI * 0.2) - r * r / 0.4;
    prev = y[t];
  }
  CHECK(arch_log_likelihood(y, 0.3, 0.0, g64) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("arch exact posterior concentrates near the truth") {
  ArchModelSpec spec;
  spec.T = 1000;
  const GridAxes axes{cell_centered_axis(-1, 1, 50), cell_centered_axis(0, 1, 50)};
  int near = 0;
  for (int s = 0; s < 5; ++s) {
    Rng rng(7 + static_cast<std::uint64_t>(s), 0);
    const Eigen::VectorXd y = simulate_arch(spec, 0.3, 0.7, rng);
    const GridPosterior gp = arch_true_posterior(y, axes, spec);
    CHECK(std::fabs(gp.density.sum() * gp.cell - 1.0) < 1e-9);
    Eigen::Index best = 0;
    gp.density.maxCoeff(&best);
    const Eigen::MatrixXd nodes = gp.nodes();
    near += std::fabs(nodes(best, 0) - 0.3) <= 2 * 0.04 + 1e-12 && std::fabs(nodes(best, 1) - 0.7) <= 2 * 0.02 + 1e-12;
  }
  CHECK(near >= 4);
}

TEST_CASE("synthetic likelihood posterior for the gaussian model tracks the truth") {
  SummaryMapSpec s;
  s.base = BaseMap::GaussianPoly;
  const Model m = make_model(GaussianModelSpec{}, s);
  const Eigen::VectorXd axis = cell_centered_axis(-20.0, 20.0, 100);
  const GridPosterior sl = synthetic_posterior_on_grid(m, Dataset::Constant(1, 1, 2.3), {axis}, 500, 8, 1);
  CHECK(std::fabs(sl.density.sum() * sl.cell - 1.0) < 1e-9);
  const GaussianOracle truth = gaussian_true_posterior(2.3, GaussianModelSpec{}, axis);
  CHECK(skl(sl, truth.posterior) < 0.1);
}
