#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lfire/error.hpp"
#include "lfire/summaries.hpp"

using namespace lfire;

namespace {

// Brute-force autocovariance with divisor n.
double brute_acov(const Eigen::VectorXd& x, int lag) {
  double m = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) m += x[i];
  m /= static_cast<double>(x.size());
  double s = 0;
  for (Eigen::Index i = 0; i + lag < x.size(); ++i) s += (x[i] - m) * (x[i + lag] - m);
  return s / static_cast<double>(x.size());
}

}  // namespace

TEST_CASE("autocorrelation basics") {
  Eigen::VectorXd alt(100);
  for (int i = 0; i < 100; ++i) alt[i] = i % 2 == 0 ? 1.0 : -1.0;
  CHECK(autocorrelation(alt, 0) == doctest::Approx(1.0));
  CHECK(autocorrelation(alt, 1) == doctest::Approx(-0.99).epsilon(1e-9));
  CHECK_THROWS_AS((void)autocorrelation(Eigen::VectorXd::Constant(10, 2.0), 1), DegenerateInput);
}

TEST_CASE("white-noise lag-1 autocorrelation is small in most seeds") {
  int inside = 0;
  for (int seed = 0; seed < 200; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed), 99);
    Eigen::VectorXd x(10000);
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
    inside += std::fabs(autocorrelation(x, 1)) < 3.0 / 100.0;
  }
  CHECK(inside >= 198);
}

TEST_CASE("arch summaries: dimension, constant and moments") {
  Rng rng(1, 1);
  Eigen::VectorXd x(5000);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
  const SummaryVector s = arch_summaries(x);
  CHECK(s.size() == 23);
  CHECK(s.names.size() == 23);
  CHECK(s.values[22] == 1.0);
  CHECK(std::fabs(s.values[20]) < 4.0 / std::sqrt(5000.0));
  CHECK(s.values[21] == doctest::Approx(1.0).epsilon(0.06));
  // pairwise block: rho_k rho_k' for k >= k'
  CHECK(s.values[5] == doctest::Approx(s.values[0] * s.values[0]));
  CHECK(s.values[6] == doctest::Approx(s.values[1] * s.values[0]));
  CHECK(s.values[19] == doctest::Approx(s.values[4] * s.values[4]));

  SummaryMap with_noise({BaseMap::Arch, Expansion::None, 15});
  CHECK(with_noise.dimension() == 38);
  SummaryMap plain({BaseMap::Arch, Expansion::None, 0});
  CHECK(plain.dimension() == 23);
  CHECK(plain.constant_column() == 22);
  Rng noise_a(5, 5), noise_b(5, 5);
  const Dataset d = x.head(100).transpose();
  const Eigen::VectorXd a = with_noise(d, &noise_a);
  const Eigen::VectorXd b = with_noise(d, &noise_b);
  CHECK(a == b);
  CHECK(a.head(23) == plain(d));
  CHECK_THROWS_AS((void)with_noise(d), ConfigError);
}

TEST_CASE("ricker wood summaries") {
  Rng rng(2, 2);
  Eigen::VectorXd obs(50), y(50);
  for (int i = 0; i < 50; ++i) {
    obs[i] = static_cast<double>(rng.poisson(8.0));
    y[i] = static_cast<double>(rng.poisson(6.0));
  }
  const SummaryVector s = ricker_wood_summaries(y, obs);
  CHECK(s.size() == 13);
  CHECK(s.values[0] == doctest::Approx(y.mean()));
  CHECK(s.values[1] == static_cast<double>((y.array() == 0.0).count()));
  for (int lag = 1; lag <= 5; ++lag) CHECK(std::fabs(s.values[1 + lag] - brute_acov(y, lag)) < 1e-12);

  // Cubic block: normal equations on the sorted differences.
  Eigen::VectorXd d = y.tail(49) - y.head(49), d0 = obs.tail(49) - obs.head(49);
  std::sort(d.data(), d.data() + 49);
  std::sort(d0.data(), d0.data() + 49);
  Eigen::MatrixXd X(49, 4);
  for (int i = 0; i < 49; ++i) X.row(i) << 1.0, d0[i], d0[i] * d0[i], d0[i] * d0[i] * d0[i];
  const Eigen::VectorXd cubic = (X.transpose() * X).ldlt().solve(X.transpose() * d);
  for (int j = 0; j < 4; ++j) CHECK(s.values[7 + j] == doctest::Approx(cubic[j]).epsilon(1e-8));

  // All-zero series: count and mean are defined, the power regression is not.
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(50);
  CHECK(static_cast<double>((zero.array() == 0.0).count()) == 50.0);
  try {
    (void)ricker_wood_summaries(zero, obs);
    FAIL("expected degenerate input");
  } catch (const DegenerateInput& e) {
    CHECK(std::string(e.what()).find("power") != std::string::npos);
  }
  CHECK_THROWS_AS((void)ricker_wood_summaries(y, Eigen::VectorXd::Constant(50, 3.0)), DegenerateInput);

  SummaryMap map({BaseMap::RickerWood, Expansion::Pairwise, 0}, Dataset(obs.transpose()));
  CHECK(map.dimension() == 105);
  CHECK(map.uses_reference());
  CHECK(map.constant_column() == 104);
}

TEST_CASE("lorenz hakkarainen summaries") {
  const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(40, 161, 2.5);
  const SummaryVector c = lorenz_hakkarainen_summaries(flat);
  CHECK(c.size() == 6);
  CHECK(c.values[0] == doctest::Approx(2.5));
  for (int j = 1; j < 6; ++j) CHECK(c.values[j] == doctest::Approx(0.0));

  Rng rng(3, 3);
  const int K = 7, L = 30;
  Eigen::MatrixXd tr(K, L);
  for (int k = 0; k < K; ++k)
    for (int t = 0; t < L; ++t) tr(k, t) = rng.normal() + 0.1 * k;
  // brute-force double loop
  double acc[6] = {};
  for (int k = 0; k < K; ++k) {
    const int km = (k + K - 1) % K, kp = (k + 1) % K;
    double mk = 0, mm = 0, mp = 0;
    for (int t = 0; t < L; ++t) {
      mk += tr(k, t);
      mm += tr(km, t);
      mp += tr(kp, t);
    }
    mk /= L;
    mm /= L;
    mp /= L;
    acc[0] += mk;
    for (int t = 0; t < L; ++t) {
      acc[1] += (tr(k, t) - mk) * (tr(k, t) - mk) / L;
      acc[3] += (tr(k, t) - mk) * (tr(kp, t) - mp) / L;
      if (t + 1 < L) {
        acc[2] += (tr(k, t) - mk) * (tr(k, t + 1) - mk) / L;
        acc[4] += (tr(k, t) - mk) * (tr(km, t + 1) - mm) / L;
        acc[5] += (tr(k, t) - mk) * (tr(kp, t + 1) - mp) / L;
      }
    }
  }
  const SummaryVector s = lorenz_hakkarainen_summaries(tr);
  for (int j = 0; j < 6; ++j) CHECK(std::fabs(s.values[j] - acc[j] / K) < 1e-10);

  tr(2, 5) = std::nan("");
  CHECK_THROWS_AS((void)lorenz_hakkarainen_summaries(tr), Divergence);
}

TEST_CASE("pairwise expansion ordering and dimension") {
  SummaryVector ab{Eigen::Vector2d(2.0, 3.0), {"a", "b"}};
  const SummaryVector e = expand_pairwise(ab);
  CHECK(e.size() == 6);
  Eigen::VectorXd expect(6);
  expect << 2, 3, 4, 6, 9, 1;
  CHECK(e.values == expect);
  CHECK(e.names[3] == "b*a");

  SummaryVector d13{Eigen::VectorXd::Ones(13), std::vector<std::string>(13, "x")};
  CHECK(expand_pairwise(d13).size() == 105);
  SummaryVector empty{Eigen::VectorXd(0), {}};
  CHECK(expand_pairwise(empty).size() == 1);
  CHECK(expand_pairwise(empty).values[0] == 1.0);
}

TEST_CASE("pairwise expansion commutes with permutations") {
  Rng rng(4, 4);
  const int d = 5;
  SummaryVector v{Eigen::VectorXd(d), {"a", "b", "c", "d", "e"}};
  for (int i = 0; i < d; ++i) v.values[i] = rng.normal();
  const int perm[d] = {3, 0, 4, 1, 2};
  SummaryVector pv = v;
  for (int i = 0; i < d; ++i) pv.values[i] = v.values[perm[i]];
  const SummaryVector e = expand_pairwise(v), pe = expand_pairwise(pv);
  // product (k, k') of the permuted input equals product (perm k, perm k') of the original
  auto idx = [d](int k, int kk) {
    if (kk > k) std::swap(k, kk);
    return d + k * (k + 1) / 2 + kk;
  };
  for (int k = 0; k < d; ++k)
    for (int kk = 0; kk <= k; ++kk) CHECK(pe.values[idx(k, kk)] == e.values[idx(perm[k], perm[kk])]);
}

TEST_CASE("polynomial and square expansions") {
  CHECK(polynomial_summaries(1.3, 9).size() == 10);
  const SummaryVector z = polynomial_summaries(0.0, 9);
  CHECK(z.values[0] == 1.0);
  CHECK(z.values.tail(9).isZero());
  CHECK(polynomial_summaries(2.0, 3).values == Eigen::Vector4d(1, 2, 4, 8));

  SummaryVector v{Eigen::Vector2d(2.0, -3.0), {"a", "b"}};
  Eigen::VectorXd expect(5);
  expect << 2, -3, 4, 9, 1;
  CHECK(cell_square_expand(v).values == expect);
  SummaryVector big{Eigen::VectorXd::Ones(145), std::vector<std::string>(145, "h")};
  CHECK(cell_square_expand(big).size() == 291);
  CHECK(cell_square_expand(SummaryVector{Eigen::VectorXd(0), {}}).size() == 1);

  SummaryMap ext({BaseMap::ExternalMatrix, Expansion::Square, 0, 9, 145});
  CHECK(ext.dimension() == 291);
  CHECK(ext.constant_column() == 290);
}

TEST_CASE("summary map dimension is stable across datasets") {
  SummaryMap map({BaseMap::LorenzHakkarainen, Expansion::Pairwise, 0});
  CHECK(map.dimension() == 28);
  LorenzModelSpec spec;
  spec.initial_state = lorenz_default_initial_state(40, 10, 0.025);
  Rng rng(1, 1);
  for (int r = 0; r < 3; ++r) {
    const Eigen::VectorXd psi = map(simulate_lorenz(spec, 2.0, 0.1, rng));
    CHECK(psi.size() == 28);
    CHECK(psi[27] == 1.0);
  }
  CHECK(map.raw_dimension() == 6);
  SummaryMap gp({BaseMap::GaussianPoly, Expansion::None, 0, 9});
  CHECK(gp.dimension() == 10);
  CHECK(gp.constant_column() == 0);
}
