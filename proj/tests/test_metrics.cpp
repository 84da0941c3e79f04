#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "lfire/error.hpp"
#include "lfire/metrics.hpp"

using namespace lfire;

namespace {

GridPosterior gaussian_grid(const Eigen::VectorXd& axis, double mu, double sd) {
  Eigen::VectorXd lv = (-(axis.array() - mu).square() / (2 * sd * sd)).matrix();
  return normalize_grid({axis}, lv, std::vector<char>(static_cast<std::size_t>(axis.size()), 1));
}

}  // namespace

TEST_CASE("skl") {
  const Eigen::VectorXd axis = cell_centered_axis(-12, 13, 5000);
  const GridPosterior p = gaussian_grid(axis, 0, 1), q = gaussian_grid(axis, 1, 1);
  CHECK(skl(p, p) == 0.0);
  CHECK(skl(p, q) == skl(q, p));
  // KL = dmu^2 / (2 sigma^2) each way; symmetrised mean of the two.
  CHECK(std::fabs(skl(p, q) - 0.5) < 0.01);
  CHECK(skl(p, q) > 0.0);
  const GridPosterior other = gaussian_grid(cell_centered_axis(-12, 13, 4000), 0, 1);
  CHECK_THROWS_AS((void)skl(p, other), ConfigError);
}

TEST_CASE("skl drops excluded nodes and floors zeros") {
  const Eigen::VectorXd axis = cell_centered_axis(0, 1, 4);
  Eigen::VectorXd a(4), b(4);
  a << 0, 0, 0, -INFINITY;
  b << 0, 1, 0, 0;
  std::vector<char> sup{1, 1, 1, 0};
  const GridPosterior p = normalize_grid({axis}, a, sup);
  const GridPosterior q = normalize_grid({axis}, b, sup);
  double expect = 0;
  for (int g = 0; g < 3; ++g) expect += (p.density[g] - q.density[g]) * std::log(p.density[g] / q.density[g]);
  CHECK(skl(p, q) == doctest::Approx(0.5 * expect * 0.25).epsilon(1e-14));
  Eigen::VectorXd c(4);
  c << 0, -INFINITY, 0, 0;
  const GridPosterior r = normalize_grid({axis}, c, std::vector<char>{1, 1, 1, 1});
  CHECK(std::isfinite(skl(p, r)));
  CHECK(skl(p, r) > 10.0);
}

TEST_CASE("relative error") {
  Eigen::VectorXd e(1), r(1);
  e << 1.1;
  r << 1.0;
  CHECK(relative_error(e, r)[0] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(relative_error(r, r)[0] == 0.0);
  Rng rng(1, 0);
  Eigen::VectorXd a(20), b(20);
  for (int i = 0; i < 20; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
  }
  const Eigen::VectorXd re = relative_error(a, b);
  for (int i = 0; i < 20; ++i) CHECK(std::fabs(re[i] - std::sqrt((a[i] - b[i]) * (a[i] - b[i]) / (b[i] * b[i]))) <= 1e-15 * std::max(1.0, re[i]));
  CHECK_THROWS_AS((void)relative_error(e, Eigen::VectorXd::Zero(1)), DegenerateInput);
  Eigen::VectorXd lf(1), sl(1);
  lf << 0.1;
  sl << 0.3;
  CHECK(delta_rel_error(lf, sl)[0] == doctest::Approx(-0.2));
  CHECK(delta_rel_error(sl, sl)[0] == 0.0);
  // LFIRE closer to the reference than SL: negative difference.
  Eigen::VectorXd ref(1), est_l(1), est_s(1);
  ref << 2.0;
  est_l << 2.2;
  est_s << 1.0;
  CHECK(delta_rel_error(relative_error(est_l, ref), relative_error(est_s, ref))[0] == doctest::Approx(-0.4));
}

TEST_CASE("forecast gain") {
  Eigen::MatrixXd y(2, 3), a(2, 3), b(2, 3);
  y.setZero();
  a << 1, 0, 0.6, 0, 0, 0.8;
  b << 2, 1, 1.2, 0, 0, 1.6;
  const Eigen::VectorXd z = forecast_gain(y, a, b);
  CHECK(z[0] == doctest::Approx(0.5));
  CHECK(z[1] == doctest::Approx(1.0));
  CHECK(z[2] == doctest::Approx(0.5));
  CHECK((forecast_gain(y, b, b).array() == 0.0).all());
  CHECK((forecast_gain(3 * y, 3 * a, 3 * b) - z).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS((void)forecast_gain(y, a, y), DegenerateInput);
}

TEST_CASE("wilcoxon signed rank") {
  SUBCASE("antisymmetric pairs") {
    Eigen::VectorXd d(6);
    d << 1, -1, 2, -2, 3, -3;
    const WilcoxonResult r = wilcoxon_signed_rank(d);
    CHECK(r.exact);
    CHECK(r.p_value == 1.0);
  }
  SUBCASE("exact p matches full enumeration") {
    Rng rng(2, 0);
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::VectorXd d(10);
      for (int i = 0; i < 10; ++i) d[i] = rng.normal() + 0.4;
      const WilcoxonResult r = wilcoxon_signed_rank(d);
      std::vector<int> idx(10);
      for (int i = 0; i < 10; ++i) idx[i] = i;
      std::sort(idx.begin(), idx.end(), [&](int a, int b) { return std::fabs(d[a]) < std::fabs(d[b]); });
      std::vector<int> rank(10);
      for (int i = 0; i < 10; ++i) rank[idx[i]] = i + 1;
      double w = 0;
      for (int i = 0; i < 10; ++i) w += d[i] > 0 ? rank[i] : 0;
      int hits = 0;
      for (int mask = 0; mask < 1024; ++mask) {
        double s = 0;
        for (int i = 0; i < 10; ++i) s += (mask >> i & 1) ? rank[i] : 0;
        hits += std::fabs(s - 27.5) >= std::fabs(w - 27.5);
      }
      CHECK(r.statistic == w);
      CHECK(r.p_value == doctest::Approx(hits / 1024.0).epsilon(1e-15));
    }
  }
  SUBCASE("all negative, large n") {
    Eigen::VectorXd d(100);
    for (int i = 0; i < 100; ++i) d[i] = -0.01 * (i + 1);
    const WilcoxonResult r = wilcoxon_signed_rank(d);
    CHECK_FALSE(r.exact);
    CHECK(r.p_value < 1e-10);
    CHECK(r.p_value > 0.0);
  }
  SUBCASE("normal approximation is monotone") {
    Eigen::VectorXd d(30);
    double prev = 0;
    for (int shift = 0; shift < 5; ++shift) {
      for (int i = 0; i < 30; ++i) d[i] = (i % 2 ? -1.0 : 1.0) * (i + 1) + shift * 3.0;
      const double p = wilcoxon_signed_rank(d).p_value;
      if (shift) CHECK(p <= prev);
      prev = p;
    }
  }
  CHECK_THROWS_AS((void)wilcoxon_signed_rank(Eigen::VectorXd::Zero(5)), DegenerateInput);
}

TEST_CASE("quantile bands") {
  Eigen::MatrixXd col(5, 1);
  col << 5, 1, 4, 2, 3;
  const QuantileBand b = quantile_band(col);
  CHECK(b.median[0] == 3.0);
  CHECK(b.q25[0] == 2.0);
  CHECK(b.q75[0] == 4.0);
  Eigen::MatrixXd row(1, 3);
  row << 1, 2, 3;
  const QuantileBand r = quantile_band(row);
  CHECK(r.median == row.row(0).transpose());
  CHECK(r.q25 == row.row(0).transpose());
  Rng rng(3, 0);
  Eigen::VectorXd v(37);
  for (int i = 0; i < 37; ++i) v[i] = rng.normal();
  std::vector<double> s(v.data(), v.data() + 37);
  std::sort(s.begin(), s.end());
  // type-7: h = (n-1) p
  const double h = 36 * 0.25;
  CHECK(quantile(v, 0.25) == doctest::Approx(s[9] + (h - 9) * (s[10] - s[9])));
}
