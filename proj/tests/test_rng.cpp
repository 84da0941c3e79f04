#include <cmath>

#include "doctest.h"
#include "lfire/rng.hpp"

using lfire::Rng;

TEST_CASE("philox4x32-10 known answers") {
  auto r = Rng::philox({0, 0, 0, 0}, {0, 0});
  CHECK(r == Rng::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  r = Rng::philox({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(r == Rng::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  r = Rng::philox({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(r == Rng::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("identical seed and stream reproduce the sequence") {
  Rng a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    differs |= x != c.normal();
  }
  CHECK(differs);
}

TEST_CASE("split streams depend only on their coordinates") {
  Rng parent(5, 1);
  Rng burned(5, 1);
  for (int i = 0; i < 17; ++i) burned.uniform();
  Rng c1 = parent.split(3), c2 = burned.split(3);
  for (int i = 0; i < 100; ++i) CHECK(c1.next_u64() == c2.next_u64());
}

TEST_CASE("uniform and normal moments") {
  Rng rng(1, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK_UNARY(u >= 0.0);
    CHECK_UNARY(u < 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::fabs(sn / n) < 4.0 / std::sqrt(n));
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("poisson mean and variance across both samplers") {
  for (double mean : {0.3, 4.0, 9.9, 10.0, 37.5, 2500.0}) {
    Rng rng(9, static_cast<std::uint64_t>(mean * 10));
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<double>(rng.poisson(mean));
      CHECK_UNARY(k >= 0.0);
      s += k;
      s2 += k * k;
    }
    const double m = s / n;
    const double v = s2 / n - m * m;
    CHECK(std::fabs(m - mean) < 5.0 * std::sqrt(mean / n));
    CHECK(v == doctest::Approx(mean).epsilon(0.05));
  }
  Rng rng(1, 1);
  CHECK(rng.poisson(0.0) == 0);
}

TEST_CASE("below stays in range and covers it") {
  Rng rng(3, 3);
  int hits[7] = {};
  for (int i = 0; i < 7000; ++i) {
    const auto k = rng.below(7);
    REQUIRE(k < 7);
    ++hits[k];
  }
  for (int h : hits) CHECK(h > 800);
}
