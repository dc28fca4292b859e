#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "banditmac/rng.hpp"

using banditmac::mix_seed;
using banditmac::Rng;

TEST_CASE("mix_seed matches an independent splitmix64 evaluation") {
  // Frozen from a big-integer reimplementation of the finalizer.
  CHECK(mix_seed(0, 0) == 0xe220a8397b1dcdafull);
  CHECK(mix_seed(42, 7) == 0xb4346c5a4ac089c3ull);
  CHECK(mix_seed(1, 2) == 0x382ff84cb27281e9ull);
}

TEST_CASE("mix_seed separates indices and seeds") {
  CHECK(mix_seed(5, 0) != mix_seed(5, 1));
  CHECK(mix_seed(5, 0) != mix_seed(6, 0));
}

TEST_CASE("identical seeds replay identical streams") {
  Rng a(1234), b(1234);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform stays in [0, 1) and fills the interval") {
  Rng rng(99);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo < 0.001);
  CHECK(hi > 0.999);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("uniform_below covers every value without bias") {
  Rng rng(7);
  std::vector<int> counts(5, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const std::size_t v = rng.uniform_below(5);
    REQUIRE(v < 5);
    ++counts[v];
  }
  for (int c : counts) CHECK(static_cast<double>(c) / n == doctest::Approx(0.2).epsilon(0.05));
  CHECK_THROWS_AS(rng.uniform_below(0), std::invalid_argument);
}

TEST_CASE("bernoulli frequency tracks p") {
  Rng rng(11);
  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.15);
  CHECK(static_cast<double>(hits) / n == doctest::Approx(0.15).epsilon(0.05));
}

TEST_CASE("exponential mean is 1/rate") {
  Rng rng(21);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.exponential(4.0);
    REQUIRE(x >= 0.0);
    sum += x;
  }
  CHECK(sum / n == doctest::Approx(0.25).epsilon(0.01));
  CHECK_THROWS_AS(rng.exponential(0.0), std::invalid_argument);
}

TEST_CASE("normal moments") {
  Rng rng(31);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  CHECK(mean == doctest::Approx(0.0).epsilon(1).scale(0.02));
  CHECK(sq / n - mean * mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("gamma moments for several shapes") {
  Rng rng(41);
  for (double shape : {0.5, 1.0, 3.7}) {
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.gamma(shape);
      REQUIRE(x >= 0.0);
      sum += x;
      sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(shape).epsilon(0.02));
    CHECK(var == doctest::Approx(shape).epsilon(0.05));
  }
  CHECK_THROWS_AS(rng.gamma(0.0), std::invalid_argument);
}

TEST_CASE("beta moments and support") {
  Rng rng(51);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.beta(2.0, 5.0);
    REQUIRE(x >= 0.0);
    REQUIRE(x <= 1.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;  // a/(a+b) = 2/7
  const double var = sq / n - mean * mean;  // ab/((a+b)^2 (a+b+1)) = 10/392
  CHECK(mean == doctest::Approx(2.0 / 7.0).epsilon(0.01));
  CHECK(var == doctest::Approx(10.0 / 392.0).epsilon(0.05));
}

TEST_CASE("beta(1,1) is uniform") {
  Rng rng(61);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.beta(1.0, 1.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sq / n - mean * mean == doctest::Approx(1.0 / 12.0).epsilon(0.05));
}
