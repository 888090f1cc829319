#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "dlab/rng.hpp"

using dlab::RandomStream;

TEST_CASE("identical seed and purpose reproduce the stream") {
  RandomStream a(42, "batch"), b(42, "batch");
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("streams split by purpose or seed do not collide") {
  RandomStream a(42, "batch"), b(42, "noise"), c(43, "batch");
  int equal_ab = 0, equal_ac = 0;
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t x = a.next_u64();
    if (x == b.next_u64()) ++equal_ab;
    if (x == c.next_u64()) ++equal_ac;
  }
  CHECK(equal_ab == 0);
  CHECK(equal_ac == 0);
}

TEST_CASE("uniform stays in range with sane moments") {
  RandomStream rng(7, "test");
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sum2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("normal moments match a standard Gaussian") {
  RandomStream rng(11, "test");
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("uniform_index covers the full range without obvious bias") {
  RandomStream rng(3, "test");
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) counts[rng.uniform_index(7)]++;
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}
