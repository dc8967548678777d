#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "msynth/rng.hpp"

using namespace msynth;

TEST_CASE("same seed reproduces the exact sequence") {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  RngStream c(42), d(42);
  for (int i = 0; i < 100; ++i) CHECK(c.uniform() == d.uniform());
}

TEST_CASE("pinned outputs stay stable across platforms") {
  // Regression pin: these values were produced by this implementation once
  // and must never drift (synthetic output reproducibility depends on it).
  RngStream s(12345);
  CHECK(s.next_u64() == 6597103971274460346ULL);
  CHECK(s.next_u64() == 7386862472818278521ULL);
  RngStream d = s.derive("measure-1");
  CHECK(d.seed() == 17499036931898004483ULL);
  CHECK(d.uniform() == doctest::Approx(0.889528376603135).epsilon(1e-15));
  RngStream z(0);
  CHECK(z.next_u64() == 2947667278772165694ULL);
}

TEST_CASE("derived streams differ by label and index") {
  RngStream s(7);
  auto a = s.derive("alpha");
  auto b = s.derive("beta");
  auto a2 = s.derive("alpha");
  CHECK(a.seed() == a2.seed());
  CHECK(a.seed() != b.seed());
  CHECK(s.derive("x", 1).seed() != s.derive("x", 2).seed());
  CHECK(s.derive("x", 1).seed() == s.derive("x", 1).seed());
  // Deriving does not advance the parent.
  RngStream p(7), q(7);
  (void)p.derive("anything");
  CHECK(p.next_u64() == q.next_u64());
}

TEST_CASE("uniform stays inside the open unit interval") {
  RngStream s(3);
  for (int i = 0; i < 200000; ++i) {
    double u = s.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("gaussian moments match the standard normal") {
  RngStream s(11);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = s.gaussian();
    sum += g;
    sumsq += g * g;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("inverse normal cdf hits reference quantiles") {
  CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(inverse_normal_cdf(0.975) ==
        doctest::Approx(1.9599639845400536).epsilon(1e-12));
  CHECK(inverse_normal_cdf(0.025) ==
        doctest::Approx(-1.9599639845400538).epsilon(1e-12));
  CHECK(inverse_normal_cdf(0.999) ==
        doctest::Approx(3.090232306167813).epsilon(1e-12));
  CHECK(inverse_normal_cdf(1e-6) ==
        doctest::Approx(-4.753424308822899).epsilon(1e-9));
  // Symmetry across the median.
  for (double p : {0.01, 0.1, 0.3, 0.45}) {
    CHECK(inverse_normal_cdf(p) ==
          doctest::Approx(-inverse_normal_cdf(1.0 - p)).epsilon(1e-12));
  }
}

TEST_CASE("uniform_index is equidistributed and in range") {
  RngStream s(5);
  const std::size_t n = 7;
  const int draws = 70000;
  std::vector<int> counts(n, 0);
  for (int i = 0; i < draws; ++i) {
    std::size_t k = s.uniform_index(n);
    REQUIRE(k < n);
    ++counts[k];
  }
  // 5 sigma around draws/n.
  double expect = static_cast<double>(draws) / n;
  double sigma = std::sqrt(expect * (1.0 - 1.0 / n));
  for (std::size_t k = 0; k < n; ++k)
    CHECK(std::fabs(counts[k] - expect) < 5.0 * sigma);
}

TEST_CASE("shuffle permutes and is seed-deterministic") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  RngStream a(9);
  auto w = v;
  a.shuffle(w);
  auto sorted = w;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == v);
  CHECK(w != v);  // 50 elements: identity permutation would be astonishing
  RngStream b(9);
  auto w2 = v;
  b.shuffle(w2);
  CHECK(w == w2);
}
