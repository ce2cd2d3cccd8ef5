#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "glo/rng.hpp"

using namespace glo;

namespace {

// Transcription of the reference pcg32_srandom_r / pcg32_random_r.
struct RefPcg {
  std::uint64_t state = 0, inc = 0;
  RefPcg(std::uint64_t initstate, std::uint64_t initseq) {
    inc = (initseq << 1u) | 1u;
    next();
    state += initstate;
    next();
  }
  std::uint32_t next() {
    std::uint64_t old = state;
    state = old * 6364136223846793005ULL + inc;
    std::uint32_t xs = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xs >> rot) | (xs << ((~rot + 1u) & 31));
  }
};

}  // namespace

TEST_CASE("matches the reference PCG32 stream") {
  // initseq whose stream increment is 1442695040888963407.
  RefPcg ref(42, 1442695040888963407ULL >> 1);
  Rng rng(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(rng.next_u32() == ref.next());
}

TEST_CASE("same seed, same stream; different seeds differ") {
  Rng a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u32();
    CHECK(x == b.next_u32());
    differs |= x != c.next_u32();
  }
  CHECK(differs);
}

TEST_CASE("uniform draws stay in [0, 1)") {
  Rng rng(1);
  double lo = 1.0, hi = 0.0, mean = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    mean += u / n;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("below is in range and covers every value") {
  Rng rng(3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.below(7);
    REQUIRE(v < 7);
    ++hits[v];
  }
  for (int h : hits) CHECK(h > 800);
  CHECK_THROWS_AS(rng.below(0), Error);
}

TEST_CASE("normal draws have unit moments") {
  Rng rng(11);
  const int n = 200000;
  double m1 = 0.0, m2 = 0.0, m4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    m1 += x / n;
    m2 += x * x / n;
    m4 += x * x * x * x / n;
  }
  CHECK(std::abs(m1) < 0.01);
  CHECK(m2 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(m4 == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("shuffle is a seeded permutation") {
  std::vector<std::size_t> a(50), b(50);
  std::iota(a.begin(), a.end(), 0);
  std::iota(b.begin(), b.end(), 0);
  Rng r1(5), r2(5);
  r1.shuffle(a);
  r2.shuffle(b);
  CHECK(a == b);
  std::vector<std::size_t> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
  CHECK_FALSE(std::is_sorted(a.begin(), a.end()));
}

TEST_CASE("rng_normal fills row-major from the stream") {
  Rng a(9), b(9);
  Tensor t = rng_normal<float>(a, Shape{2, 3});
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == static_cast<float>(b.normal()));
}
