#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fitpop/noise.hpp"

using namespace fitpop;

TEST_CASE("derived streams are reproducible") {
  NoiseStream a = derive_stream(12345, 7);
  NoiseStream b = derive_stream(12345, 7);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct replicas diverge") {
  NoiseStream a = derive_stream(12345, 7);
  NoiseStream b = derive_stream(12345, 8);
  bool differs = false;
  for (int i = 0; i < 10000 && !differs; ++i)
    differs = a.next_u64() != b.next_u64();
  REQUIRE(differs);
}

TEST_CASE("interleaved consumption matches sequential") {
  NoiseStream a = derive_stream(99, 7);
  NoiseStream b = derive_stream(99, 7);
  NoiseStream other = derive_stream(99, 8);
  std::vector<double> seq, inter;
  for (int i = 0; i < 100; ++i) seq.push_back(a.next_uniform());
  for (int i = 0; i < 100; ++i) {
    inter.push_back(b.next_uniform());
    other.next_uniform();
  }
  REQUIRE(seq == inter);
}

TEST_CASE("uniforms live in [0,1)") {
  NoiseStream s = derive_stream(5, 0);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.next_uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("normals have unit variance") {
  NoiseStream s = derive_stream(5, 1);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.next_normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  REQUIRE(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  REQUIRE(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("binomial draws match mean and variance") {
  NoiseStream s = derive_stream(17, 0);
  SECTION("small n inversion regime") {
    const int reps = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < reps; ++i) {
      const auto k = static_cast<double>(binomial_draw(s, 10, 0.3));
      sum += k;
      sum2 += k * k;
    }
    const double mean = sum / reps;
    const double var = sum2 / reps - mean * mean;
    REQUIRE(std::abs(mean - 3.0) < 0.02);
    REQUIRE(std::abs(var - 2.1) < 0.05);
  }
  SECTION("large n") {
    const int reps = 20000;
    const std::int64_t n = 1000000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < reps; ++i) {
      const auto k = static_cast<double>(binomial_draw(s, n, 0.5));
      sum += k;
      sum2 += k * k;
    }
    const double mean = sum / reps;
    const double var = sum2 / reps - mean * mean;
    const double expect_var = 0.25 * static_cast<double>(n);
    REQUIRE(std::abs(mean - 5.0e8) < 4.0 * std::sqrt(expect_var / reps));
    REQUIRE(std::abs(var / expect_var - 1.0) < 0.1);
  }
  SECTION("edges") {
    REQUIRE(binomial_draw(s, 0, 0.5) == 0);
    REQUIRE(binomial_draw(s, 42, 0.0) == 0);
    REQUIRE(binomial_draw(s, 42, 1.0) == 42);
  }
}
