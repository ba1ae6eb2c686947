// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include "covlim/parallel.hpp"
#include "covlim/rng.hpp"
#include "support.hpp"

using covlim::Philox4x64;

TEST_CASE("philox4x64 known answers") {
  // Random123 kat_vectors, philox4x64_10.
  CHECK(Philox4x64::bijection({0, 0, 0, 0}, {0, 0}) ==
        Philox4x64::Block{0x16554d9eca36314cull, 0xdb20fe9d672d0fdcull, 0xd7e772cee186176bull,
                          0x7e68b68aec7ba23bull});
  const std::uint64_t ones = ~0ull;
  CHECK(Philox4x64::bijection({ones, ones, ones, ones}, {ones, ones}) ==
        Philox4x64::Block{0x87b092c3013fe90bull, 0x438c3c67be8d0224ull, 0x9cc7d7c69cd777b6ull,
                          0xa09caebf594f0ba0ull});
  CHECK(Philox4x64::bijection({0x243f6a8885a308d3ull, 0x13198a2e03707344ull, 0xa4093822299f31d0ull,
                               0x082efa98ec4e6c89ull},
                              {0x452821e638d01377ull, 0xbe5466cf34e90c6cull}) ==
        Philox4x64::Block{0xa528f45403e61d95ull, 0x38c72dbd566e9788ull, 0xa5a1610e72fd18b5ull,
                          0x57bd43b5e52b7fe6ull});
}

TEST_CASE("engine output is keyed by seed and stream") {
  Philox4x64 g(7, 3);
  CHECK(g() == 0xd977a344f9e317c5ull);
  CHECK(g() == 0x6da2d18041289f13ull);
  CHECK(g() == 0x7ac43455b1ef132dull);
  CHECK(g() == 0x1d0e9951c968474aull);

  Philox4x64 a(1, 0), b(1, 1), c(2, 0);
  const auto x = a();
  CHECK(x != b());
  CHECK(x != c());
}

TEST_CASE("stream ids separate purposes") {
  using namespace covlim;
  CHECK(stream_id(stream_purpose::kNetwork, 5) != stream_id(stream_purpose::kCovChain, 5));
  CHECK((stream_id(stream_purpose::kNetwork, 5) >> 48) == stream_purpose::kNetwork);
  CHECK((stream_id(stream_purpose::kQSde, 12345) & 0xFFFFFFFFFFFFull) == 12345);
}

TEST_CASE("normals and rademacher draws are standardized") {
  covlim::Rng rng(11, 0);
  std::vector<double> g(200000), r(200000);
  for (auto& v : g) v = rng.normal();
  for (auto& v : r) v = rng.standardized(covlim::NoiseKind::Rademacher);
  CHECK(std::abs(covlim::testing::mean_of(g)) < 0.01);
  CHECK(covlim::testing::variance_of(g) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(std::abs(covlim::testing::mean_of(r)) < 0.01);
  for (double v : r) REQUIRE(std::abs(v) == 1.0);
  const double u = rng.uniform();
  CHECK(u >= 0.0);
  CHECK(u < 1.0);
}

TEST_CASE("parallel_for result does not depend on thread count") {
  auto fill = [](unsigned threads) {
    std::vector<double> out(257);
    covlim::parallel_for(out.size(), threads, [&](std::size_t i) {
      covlim::Rng rng(5, i);
      out[i] = rng.normal();
    });
    return out;
  };
  CHECK(fill(1) == fill(3));
}

TEST_CASE("parallel_for rethrows worker exceptions") {
  CHECK_THROWS_AS(covlim::parallel_for(10, 2,
                                       [](std::size_t i) {
                                         if (i == 7) throw std::runtime_error("boom");
                                       }),
                  std::runtime_error);
}
