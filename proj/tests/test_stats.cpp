// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "covlim/error.hpp"
#include "covlim/rng.hpp"
#include "covlim/stats.hpp"
#include "support.hpp"

using namespace covlim;

namespace {

SampleSet normals(std::size_t count, std::uint64_t seed, double shift = 0.0) {
  SampleSet s{{}, "normal", "test"};
  Rng rng(seed, 0);
  for (std::size_t i = 0; i < count; ++i) s.values.push_back(shift + rng.normal());
  return s;
}

double trapezoid(const DensityCurve& c) {
  double acc = 0.0;
  for (std::size_t i = 1; i < c.grid.size(); ++i)
    acc += 0.5 * (c.density[i] + c.density[i - 1]) * (c.grid[i] - c.grid[i - 1]);
  return acc;
}

}  // namespace

TEST_CASE("sample set validation") {
  SampleSet empty;
  CHECK_THROWS_AS(empty.validate(), Error);
  SampleSet bad{{1.0, std::nan("")}, "x", "y"};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("kde recovers a standard normal") {
  const auto s = normals(10000, 1);
  const auto c = kde(s);
  REQUIRE(c.grid.size() == kKdeGridPoints);
  double sup = 0.0;
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    const double pdf = std::exp(-0.5 * c.grid[i] * c.grid[i]) / std::sqrt(2.0 * std::numbers::pi);
    sup = std::max(sup, std::abs(c.density[i] - pdf));
    CHECK(c.density[i] >= 0.0);
  }
  CHECK(sup < 0.02);
  CHECK(std::abs(trapezoid(c) - 1.0) < 1e-3);
  const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
  CHECK(c.grid.front() == doctest::Approx(*lo - 3.0 * c.bandwidth));
  CHECK(c.grid.back() == doctest::Approx(*hi + 3.0 * c.bandwidth));
}

TEST_CASE("kde normalization holds for small and skewed samples") {
  for (std::size_t count : {2, 5, 50}) {
    SampleSet s{{}, "exp", "test"};
    Rng rng(count, 0);
    for (std::size_t i = 0; i < count; ++i) s.values.push_back(-std::log1p(-rng.uniform()));
    CHECK(std::abs(trapezoid(kde(s)) - 1.0) < 1e-3);
  }
}

TEST_CASE("kde is deterministic and permutation invariant") {
  auto s = normals(500, 2);
  const auto a = kde(s);
  CHECK(kde(s).density == a.density);
  std::mt19937_64 shuffle(3);
  std::shuffle(s.values.begin(), s.values.end(), shuffle);
  const auto b = kde(s);
  CHECK(b.grid == a.grid);
  CHECK(b.density == a.density);
}

TEST_CASE("kde and bandwidth errors") {
  SampleSet constant{{2.0, 2.0, 2.0}, "c", "t"};
  CHECK_THROWS_AS(kde(constant), Error);
  SampleSet single{{1.0}, "s", "t"};
  CHECK_THROWS_AS(silverman_bandwidth(single), Error);
  // IQR of zero falls back to the standard deviation
  SampleSet spiky{{0, 0, 0, 0, 0, 0, 0, 0, 1, -1}, "s", "t"};
  CHECK(silverman_bandwidth(spiky) > 0.0);
}

TEST_CASE("silverman rule") {
  SampleSet s{{1, 2, 3, 4, 5, 6, 7, 8}, "s", "t"};
  const double sd = std::sqrt(6.0);
  const double iqr = 6.25 - 2.75;
  CHECK(silverman_bandwidth(s) == doctest::Approx(0.9 * std::min(sd, iqr / 1.34) * std::pow(8.0, -0.2)));
}

TEST_CASE("ks_distance examples") {
  const auto a = normals(1000, 4);
  CHECK(ks_distance(a, a) == 0.0);

  SampleSet neg{{-3, -2, -1.5}, "neg", "t"}, pos{{0.5, 1, 4, 7}, "pos", "t"};
  CHECK(ks_distance(neg, pos) == 1.0);

  SampleSet x{{1, 2, 3}, "x", "t"}, y{{2, 3, 4}, "y", "t"};
  CHECK(ks_distance(x, y) == doctest::Approx(1.0 / 3.0));
  // ties across the two samples are handled at the shared value
  SampleSet t1{{0, 0, 1, 1}, "t1", "t"}, t2{{0, 1}, "t2", "t"};
  CHECK(ks_distance(t1, t2) == 0.0);
}

TEST_CASE("ks_distance null behaviour and symmetry") {
  int rejections = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto a = normals(8192, 100 + 2 * k);
    const auto b = normals(8192, 101 + 2 * k);
    const double d = ks_distance(a, b);
    CHECK(d == ks_distance(b, a));
    if (d >= 0.031) ++rejections;
  }
  CHECK(rejections <= 1);
  CHECK(ks_distance(normals(8192, 7), normals(8192, 8, 0.2)) > 0.031);
}

TEST_CASE("ks against a reference cdf") {
  const auto a = normals(20000, 9);
  CHECK(ks_against(a, [](double x) { return testing::normal_cdf(x); }) < 0.015);
  CHECK(ks_against(a, [](double x) { return testing::normal_cdf(x, 0.5); }) > 0.1);
}

TEST_CASE("summarize examples") {
  const auto c = summarize(SampleSet{{4, 4, 4, 4}, "c", "t"});
  CHECK(c.variance == 0.0);
  CHECK(c.skewness == 0.0);
  CHECK(c.q05 == 4.0);
  CHECK(c.q95 == 4.0);

  const auto s = summarize(SampleSet{{1, 2, 3}, "s", "t"});
  CHECK(s.count == 3);
  CHECK(s.mean == 2.0);
  CHECK(s.variance == 1.0);
  CHECK(s.q50 == 2.0);
  CHECK(s.q25 == 1.5);
  CHECK(s.standard_error() == doctest::Approx(1.0 / std::sqrt(3.0)));

  SampleSet u{{}, "u", "t"};
  Rng rng(10, 0);
  for (int i = 0; i < 1000000; ++i) u.values.push_back(rng.uniform());
  const auto su = summarize(u);
  CHECK(std::abs(su.mean - 0.5) < 0.002);
  CHECK(su.variance == doctest::Approx(1.0 / 12.0).epsilon(0.01));
  CHECK(std::abs(su.skewness) < 0.01);
  CHECK(su.q95 == doctest::Approx(0.95).epsilon(0.01));

  const auto sk = summarize(SampleSet{{0, 0, 0, 1, 10}, "sk", "t"});
  CHECK(sk.skewness > 1.0);
}

TEST_CASE("quantile interpolation") {
  const std::vector<double> v{10, 20, 30, 40};
  CHECK(quantile_sorted(v, 0.0) == 10.0);
  CHECK(quantile_sorted(v, 1.0) == 40.0);
  CHECK(quantile_sorted(v, 0.5) == 25.0);
  CHECK(quantile_sorted(v, 0.25) == 17.5);
}

TEST_CASE("comparison report") {
  auto a = normals(3000, 11);
  auto b = normals(2000, 12, 1.0);
  a.label = "a";
  b.label = "b";
  const auto r = compare_samples(a, b);
  CHECK(r.ks == ks_distance(a, b));
  CHECK(r.ks >= 0.0);
  CHECK(r.ks <= 1.0);
  CHECK(r.grid.size() == kKdeGridPoints);
  const DensityCurve ca{r.grid, r.density_a, r.bandwidth_a};
  const DensityCurve cb{r.grid, r.density_b, r.bandwidth_b};
  CHECK(std::abs(trapezoid(ca) - 1.0) < 1e-3);
  CHECK(std::abs(trapezoid(cb) - 1.0) < 1e-3);
  CHECK(r.summary_a.count == 3000);
  CHECK(r.summary_b.mean == doctest::Approx(1.0).epsilon(0.1));

  const auto j = nlohmann::json::parse(to_json(r));
  CHECK(j["ks"].get<double>() == r.ks);
  CHECK(j["a"]["label"] == "a");
  CHECK(j["b"]["summary"]["count"] == 2000);
  CHECK(j["kde"]["grid"].size() == kKdeGridPoints);
  CHECK(j["config_hash"] == "0000000000000000");

  std::ostringstream csv;
  write_kde_csv(r, csv);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,density_a,density_b");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == kKdeGridPoints);

  // identical sets give identical curves
  const auto same = compare_samples(a, a);
  CHECK(same.density_a == same.density_b);
  CHECK(same.ks == 0.0);
}
