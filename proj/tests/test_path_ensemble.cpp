// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "covlim/error.hpp"
#include "covlim/path_ensemble.hpp"
#include "covlim/rng.hpp"

using namespace covlim;

namespace {

PathEnsemble random_ensemble(std::uint64_t seed, const char* kind, std::size_t dim) {
  Rng rng(seed, 0);
  const std::size_t steps = 1 + static_cast<std::size_t>(rng.uniform() * 7);
  const std::size_t paths = 1 + static_cast<std::size_t>(rng.uniform() * 9);
  std::vector<double> times(steps);
  for (std::size_t s = 0; s < steps; ++s) times[s] = 0.1 * static_cast<double>(s);
  EnsembleMeta meta;
  meta.kind = kind;
  meta.m = dim == 2 ? 0 : 2;
  meta.n = static_cast<std::uint32_t>(seed);
  meta.d = 7;
  meta.master_seed = seed * 31;
  meta.config_hash = 0xfeedfacecafebeefull ^ seed;
  PathEnsemble e(meta, times, dim, paths);
  for (std::size_t p = 0; p < paths; ++p) {
    e.set_stream(p, stream_id(3, p));
    e.set_status(p, static_cast<PathStatus>(p % 3));
    for (std::size_t s = 0; s < steps; ++s)
      for (double& x : e.state(p, s)) x = rng.normal() * 1e3;
  }
  return e;
}

}  // namespace

TEST_CASE("binary round trip preserves every field") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const bool cov = seed % 2 == 0;
    auto e = random_ensemble(seed, cov ? ensemble_kind::kCovChain : ensemble_kind::kQChain, cov ? 3 : 2);
    if (seed == 5) e.state(0, 0)[0] = std::numeric_limits<double>::infinity();
    std::stringstream buf;
    write_binary(e, buf);
    const auto back = read_binary(buf);
    CHECK(back == e);
    CHECK(back.meta().master_seed == e.meta().master_seed);
    CHECK(back.meta().config_hash == e.meta().config_hash);
  }
}

TEST_CASE("binary header layout") {
  const auto e = random_ensemble(3, ensemble_kind::kCovSde, 3);
  std::stringstream buf;
  write_binary(e, buf);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "CVLE");
  CHECK(static_cast<unsigned char>(bytes[4]) == kEnsembleFormatVersion);

  std::stringstream bad(std::string("XXXX") + bytes.substr(4));
  CHECK_THROWS_AS(read_binary(bad), Error);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_binary(truncated), Error);
}

TEST_CASE("csv layout") {
  PathEnsemble cov(EnsembleMeta{ensemble_kind::kCovChain, 2, 4, 1, 0, 0}, {0.0, 0.25}, 3, 1);
  auto s0 = cov.state(0, 0);
  s0[0] = 1.0, s0[1] = 0.5, s0[2] = 1.0;
  auto s1 = cov.state(0, 1);
  s1[0] = 4.0, s1[1] = 1.0, s1[2] = 1.0;
  std::ostringstream out;
  write_csv(cov, out);
  CHECK(out.str() ==
        "path,layer,t,pair,V,rho\n"
        "0,0,0,0,1,1\n0,0,0,1,0.5,0.5\n0,0,0,2,1,1\n"
        "0,1,0.25,0,4,1\n0,1,0.25,1,1,0.5\n0,1,0.25,2,1,1\n");

  PathEnsemble q(EnsembleMeta{ensemble_kind::kQChain, 0, 4, 1, 0, 0}, {0.25}, 2, 1);
  q.state(0, 0)[0] = 2.0;
  q.state(0, 0)[1] = std::log(2.0);
  std::ostringstream qout;
  write_csv(q, qout);
  CHECK(qout.str() == "path,layer,t,q,r\n0,0,0.25,2," + format_double(std::log(2.0)) + "\n");
}

TEST_CASE("format_double") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-300) == "1e-300");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  const double x = 0.1 + 0.2;
  CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("slices") {
  auto e = random_ensemble(8, ensemble_kind::kMlp, 3);
  const auto sl = e.slice(0, 1);
  REQUIRE(sl.size() == e.paths());
  CHECK(sl[0] == e.value(0, 0, 1));
  CHECK(is_covariance_kind(ensemble_kind::kMlp));
  CHECK_FALSE(is_covariance_kind(ensemble_kind::kQSde));
}
