// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "covlim/error.hpp"
#include "covlim/limit_integrators.hpp"
#include "covlim/stats.hpp"
#include "support.hpp"

using namespace covlim;

namespace {

constexpr double kQFixedPoint = 4.5 * std::numbers::pi * std::numbers::pi;

SdeRunConfig sde(double t0, double T, double dt, std::size_t paths, std::uint64_t seed = 1) {
  SdeRunConfig c;
  c.t0 = t0;
  c.T = T;
  c.dt = dt;
  c.paths = paths;
  c.seed = seed;
  return c;
}

CovMatrix scalar(double v) {
  CovMatrix m(1);
  m(0, 0) = v;
  return m;
}

double corr(const PathEnsemble& e, std::size_t step) {
  return e.value(0, step, 1) / std::sqrt(e.value(0, step, 0) * e.value(0, step, 2));
}

/// Mean terminal log q under one scheme, t0 = 0.5, q0 = 10.
double mean_terminal_r(SdeScheme scheme, double dt) {
  auto cfg = sde(0.5, 1.0, dt, 100000, 77);
  cfg.scheme = scheme;
  const auto e = integrate_q_sde(std::log(10.0), cfg);
  double sum = 0.0;
  for (std::size_t p = 0; p < e.paths(); ++p) sum += e.value(p, e.steps() - 1, 1);
  return sum / static_cast<double>(e.paths());
}

}  // namespace

TEST_CASE("time grid and config validation") {
  const auto g = time_grid(0.0, 1.0, 0.3);
  REQUIRE(g.size() == 5);
  CHECK(g[3] == doctest::Approx(0.9));
  CHECK(g[4] == 1.0);
  CHECK(time_grid(0.0, 1.0, 0.25).size() == 5);

  CHECK_THROWS_AS(sde(0.0, 1.0, 0.0, 1).validate(), Error);
  CHECK_THROWS_AS(sde(0.0, 1.0, -1e-3, 1).validate(), Error);
  CHECK_THROWS_AS(sde(0.0, 1.0, 2.0, 1).validate(), Error);
  CHECK_THROWS_AS(sde(1.0, 1.0, 0.1, 1).validate(), Error);
  CHECK_THROWS_AS(sde(0.0, 1.0, 0.1, 0).validate(), Error);
}

TEST_CASE("drift examples") {
  const auto id = CovMatrix::equicorrelated(2, 0.0);
  const auto tanh_drift = cov_sde_drift(id, SmoothShapedDrift{ShapingConfig::smooth(SmoothBase::Tanh, 1.0, 0.5)});
  for (double x : tanh_drift.packed()) CHECK(x == 0.0);

  const auto v = CovMatrix::equicorrelated(2, 0.4, 2.0);
  const auto b = cov_sde_drift(v, ReluLikeDrift{1.0, 0.0});
  CHECK(b(0, 0) == doctest::Approx(0.0));
  CHECK(b(0, 1) == doctest::Approx(kernels::nu(0.4, 1.0, 0.0) * 2.0));

  const auto f = cov_ode_drift(v, ResnetOdeDrift{});
  CHECK(f(0, 0) == doctest::Approx(1.0));
  CHECK(f(0, 1) == doctest::Approx(0.5 * kernels::f_resnet(0.4) * 2.0));
}

TEST_CASE("scalar covariance SDE is a martingale with lognormal law") {
  const double v0 = 1.5;
  const auto e = integrate_cov_sde(scalar(v0), ReluLikeDrift{1.0, 0.0}, sde(0.0, 1.0, 1e-3, 10000, 5));
  std::vector<double> vt;
  SampleSet logs{{}, "log V_T", "test"};
  for (std::size_t p = 0; p < e.paths(); ++p) {
    REQUIRE(e.status(p) == PathStatus::Ok);
    vt.push_back(e.value(p, e.steps() - 1, 0));
    logs.values.push_back(std::log(vt.back()));
  }
  CHECK(std::abs(testing::mean_of(vt) - v0) < 3.0 * testing::standard_error_of(vt));
  const double ks = ks_against(logs, [&](double x) { return testing::normal_cdf(x, std::log(v0) - 1.0, std::sqrt(2.0)); });
  CHECK(ks < 0.02);
}

TEST_CASE("scalar covariance SDE mean is unbiased at every step size") {
  for (double dt : {1e-1, 1e-2, 1e-3}) {
    const std::size_t paths = dt < 5e-3 ? 20000 : 100000;
    const auto e = integrate_cov_sde(scalar(1.0), ReluLikeDrift{1.0, 0.0}, sde(0.0, 1.0, dt, paths, 6));
    const auto vt = e.slice(e.steps() - 1, 0);
    CHECK(std::abs(testing::mean_of(vt) - 1.0) < 3.0 * testing::standard_error_of(vt));
  }
}

TEST_CASE("PSD projections are rare for a well-conditioned start") {
  auto cfg = sde(0.0, 1.0, 1e-3, 200, 8);
  const auto e = integrate_cov_sde(CovMatrix::equicorrelated(2, 0.9), ReluLikeDrift{1.0, 0.0}, cfg);
  CHECK(static_cast<double>(e.counters.psd_projections) < 0.01 * static_cast<double>(e.counters.steps));
  for (std::size_t p = 0; p < e.paths(); ++p) CHECK(e.status(p) == PathStatus::Ok);
}

TEST_CASE("covariance SDE is deterministic and thread independent") {
  auto cfg = sde(0.0, 0.5, 1e-2, 16, 9);
  cfg.threads = 1;
  const auto a = integrate_cov_sde(CovMatrix::equicorrelated(3, 0.2), ReluLikeDrift{1.0, 0.0}, cfg);
  cfg.threads = 3;
  const auto b = integrate_cov_sde(CovMatrix::equicorrelated(3, 0.2), ReluLikeDrift{1.0, 0.0}, cfg);
  CHECK(a == b);
  cfg.record_stride = 10;
  const auto c = integrate_cov_sde(CovMatrix::equicorrelated(3, 0.2), ReluLikeDrift{1.0, 0.0}, cfg);
  CHECK(c.steps() == 6);
  CHECK(c.value(3, 5, 4) == a.value(3, 50, 4));
}

TEST_CASE("ResNet ODE examples") {
  OdeConfig cfg;
  const auto v0 = CovMatrix::equicorrelated(2, 0.0, 2.0);
  const auto e = integrate_cov_ode(v0, cfg);
  const std::size_t last = e.steps() - 1;
  CHECK(e.times()[last] == doctest::Approx(1.0));
  CHECK(std::abs(e.value(0, last, 0) / 2.0 - std::exp(0.5)) < 1e-6);
  CHECK(std::abs(e.value(0, last, 2) / 2.0 - std::exp(0.5)) < 1e-6);
  // off-diagonal leaves zero at rate f(0)/2 sqrt(V^aa V^bb)
  CHECK(e.value(0, 1, 1) / 1e-3 == doctest::Approx(2.0 / (2.0 * std::numbers::pi)).epsilon(1e-3));

  const auto ones = integrate_cov_ode(CovMatrix::equicorrelated(2, 1.0, 0.7), cfg);
  for (std::size_t s = 0; s < ones.steps(); s += 100) CHECK(corr(ones, s) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("shaped ODE and ResNet ODE share the correlation path") {
  OdeConfig resnet;
  OdeConfig shaped;
  shaped.drift = ReluLikeDrift{1.0, 0.0};
  for (double rho0 : {-0.5, 0.0, 0.3, 0.9}) {
    const auto v0 = CovMatrix::equicorrelated(2, rho0, 1.3);
    const auto a = integrate_cov_ode(v0, resnet);
    const auto b = integrate_cov_ode(v0, shaped);
    REQUIRE(a.steps() == b.steps());
    double worst = 0.0;
    for (std::size_t s = 0; s < a.steps(); ++s) worst = std::max(worst, std::abs(corr(a, s) - corr(b, s)));
    CHECK(worst < 1e-6);
    // the shaped ODE keeps the diagonal fixed
    CHECK(b.value(0, b.steps() - 1, 0) == doctest::Approx(1.3));
  }
}

TEST_CASE("q-SDE frozen-time fixed point") {
  QSdeHooks hooks;
  hooks.noise = false;
  hooks.isolate_singular_term = true;
  hooks.freeze_time = 1.0;
  for (auto scheme : {SdeScheme::EulerMaruyama, SdeScheme::LogEulerShifted}) {
    for (double q0 : {5.0, 80.0}) {
      auto cfg = sde(1.0, 40.0, 1e-2, 1);
      cfg.scheme = scheme;
      const auto e = integrate_q_sde(std::log(q0), cfg, hooks);
      CHECK(e.value(0, e.steps() - 1, 0) == doctest::Approx(kQFixedPoint).epsilon(1e-6));
    }
  }
  CHECK(q_sde_sqrt_coefficient() * std::sqrt(kQFixedPoint) == doctest::Approx(1.0));
}

TEST_CASE("noiseless log-form q decays for large t") {
  QSdeHooks hooks;
  hooks.noise = false;
  auto cfg = sde(10.0, 60.0, 1e-2, 1);
  cfg.scheme = SdeScheme::LogEulerShifted;
  const auto e = integrate_q_sde(std::log(20.0), cfg, hooks);
  CHECK(e.value(0, e.steps() - 1, 0) < 1e-30);
}

TEST_CASE("q-SDE singular start") {
  auto cfg = sde(0.0, 1.0, 1e-2, 4);
  cfg.scheme = SdeScheme::EulerMaruyama;
  try {
    integrate_q_sde(std::log(0.7), cfg);
    FAIL("expected a singularity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Singularity);
  }
  cfg.scheme = SdeScheme::LogEulerShifted;
  const auto e = integrate_q_sde(std::log(0.7), cfg);
  CHECK(e.steps() == 101);
  CHECK(e.value(2, 0, 1) == doctest::Approx(std::log(0.7)));
  for (std::size_t p = 0; p < e.paths(); ++p) CHECK(e.value(p, e.steps() - 1, 0) > 0.0);
}

TEST_CASE("log and direct schemes agree to first order") {
  const double d1 = std::abs(mean_terminal_r(SdeScheme::LogEulerShifted, 0.005) -
                             mean_terminal_r(SdeScheme::EulerMaruyama, 0.005));
  const double d2 = std::abs(mean_terminal_r(SdeScheme::LogEulerShifted, 0.0025) -
                             mean_terminal_r(SdeScheme::EulerMaruyama, 0.0025));
  MESSAGE("scheme discrepancy ratio " << d1 / d2);
  CHECK(d1 / d2 >= 1.5);
  CHECK(d1 / d2 <= 3.0);
}
