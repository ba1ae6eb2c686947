// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>

#include <Eigen/Dense>

#include "covlim/cov_matrix.hpp"
#include "covlim/gaussian_kernels.hpp"
#include "covlim/path_ensemble.hpp"

namespace covlim {

enum class SdeScheme { EulerMaruyama, LogEulerShifted };

struct SdeRunConfig {
  double t0 = 0.0;
  double T = 1.0;
  double dt = 1e-3;
  std::size_t paths = 1;
  SdeScheme scheme = SdeScheme::EulerMaruyama;
  std::uint64_t seed = 0;
  /// Keep every k-th grid point (the terminal point is always kept).
  std::size_t record_stride = 1;
  unsigned threads = 0;

  void validate() const;
};

/// Grid t0 = t_0 < t_1 < ... < t_N = T with uniform spacing dt except for a
/// possibly shorter final step.
std::vector<double> time_grid(double t0, double T, double dt);

/// Drift b(V)^{ab} = nu(rho^{ab}) sqrt(V^aa V^bb) of the shaped ReLU limit.
struct ReluLikeDrift {
  double c_plus = 1.0;
  double c_minus = 0.0;
};

/// Smooth-shaped drift from phi''(0), phi'''(0) and a.
struct SmoothShapedDrift {
  ShapingConfig shaping;
};

using CovDrift = std::variant<ReluLikeDrift, SmoothShapedDrift>;

CovMatrix cov_sde_drift(const CovMatrix& v, const CovDrift& drift);

/// Diffusion matrix Sigma(V)_{ab,cd} = V^ac V^bd + V^ad V^bc over flattened
/// upper-triangle indices.
Eigen::MatrixXd sigma_matrix(const CovMatrix& v);

/// Euler-Maruyama for dV = b(V) dt + Sigma(V)^{1/2} dB on the flattened upper
/// triangle. Sigma^{1/2} uses an eigendecomposition with eigenvalues floored
/// at zero; V is projected back to the PSD cone after a step when needed
/// (counted in counters.psd_projections). A path whose diagonal reaches zero
/// is absorbed and frozen; a non-finite step marks it diverged.
PathEnsemble integrate_cov_sde(const CovMatrix& v0, const CovDrift& drift, const SdeRunConfig& cfg);

/// ResNet limit: dV^{ab}/dt = (1/2) f(rho^{ab}) sqrt(V^aa V^bb).
struct ResnetOdeDrift {};

using OdeDrift = std::variant<ResnetOdeDrift, ReluLikeDrift>;

CovMatrix cov_ode_drift(const CovMatrix& v, const OdeDrift& drift);

struct OdeConfig {
  double t0 = 0.0;
  double T = 1.0;
  double dt = 1e-3;
  std::size_t record_stride = 1;
  OdeDrift drift = ResnetOdeDrift{};
};

/// Classical fixed-step RK4. Returns a single-path ensemble (kind cov_ode).
/// Throws ErrorKind::NonFinite if the solution blows up.
PathEnsemble integrate_cov_ode(const CovMatrix& v0, const OdeConfig& cfg);

/// Test hooks for the rescaled-correlation SDE.
struct QSdeHooks {
  bool noise = true;
  /// Keep only the singular term 2 q (1 - a sqrt(q)) / t of the drift.
  bool isolate_singular_term = false;
  /// Evaluate every 1/t at this fixed time instead.
  std::optional<double> freeze_time;
};

/// sqrt(2) / (3 pi), the coefficient of sqrt(q) in the singular drift.
double q_sde_sqrt_coefficient();

/// Rescaled-correlation SDE, reported as (q, r = log q) per grid point.
///
/// LogEulerShifted integrates
///   r <- r - 2 (1 - (1 - a e^{r/2}) / (t + dt)) dt + 2 sqrt(2) xi sqrt(dt)
/// and admits t0 = 0. EulerMaruyama steps the Ito form of the same process
///   dq = 2 q ((1 - a sqrt(q)) / t + 1) dt + 2 sqrt(2) q dB
/// with 1/t taken at the left end (t0 > 0 required); q < 0 is reflected and
/// counted in counters.reflections. Both schemes consume one normal per step
/// from stream (kQSde, path), so equal seeds give matched increments.
PathEnsemble integrate_q_sde(double r0, const SdeRunConfig& cfg, const QSdeHooks& hooks = {});

}  // namespace covlim
