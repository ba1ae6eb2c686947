// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>

#include "covlim/cov_matrix.hpp"
#include "covlim/gaussian_kernels.hpp"
#include "covlim/path_ensemble.hpp"
#include "covlim/rng.hpp"

namespace covlim {

/// One exact layer of the post-activation covariance chain: draw n iid
/// N(0, V) vectors, apply phi_s entrywise and return (c/n) times their Gram
/// matrix. `shaping` must already carry its width (see with_width).
CovMatrix step_cov_chain(const CovMatrix& v, std::size_t n, const ShapingConfig& shaping, Rng& rng);

struct CorrChainOptions {
  NoiseKind noise = NoiseKind::Gaussian;
  /// Drop both the 1/n drift and the noise, leaving rho' = c K1(rho).
  bool infinite_width = false;
};

struct CorrStep {
  double rho = 0.0;
  bool clamped = false;
};

/// Unshaped ReLU correlation chain
///   rho' = c K1(rho) + mu_r(rho)/n + sigma_r(rho) xi / sqrt(n),  c = 2,
/// clamped to [-1, 1].
CorrStep step_corr_chain(double rho, std::size_t n, Rng& rng, const CorrChainOptions& options = {});

enum class QChainMode {
  Approximate,  // step_corr_chain
  Exact,        // step_cov_chain with m = 2, unshaped ReLU
};

struct QChainConfig {
  double rho0 = 0.3;
  std::size_t n = 150;
  std::size_t d = 150;
  std::size_t paths = 1;
  std::uint64_t seed = 0;
  QChainMode mode = QChainMode::Approximate;
  CorrChainOptions options;
  /// d may not exceed n * max_depth_ratio.
  std::size_t max_depth_ratio = 1000;
  unsigned threads = 0;

  void validate() const;
};

/// q_l = l^2 (1 - rho_l) and r_l = log q_l for l = 1..d on t = l/n. A path
/// whose correlation reaches 1 exactly is absorbed: q = 0, r = NaN afterwards.
/// counters.clamp_events counts correlation clamps (approximate mode).
PathEnsemble run_q_chain(const QChainConfig& cfg);

struct ShapedChainOptions {
  bool noise = true;
  NoiseKind noise_kind = NoiseKind::Gaussian;
};

/// V' = V + b(V)/d + Sigma(V)^{1/2} xi / sqrt(n) using the limiting ReLU-like
/// drift and diffusion. Requires a ReLU-like shaping with p in (0, 1/2].
CovMatrix step_shaped_cov_chain(const CovMatrix& v, std::size_t n, std::size_t d, const ShapingConfig& shaping,
                                Rng& rng, const ShapedChainOptions& options = {});

/// d exact steps from V0 per path (kind cov_chain), times from mlp_layer_time.
PathEnsemble run_cov_chain(const CovMatrix& v0, std::size_t n, std::size_t d, const ShapingConfig& shaping,
                           std::size_t paths, std::uint64_t seed, unsigned threads = 0);

/// d steps of step_shaped_cov_chain per path (kind shaped_chain) on t = l/d,
/// projecting back to the PSD cone when a step leaves it.
PathEnsemble run_shaped_cov_chain(const CovMatrix& v0, std::size_t n, std::size_t d, const ShapingConfig& shaping,
                                  std::size_t paths, std::uint64_t seed, const ShapedChainOptions& options = {},
                                  unsigned threads = 0);

}  // namespace covlim
