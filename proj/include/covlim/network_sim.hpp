// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "covlim/cov_matrix.hpp"
#include "covlim/gaussian_kernels.hpp"
#include "covlim/path_ensemble.hpp"

namespace covlim {

enum class Architecture { ShapedMlp, Resnet };

struct SimulationLimits {
  std::size_t max_width = 8192;
  std::size_t max_depth = 1'000'000;
  std::size_t max_inputs = 64;
  std::size_t max_input_dim = 1 << 20;
  /// Cap on the number of doubles held per path (n * max(n_in, m) and friends).
  std::size_t max_values = std::size_t{1} << 27;
};

struct NetworkSpec {
  Architecture arch = Architecture::ShapedMlp;
  std::size_t n_in = 2;
  std::size_t n = 64;
  std::size_t d = 64;
  std::size_t m = 2;
  ShapingConfig shaping = ShapingConfig::unshaped();  // ShapedMlp only

  void validate(const SimulationLimits& limits = {}) const;
};

/// Input vectors as the columns of an n_in x m matrix.
struct InputBatch {
  Eigen::MatrixXd x;

  /// Throws if a column is zero or the shape disagrees with `spec`.
  void validate(const NetworkSpec& spec) const;
  /// (1/n_in) X^T X
  CovMatrix covariance() const;

  /// Deterministic inputs whose empirical covariance equals `v0` exactly up
  /// to rounding; needs n_in >= m.
  static InputBatch with_covariance(const CovMatrix& v0, std::size_t n_in);
};

/// Per-layer covariance of one network draw. layers[0] is the input-side
/// covariance (MLP: (1/n_in)<x, x>; ResNet: (1/n)<z_1, z_1>); layers[l] for
/// l >= 1 follows l further layers.
struct LayerTrajectory {
  std::vector<double> times;
  std::vector<CovMatrix> layers;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// rho^{ab} per layer.
  std::vector<double> correlations(std::size_t a, std::size_t b) const;
};

struct ForwardHooks {
  /// ResNet only: replace every residual-branch weight by zero.
  bool zero_residual_weights = false;
};

/// Time attached to MLP layer l: l / n^{2p} for shaped activations with p > 0,
/// l / n otherwise (equal to l / n at p = 1/2).
double mlp_layer_time(std::size_t layer, const NetworkSpec& spec);

/// Explicit-weight MLP at He initialization. Records
/// V_l = (c/n) <phi_s(z_l^a), phi_s(z_l^b)> for l = 1..d.
LayerTrajectory forward_mlp(const NetworkSpec& spec, const InputBatch& inputs, std::uint64_t seed,
                            std::uint64_t stream = 0, const SimulationLimits& limits = {});

/// sqrt(d)-scaled ReLU ResNet z_{l+1} = z_l + (dn)^{-1/2} W_l relu(z_l).
/// Records the pre-activation covariance (1/n) <z_l^a, z_l^b> at t = l/d.
LayerTrajectory forward_resnet(const NetworkSpec& spec, const InputBatch& inputs, std::uint64_t seed,
                               std::uint64_t stream = 0, const ForwardHooks& hooks = {},
                               const SimulationLimits& limits = {});

/// Entrywise rho^{ab} = V^{ab} / sqrt(V^aa V^bb), clamped to [-1, 1]
/// (error if beyond the 1e-12 slack). Nonpositive diagonal is an error.
Eigen::MatrixXd cov_to_corr(const CovMatrix& v);

/// One trajectory per path, path i on stream (kNetwork, i).
PathEnsemble simulate_network_ensemble(const NetworkSpec& spec, const InputBatch& inputs, std::size_t paths,
                                       std::uint64_t seed, unsigned threads = 0, const ForwardHooks& hooks = {});

}  // namespace covlim
