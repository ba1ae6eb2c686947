// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include "covlim/network_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "covlim/error.hpp"
#include "covlim/parallel.hpp"
#include "covlim/rng.hpp"

namespace covlim {

void NetworkSpec::validate(const SimulationLimits& limits) const {
  auto fail = [](ErrorKind kind, const std::string& what) {
    throw Error(kind, "network_sim", "NetworkSpec", what);
  };
  if (n_in == 0 || n == 0 || d == 0 || m == 0) fail(ErrorKind::InvalidArgument, "n_in, n, d and m must be positive");
  if (n > limits.max_width) fail(ErrorKind::Limits, "width " + std::to_string(n) + " exceeds limit");
  if (d > limits.max_depth) fail(ErrorKind::Limits, "depth " + std::to_string(d) + " exceeds limit");
  if (m > limits.max_inputs) fail(ErrorKind::Limits, "input count " + std::to_string(m) + " exceeds limit");
  if (n_in > limits.max_input_dim) fail(ErrorKind::Limits, "input dimension exceeds limit");
  if (n * std::max(n_in, m) > limits.max_values || n_in * m > limits.max_values) {
    fail(ErrorKind::Limits, "per-path memory exceeds limit");
  }
  if (arch == Architecture::ShapedMlp) shaping.validate();
}

void InputBatch::validate(const NetworkSpec& spec) const {
  if (static_cast<std::size_t>(x.rows()) != spec.n_in || static_cast<std::size_t>(x.cols()) != spec.m) {
    throw Error(ErrorKind::InvalidArgument, "network_sim", "InputBatch", "input shape must be n_in x m");
  }
  for (Eigen::Index a = 0; a < x.cols(); ++a) {
    if (x.col(a).squaredNorm() == 0.0) {
      throw Error(ErrorKind::DegenerateCovariance, "network_sim", "InputBatch",
                  "input " + std::to_string(a) + " is the zero vector");
    }
  }
}

CovMatrix InputBatch::covariance() const {
  return CovMatrix::from_dense((x.transpose() * x) / static_cast<double>(x.rows()));
}

InputBatch InputBatch::with_covariance(const CovMatrix& v0, std::size_t n_in) {
  const std::size_t m = v0.dim();
  if (n_in < m) {
    throw Error(ErrorKind::InvalidArgument, "network_sim", "InputBatch", "n_in must be at least m");
  }
  const Eigen::MatrixXd factor = psd_factor(v0.dense());
  InputBatch batch;
  batch.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_in), static_cast<Eigen::Index>(m));
  batch.x.topRows(static_cast<Eigen::Index>(m)) = std::sqrt(static_cast<double>(n_in)) * factor.transpose();
  return batch;
}

std::vector<double> LayerTrajectory::correlations(std::size_t a, std::size_t b) const {
  std::vector<double> out;
  out.reserve(layers.size());
  for (const auto& v : layers) out.push_back(v(a, b) / std::sqrt(v(a, a) * v(b, b)));
  return out;
}

double mlp_layer_time(std::size_t layer, const NetworkSpec& spec) {
  const double l = static_cast<double>(layer);
  const auto& s = spec.shaping;
  if (s.kind != ShapingKind::Unshaped && s.p > 0.0) {
    const double n_ref = static_cast<double>(s.n_ref != 0 ? s.n_ref : spec.n);
    return l / std::pow(n_ref, 2.0 * s.p);
  }
  return l / static_cast<double>(spec.n);
}

namespace {

// Row-major n x m activations; column a is the a-th input's hidden vector.
struct Hidden {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> values;

  Hidden(std::size_t rows, std::size_t cols) : n(rows), m(cols), values(rows * cols, 0.0) {}
  double& operator()(std::size_t i, std::size_t a) { return values[i * m + a]; }
  double operator()(std::size_t i, std::size_t a) const { return values[i * m + a]; }
};

// scale * <u^a, u^b>, summed in the same order for every pair so that equal
// columns yield bit-identical entries.
CovMatrix gram(const Hidden& u, double scale) {
  CovMatrix v(u.m);
  for (std::size_t a = 0; a < u.m; ++a)
    for (std::size_t b = a; b < u.m; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < u.n; ++i) s += u(i, a) * u(i, b);
      v(a, b) = scale * s;
    }
  return v;
}

// out(i, a) = scale * sum_j W_ij in(j, a) with W streamed row by row.
void gaussian_matmul(Rng& rng, const Hidden& in, double scale, Hidden& out) {
  const std::size_t m = in.m;
  std::vector<double> acc(m);
  for (std::size_t i = 0; i < out.n; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const double* row = in.values.data();
    for (std::size_t j = 0; j < in.n; ++j, row += m) {
      const double w = rng.normal();
      for (std::size_t a = 0; a < m; ++a) acc[a] += w * row[a];
    }
    for (std::size_t a = 0; a < m; ++a) out(i, a) = scale * acc[a];
  }
}

Hidden embed(Rng& rng, const NetworkSpec& spec, const InputBatch& inputs) {
  Hidden x(spec.n_in, spec.m);
  for (std::size_t j = 0; j < spec.n_in; ++j)
    for (std::size_t a = 0; a < spec.m; ++a) x(j, a) = inputs.x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a));
  Hidden z(spec.n, spec.m);
  gaussian_matmul(rng, x, 1.0 / std::sqrt(static_cast<double>(spec.n_in)), z);
  return z;
}

}  // namespace

LayerTrajectory forward_mlp(const NetworkSpec& spec, const InputBatch& inputs, std::uint64_t seed,
                            std::uint64_t stream, const SimulationLimits& limits) {
  if (spec.arch != Architecture::ShapedMlp) {
    throw Error(ErrorKind::InvalidArgument, "network_sim", "forward_mlp", "spec.arch must be ShapedMlp");
  }
  spec.validate(limits);
  inputs.validate(spec);
  const ShapingConfig shaping = spec.shaping.with_width(spec.n);
  const ShapedActivation phi(shaping);
  const double c = kernels::he_normalizer(shaping);
  const double n = static_cast<double>(spec.n);

  LayerTrajectory traj;
  traj.seed = seed;
  traj.stream = stream;
  traj.times.reserve(spec.d + 1);
  traj.layers.reserve(spec.d + 1);
  traj.times.push_back(0.0);
  traj.layers.push_back(inputs.covariance());

  Rng rng(seed, stream);
  Hidden z = embed(rng, spec, inputs);
  Hidden act(spec.n, spec.m);
  for (std::size_t layer = 1; layer <= spec.d; ++layer) {
    std::transform(z.values.begin(), z.values.end(), act.values.begin(), [&](double x) { return phi(x); });
    traj.times.push_back(mlp_layer_time(layer, spec));
    traj.layers.push_back(gram(act, c / n));
    if (layer < spec.d) gaussian_matmul(rng, act, std::sqrt(c / n), z);
  }
  return traj;
}

LayerTrajectory forward_resnet(const NetworkSpec& spec, const InputBatch& inputs, std::uint64_t seed,
                               std::uint64_t stream, const ForwardHooks& hooks, const SimulationLimits& limits) {
  if (spec.arch != Architecture::Resnet) {
    throw Error(ErrorKind::InvalidArgument, "network_sim", "forward_resnet", "spec.arch must be Resnet");
  }
  spec.validate(limits);
  inputs.validate(spec);
  const double n = static_cast<double>(spec.n);
  const double d = static_cast<double>(spec.d);
  const double branch_scale = 1.0 / std::sqrt(d * n);

  LayerTrajectory traj;
  traj.seed = seed;
  traj.stream = stream;
  traj.times.reserve(spec.d + 1);
  traj.layers.reserve(spec.d + 1);

  Rng rng(seed, stream);
  Hidden z = embed(rng, spec, inputs);
  traj.times.push_back(0.0);
  traj.layers.push_back(gram(z, 1.0 / n));

  Hidden act(spec.n, spec.m);
  Hidden branch(spec.n, spec.m);
  for (std::size_t layer = 1; layer <= spec.d; ++layer) {
    if (!hooks.zero_residual_weights) {
      std::transform(z.values.begin(), z.values.end(), act.values.begin(), [](double x) { return x > 0.0 ? x : 0.0; });
      gaussian_matmul(rng, act, branch_scale, branch);
      for (std::size_t k = 0; k < z.values.size(); ++k) z.values[k] += branch.values[k];
    }
    traj.times.push_back(static_cast<double>(layer) / d);
    traj.layers.push_back(gram(z, 1.0 / n));
  }
  return traj;
}

Eigen::MatrixXd cov_to_corr(const CovMatrix& v) {
  const std::size_t m = v.dim();
  for (std::size_t a = 0; a < m; ++a) {
    if (!(v(a, a) > 0.0)) {
      throw Error(ErrorKind::DegenerateCovariance, "network_sim", "cov_to_corr",
                  "diagonal entry " + std::to_string(a) + " is not positive");
    }
  }
  Eigen::MatrixXd rho(m, m);
  for (std::size_t a = 0; a < m; ++a) {
    rho(a, a) = 1.0;
    for (std::size_t b = a + 1; b < m; ++b) {
      const double r = kernels::clamp_correlation(v(a, b) / std::sqrt(v(a, a) * v(b, b)), "cov_to_corr");
      rho(a, b) = rho(b, a) = r;
    }
  }
  return rho;
}

PathEnsemble simulate_network_ensemble(const NetworkSpec& spec, const InputBatch& inputs, std::size_t paths,
                                       std::uint64_t seed, unsigned threads, const ForwardHooks& hooks) {
  spec.validate();
  inputs.validate(spec);
  EnsembleMeta meta;
  meta.kind = spec.arch == Architecture::Resnet ? ensemble_kind::kResnet : ensemble_kind::kMlp;
  meta.m = static_cast<std::uint32_t>(spec.m);
  meta.n = static_cast<std::uint32_t>(spec.n);
  meta.d = static_cast<std::uint32_t>(spec.d);
  meta.master_seed = seed;

  std::vector<double> times(spec.d + 1);
  for (std::size_t l = 0; l <= spec.d; ++l) {
    times[l] = spec.arch == Architecture::Resnet ? static_cast<double>(l) / static_cast<double>(spec.d)
                                                  : mlp_layer_time(l, spec);
  }
  PathEnsemble ensemble(meta, std::move(times), CovMatrix::packed_size(spec.m), paths);
  parallel_for(paths, threads, [&](std::size_t path) {
    const std::uint64_t stream = stream_id(stream_purpose::kNetwork, path);
    const LayerTrajectory traj = spec.arch == Architecture::Resnet
                                     ? forward_resnet(spec, inputs, seed, stream, hooks)
                                     : forward_mlp(spec, inputs, seed, stream);
    ensemble.set_stream(path, stream);
    for (std::size_t l = 0; l < traj.layers.size(); ++l) {
      const auto packed = traj.layers[l].packed();
      std::copy(packed.begin(), packed.end(), ensemble.state(path, l).begin());
    }
  });
  return ensemble;
}

}  // namespace covlim
