// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include "covlim/covariance_chain.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "covlim/error.hpp"
#include "covlim/limit_integrators.hpp"
#include "covlim/network_sim.hpp"
#include "covlim/parallel.hpp"

namespace covlim {

CovMatrix step_cov_chain(const CovMatrix& v, std::size_t n, const ShapingConfig& shaping, Rng& rng) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "covariance_chain", "step_cov_chain", "n must be positive");
  const std::size_t m = v.dim();
  const Eigen::MatrixXd factor = psd_factor(v.dense());
  const ShapedActivation phi(shaping);
  const double c = kernels::he_normalizer(shaping);

  // Row-major copy of the factor; the inner loop is plain arithmetic.
  std::vector<double> f(m * m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) f[a * m + b] = factor(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));

  std::vector<double> g(m), act(m), acc(CovMatrix::packed_size(m), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& x : g) x = rng.normal();
    for (std::size_t a = 0; a < m; ++a) {
      double z = 0.0;
      for (std::size_t b = 0; b < m; ++b) z += f[a * m + b] * g[b];
      act[a] = phi(z);
    }
    std::size_t k = 0;
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a; b < m; ++b) acc[k++] += act[a] * act[b];
  }
  for (auto& x : acc) x *= c / static_cast<double>(n);
  return CovMatrix::from_packed(m, std::move(acc));
}

CorrStep step_corr_chain(double rho, std::size_t n, Rng& rng, const CorrChainOptions& options) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "covariance_chain", "step_corr_chain", "n must be positive");
  rho = kernels::clamp_correlation(rho, "step_corr_chain");
  constexpr double c = 2.0;
  double next = c * kernels::kernel_k(1, 1, rho);
  if (!options.infinite_width) {
    const auto coeffs = kernels::mu_sigma_correlation(rho, c);
    const double nn = static_cast<double>(n);
    next += coeffs.mu_r / nn + std::sqrt(std::max(coeffs.sigma_r2, 0.0)) * rng.standardized(options.noise) / std::sqrt(nn);
  }
  CorrStep step;
  step.clamped = next > 1.0 || next < -1.0;
  step.rho = std::clamp(next, -1.0, 1.0);
  return step;
}

void QChainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, "covariance_chain", "run_q_chain", what); };
  if (!(rho0 > -1.0 && rho0 < 1.0)) fail("rho0 must lie in (-1, 1)");
  if (n == 0 || d == 0 || paths == 0) fail("n, d and paths must be positive");
  if (d > n * max_depth_ratio) {
    throw Error(ErrorKind::Limits, "covariance_chain", "run_q_chain", "depth exceeds n * max_depth_ratio");
  }
}

PathEnsemble run_q_chain(const QChainConfig& cfg) {
  cfg.validate();
  EnsembleMeta meta;
  meta.kind = ensemble_kind::kQChain;
  meta.m = 2;
  meta.n = static_cast<std::uint32_t>(cfg.n);
  meta.d = static_cast<std::uint32_t>(cfg.d);
  meta.master_seed = cfg.seed;
  std::vector<double> times(cfg.d);
  for (std::size_t l = 1; l <= cfg.d; ++l) times[l - 1] = static_cast<double>(l) / static_cast<double>(cfg.n);
  PathEnsemble ensemble(meta, std::move(times), 2, cfg.paths);

  const ShapingConfig relu = ShapingConfig::unshaped();
  std::atomic<std::uint64_t> clamps{0};
  parallel_for(cfg.paths, cfg.threads, [&](std::size_t path) {
    const std::uint64_t stream = stream_id(
        cfg.mode == QChainMode::Exact ? stream_purpose::kCovChain : stream_purpose::kCorrChain, path);
    ensemble.set_stream(path, stream);
    Rng rng(cfg.seed, stream);
    CovMatrix v = CovMatrix::equicorrelated(2, cfg.rho0);
    double rho = cfg.rho0;
    bool absorbed = false;
    std::uint64_t local_clamps = 0;
    for (std::size_t l = 1; l <= cfg.d; ++l) {
      auto state = ensemble.state(path, l - 1);
      if (absorbed) {
        state[0] = 0.0;
        state[1] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      if (cfg.mode == QChainMode::Exact) {
        v = step_cov_chain(v, cfg.n, relu, rng);
        rho = std::min(1.0, v(0, 1) / std::sqrt(v(0, 0) * v(1, 1)));
      } else {
        const CorrStep step = step_corr_chain(rho, cfg.n, rng, cfg.options);
        rho = step.rho;
        local_clamps += step.clamped ? 1 : 0;
      }
      const double ll = static_cast<double>(l);
      const double q = ll * ll * (1.0 - rho);
      if (!(q > 0.0)) {
        absorbed = true;
        ensemble.set_status(path, PathStatus::Absorbed);
        state[0] = 0.0;
        state[1] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      state[0] = q;
      state[1] = std::log(q);
    }
    clamps += local_clamps;
  });
  ensemble.counters.steps = static_cast<std::uint64_t>(cfg.paths) * cfg.d;
  ensemble.counters.clamp_events = clamps.load();
  return ensemble;
}

CovMatrix step_shaped_cov_chain(const CovMatrix& v, std::size_t n, std::size_t d, const ShapingConfig& shaping,
                                Rng& rng, const ShapedChainOptions& options) {
  if (shaping.kind != ShapingKind::ReluLike || !(shaping.p > 0.0 && shaping.p <= 0.5)) {
    throw Error(ErrorKind::Domain, "covariance_chain", "step_shaped_cov_chain",
                "requires ReLU-like shaping with ShapingConfig.p in (0, 1/2]");
  }
  if (n == 0 || d == 0) {
    throw Error(ErrorKind::InvalidArgument, "covariance_chain", "step_shaped_cov_chain", "n and d must be positive");
  }
  const std::size_t dim = CovMatrix::packed_size(v.dim());
  const CovMatrix drift = cov_sde_drift(v, ReluLikeDrift{shaping.c_plus, shaping.c_minus});
  CovMatrix next = v;
  const double inv_d = 1.0 / static_cast<double>(d);
  for (std::size_t i = 0; i < dim; ++i) next.packed()[i] += drift.packed()[i] * inv_d;
  if (options.noise) {
    const Eigen::MatrixXd root = psd_sqrt(sigma_matrix(v));
    if (!root.allFinite()) {
      throw Error(ErrorKind::Factorization, "covariance_chain", "step_shaped_cov_chain", "Sigma(V) root is not finite");
    }
    Eigen::VectorXd xi(static_cast<Eigen::Index>(dim));
    for (auto& x : xi) x = rng.standardized(options.noise_kind);
    const Eigen::VectorXd noise = root * xi / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < dim; ++i) next.packed()[i] += noise[static_cast<Eigen::Index>(i)];
  }
  return next;
}

PathEnsemble run_cov_chain(const CovMatrix& v0, std::size_t n, std::size_t d, const ShapingConfig& shaping,
                           std::size_t paths, std::uint64_t seed, unsigned threads) {
  if (n == 0 || d == 0 || paths == 0) {
    throw Error(ErrorKind::InvalidArgument, "covariance_chain", "run_cov_chain", "n, d and paths must be positive");
  }
  const ShapingConfig resolved = shaping.with_width(n);
  resolved.validate();
  NetworkSpec timing;
  timing.n = n;
  timing.d = d;
  timing.shaping = resolved;

  EnsembleMeta meta;
  meta.kind = ensemble_kind::kCovChain;
  meta.m = static_cast<std::uint32_t>(v0.dim());
  meta.n = static_cast<std::uint32_t>(n);
  meta.d = static_cast<std::uint32_t>(d);
  meta.master_seed = seed;
  std::vector<double> times(d + 1);
  for (std::size_t l = 0; l <= d; ++l) times[l] = mlp_layer_time(l, timing);
  PathEnsemble ensemble(meta, std::move(times), CovMatrix::packed_size(v0.dim()), paths);

  parallel_for(paths, threads, [&](std::size_t path) {
    const std::uint64_t stream = stream_id(stream_purpose::kCovChain, path);
    ensemble.set_stream(path, stream);
    Rng rng(seed, stream);
    CovMatrix v = v0;
    for (std::size_t l = 0; l <= d; ++l) {
      if (l > 0) v = step_cov_chain(v, n, resolved, rng);
      const auto packed = v.packed();
      std::copy(packed.begin(), packed.end(), ensemble.state(path, l).begin());
    }
  });
  ensemble.counters.steps = static_cast<std::uint64_t>(paths) * d;
  return ensemble;
}

PathEnsemble run_shaped_cov_chain(const CovMatrix& v0, std::size_t n, std::size_t d, const ShapingConfig& shaping,
                                  std::size_t paths, std::uint64_t seed, const ShapedChainOptions& options,
                                  unsigned threads) {
  if (paths == 0 || d == 0) {
    throw Error(ErrorKind::InvalidArgument, "covariance_chain", "run_shaped_cov_chain", "d and paths must be positive");
  }
  EnsembleMeta meta;
  meta.kind = ensemble_kind::kShapedChain;
  meta.m = static_cast<std::uint32_t>(v0.dim());
  meta.n = static_cast<std::uint32_t>(n);
  meta.d = static_cast<std::uint32_t>(d);
  meta.master_seed = seed;
  std::vector<double> times(d + 1);
  for (std::size_t l = 0; l <= d; ++l) times[l] = static_cast<double>(l) / static_cast<double>(d);
  PathEnsemble ensemble(meta, std::move(times), CovMatrix::packed_size(v0.dim()), paths);

  std::atomic<std::uint64_t> projections{0};
  parallel_for(paths, threads, [&](std::size_t path) {
    const std::uint64_t stream = stream_id(stream_purpose::kShapedChain, path);
    ensemble.set_stream(path, stream);
    Rng rng(seed, stream);
    CovMatrix v = v0;
    for (std::size_t l = 0; l <= d; ++l) {
      if (l > 0) {
        v = step_shaped_cov_chain(v, n, d, shaping, rng, options);
        if (project_psd(v)) ++projections;
      }
      const auto packed = v.packed();
      std::copy(packed.begin(), packed.end(), ensemble.state(path, l).begin());
    }
  });
  ensemble.counters.steps = static_cast<std::uint64_t>(paths) * d;
  ensemble.counters.psd_projections = projections.load();
  return ensemble;
}

}  // namespace covlim
