// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include "covlim/limit_integrators.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "covlim/error.hpp"
#include "covlim/parallel.hpp"
#include "covlim/rng.hpp"

namespace covlim {

void SdeRunConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, "limit_integrators", "SdeRunConfig", what); };
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("SdeRunConfig.dt must be > 0");
  if (!(t0 >= 0.0) || !std::isfinite(t0)) fail("SdeRunConfig.t0 must be >= 0");
  if (!(T > t0) || !std::isfinite(T)) fail("SdeRunConfig.T must exceed t0");
  if (dt > T - t0) fail("SdeRunConfig.dt must not exceed T - t0");
  if (paths == 0) fail("SdeRunConfig.paths must be >= 1");
  if (record_stride == 0) fail("SdeRunConfig.record_stride must be >= 1");
}

std::vector<double> time_grid(double t0, double T, double dt) {
  if (!(dt > 0.0) || !(T > t0)) {
    throw Error(ErrorKind::InvalidArgument, "limit_integrators", "time_grid", "need dt > 0 and T > t0");
  }
  const auto steps = static_cast<std::size_t>(std::ceil((T - t0) / dt - 1e-9));
  std::vector<double> grid(steps + 1);
  for (std::size_t k = 0; k < steps; ++k) grid[k] = t0 + static_cast<double>(k) * dt;
  grid[steps] = T;
  return grid;
}

namespace {

struct Recording {
  std::vector<std::size_t> steps;  // grid indices kept
  std::vector<double> times;
};

Recording recording(const std::vector<double>& grid, std::size_t stride) {
  Recording rec;
  const std::size_t last = grid.size() - 1;
  for (std::size_t k = 0; k <= last; ++k) {
    if (k % stride == 0 || k == last) {
      rec.steps.push_back(k);
      rec.times.push_back(grid[k]);
    }
  }
  return rec;
}

// Correlation of entry (a, b) with the sqrt(V^aa V^bb) scale; zero scale
// returns rho = 0 and the caller multiplies it away.
struct PairGeometry {
  double scale;
  double rho;
};

PairGeometry pair_geometry(const CovMatrix& v, std::size_t a, std::size_t b) {
  const double scale = std::sqrt(std::max(v(a, a), 0.0) * std::max(v(b, b), 0.0));
  if (!(scale > 0.0)) return {0.0, 0.0};
  if (a == b) return {scale, 1.0};
  return {scale, std::clamp(v(a, b) / scale, -1.0, 1.0)};
}

// Cheap PSD test; falls back to an eigenvalue check beyond m = 2.
bool needs_projection(const CovMatrix& v) {
  const std::size_t m = v.dim();
  if (m == 1) return false;
  if (m == 2) {
    const double scale = std::max(1.0, std::max(std::abs(v(0, 0)), std::abs(v(1, 1))));
    const double det = v(0, 0) * v(1, 1) - v(0, 1) * v(0, 1);
    return v(0, 0) < 0.0 || v(1, 1) < 0.0 || det < -kPsdTolerance * scale * scale;
  }
  const Eigen::MatrixXd dense = v.dense();
  return min_eigenvalue(dense) < -kPsdTolerance * std::max(1.0, dense.cwiseAbs().maxCoeff());
}

bool has_nonpositive_diagonal(const CovMatrix& v) {
  for (std::size_t a = 0; a < v.dim(); ++a)
    if (!(v(a, a) > 0.0)) return true;
  return false;
}

bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

CovMatrix cov_sde_drift(const CovMatrix& v, const CovDrift& drift) {
  const std::size_t m = v.dim();
  CovMatrix out(m);
  if (const auto* relu = std::get_if<ReluLikeDrift>(&drift)) {
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a; b < m; ++b) {
        const auto [scale, rho] = pair_geometry(v, a, b);
        out(a, b) = scale > 0.0 ? kernels::nu(rho, relu->c_plus, relu->c_minus) * scale : 0.0;
      }
  } else {
    const auto& shaping = std::get<SmoothShapedDrift>(drift).shaping;
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a; b < m; ++b) out(a, b) = kernels::smooth_drift(v(a, a), v(a, b), v(b, b), shaping);
  }
  return out;
}

Eigen::MatrixXd sigma_matrix(const CovMatrix& v) {
  const std::size_t m = v.dim();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(CovMatrix::packed_size(m));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) pairs.emplace_back(a, b);
  const auto dim = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd sigma(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto [a, b] = pairs[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i; j < dim; ++j) {
      const auto [c, d] = pairs[static_cast<std::size_t>(j)];
      sigma(i, j) = sigma(j, i) = v(a, c) * v(b, d) + v(a, d) * v(b, c);
    }
  }
  return sigma;
}

PathEnsemble integrate_cov_sde(const CovMatrix& v0, const CovDrift& drift, const SdeRunConfig& cfg) {
  cfg.validate();
  if (cfg.scheme != SdeScheme::EulerMaruyama) {
    throw Error(ErrorKind::InvalidArgument, "limit_integrators", "integrate_cov_sde",
                "the covariance SDE supports EulerMaruyama only");
  }
  if (v0.dim() == 0 || needs_projection(v0)) {
    throw Error(ErrorKind::Domain, "limit_integrators", "integrate_cov_sde", "V0 must be a nonempty PSD matrix");
  }
  if (const auto* smooth = std::get_if<SmoothShapedDrift>(&drift)) smooth->shaping.validate();

  const std::vector<double> grid = time_grid(cfg.t0, cfg.T, cfg.dt);
  const Recording rec = recording(grid, cfg.record_stride);
  const std::size_t dim = CovMatrix::packed_size(v0.dim());

  EnsembleMeta meta;
  meta.kind = ensemble_kind::kCovSde;
  meta.m = static_cast<std::uint32_t>(v0.dim());
  meta.master_seed = cfg.seed;
  PathEnsemble ensemble(meta, rec.times, dim, cfg.paths);

  std::atomic<std::uint64_t> projections{0};
  parallel_for(cfg.paths, cfg.threads, [&](std::size_t path) {
    const std::uint64_t stream = stream_id(stream_purpose::kCovSde, path);
    ensemble.set_stream(path, stream);
    Rng rng(cfg.seed, stream);
    CovMatrix v = v0;
    Eigen::VectorXd xi(static_cast<Eigen::Index>(dim));
    PathStatus status = PathStatus::Ok;
    std::uint64_t local_projections = 0;
    std::size_t next_record = 0;

    auto record = [&](std::size_t k) {
      while (next_record < rec.steps.size() && rec.steps[next_record] <= k) {
        const auto packed = v.packed();
        std::copy(packed.begin(), packed.end(), ensemble.state(path, next_record).begin());
        ++next_record;
      }
    };
    record(0);
    for (std::size_t k = 0; k + 1 < grid.size() && status == PathStatus::Ok; ++k) {
      const double h = grid[k + 1] - grid[k];
      const CovMatrix b = cov_sde_drift(v, drift);
      const Eigen::MatrixXd root = psd_sqrt(sigma_matrix(v));
      for (auto& x : xi) x = rng.normal();
      const Eigen::VectorXd noise = root * xi;
      const double sqrt_h = std::sqrt(h);
      auto state = v.packed();
      for (std::size_t i = 0; i < dim; ++i) state[i] += b.packed()[i] * h + noise[static_cast<Eigen::Index>(i)] * sqrt_h;

      if (!all_finite(v.packed())) {
        status = PathStatus::Diverged;
        for (auto& x : v.packed()) x = std::numeric_limits<double>::quiet_NaN();
      } else if (has_nonpositive_diagonal(v)) {
        status = PathStatus::Absorbed;
        for (std::size_t a = 0; a < v.dim(); ++a) v(a, a) = std::max(v(a, a), 0.0);
      } else if (needs_projection(v)) {
        project_psd(v, 0.0);
        ++local_projections;
      }
      record(k + 1);
    }
    record(grid.size());  // frozen state fills the remaining record slots
    ensemble.set_status(path, status);
    projections += local_projections;
  });
  ensemble.counters.steps = static_cast<std::uint64_t>(cfg.paths) * (grid.size() - 1);
  ensemble.counters.psd_projections = projections.load();
  return ensemble;
}

CovMatrix cov_ode_drift(const CovMatrix& v, const OdeDrift& drift) {
  if (const auto* relu = std::get_if<ReluLikeDrift>(&drift)) return cov_sde_drift(v, *relu);
  const std::size_t m = v.dim();
  CovMatrix out(m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      // (1/2) (f(rho)/rho) V^{ab} written as (1/2) f(rho) sqrt(V^aa V^bb), finite at rho = 0
      const auto [scale, rho] = pair_geometry(v, a, b);
      out(a, b) = scale > 0.0 ? 0.5 * kernels::f_resnet(rho) * scale : 0.0;
    }
  return out;
}

PathEnsemble integrate_cov_ode(const CovMatrix& v0, const OdeConfig& cfg) {
  SdeRunConfig shape{cfg.t0, cfg.T, cfg.dt, 1, SdeScheme::EulerMaruyama, 0, cfg.record_stride, 1};
  shape.validate();
  if (v0.dim() == 0 || needs_projection(v0)) {
    throw Error(ErrorKind::Domain, "limit_integrators", "integrate_cov_ode", "V0 must be a nonempty PSD matrix");
  }
  const std::vector<double> grid = time_grid(cfg.t0, cfg.T, cfg.dt);
  const Recording rec = recording(grid, cfg.record_stride);
  const std::size_t dim = CovMatrix::packed_size(v0.dim());

  EnsembleMeta meta;
  meta.kind = ensemble_kind::kCovOde;
  meta.m = static_cast<std::uint32_t>(v0.dim());
  PathEnsemble ensemble(meta, rec.times, dim, 1);

  auto axpy = [dim](const CovMatrix& x, double h, const CovMatrix& y) {
    CovMatrix out = x;
    for (std::size_t i = 0; i < dim; ++i) out.packed()[i] += h * y.packed()[i];
    return out;
  };

  CovMatrix v = v0;
  std::size_t next_record = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (next_record < rec.steps.size() && rec.steps[next_record] == k) {
      const auto packed = v.packed();
      std::copy(packed.begin(), packed.end(), ensemble.state(0, next_record).begin());
      ++next_record;
    }
    if (k + 1 == grid.size()) break;
    const double h = grid[k + 1] - grid[k];
    const CovMatrix k1 = cov_ode_drift(v, cfg.drift);
    const CovMatrix k2 = cov_ode_drift(axpy(v, 0.5 * h, k1), cfg.drift);
    const CovMatrix k3 = cov_ode_drift(axpy(v, 0.5 * h, k2), cfg.drift);
    const CovMatrix k4 = cov_ode_drift(axpy(v, h, k3), cfg.drift);
    for (std::size_t i = 0; i < dim; ++i) {
      v.packed()[i] += h / 6.0 * (k1.packed()[i] + 2.0 * k2.packed()[i] + 2.0 * k3.packed()[i] + k4.packed()[i]);
    }
    if (!all_finite(v.packed())) {
      throw Error(ErrorKind::NonFinite, "limit_integrators", "integrate_cov_ode",
                  "solution became non-finite at t = " + std::to_string(grid[k + 1]));
    }
  }
  ensemble.counters.steps = grid.size() - 1;
  return ensemble;
}

double q_sde_sqrt_coefficient() { return std::numbers::sqrt2 / (3.0 * std::numbers::pi); }

PathEnsemble integrate_q_sde(double r0, const SdeRunConfig& cfg, const QSdeHooks& hooks) {
  cfg.validate();
  if (!std::isfinite(r0)) {
    throw Error(ErrorKind::Domain, "limit_integrators", "integrate_q_sde", "initial r must be finite");
  }
  if (cfg.scheme == SdeScheme::EulerMaruyama && cfg.t0 <= 0.0 && !hooks.freeze_time) {
    throw Error(ErrorKind::Singularity, "limit_integrators", "integrate_q_sde",
                "EulerMaruyama evaluates 1/t at the left end and needs t0 > 0");
  }
  if (hooks.freeze_time && !(*hooks.freeze_time > 0.0)) {
    throw Error(ErrorKind::Singularity, "limit_integrators", "integrate_q_sde", "frozen time must be positive");
  }

  const std::vector<double> grid = time_grid(cfg.t0, cfg.T, cfg.dt);
  const Recording rec = recording(grid, cfg.record_stride);
  const double coef = q_sde_sqrt_coefficient();
  const double vol = 2.0 * std::numbers::sqrt2;

  EnsembleMeta meta;
  meta.kind = ensemble_kind::kQSde;
  meta.m = 2;  // correlation of one input pair, as in the q-chain
  meta.master_seed = cfg.seed;
  PathEnsemble ensemble(meta, rec.times, 2, cfg.paths);

  std::atomic<std::uint64_t> reflections{0};
  parallel_for(cfg.paths, cfg.threads, [&](std::size_t path) {
    const std::uint64_t stream = stream_id(stream_purpose::kQSde, path);
    ensemble.set_stream(path, stream);
    Rng rng(cfg.seed, stream);
    double r = r0;
    double q = std::exp(r0);
    PathStatus status = PathStatus::Ok;
    std::uint64_t local_reflections = 0;
    std::size_t next_record = 0;
    auto record = [&](std::size_t k) {
      while (next_record < rec.steps.size() && rec.steps[next_record] <= k) {
        auto s = ensemble.state(path, next_record);
        s[0] = q;
        s[1] = r;
        ++next_record;
      }
    };
    record(0);
    for (std::size_t k = 0; k + 1 < grid.size() && status == PathStatus::Ok; ++k) {
      const double h = grid[k + 1] - grid[k];
      const double xi = hooks.noise ? rng.normal() : 0.0;
      if (cfg.scheme == SdeScheme::LogEulerShifted) {
        const double t_eval = hooks.freeze_time ? *hooks.freeze_time : grid[k + 1];
        const double singular = (1.0 - coef * std::exp(0.5 * r)) / t_eval;
        const double drift = hooks.isolate_singular_term ? 2.0 * singular : -2.0 * (1.0 - singular);
        r += drift * h + vol * xi * std::sqrt(h);
        q = std::exp(r);
      } else {
        const double t_eval = hooks.freeze_time ? *hooks.freeze_time : grid[k];
        const double singular = (1.0 - coef * std::sqrt(q)) / t_eval;
        const double drift = hooks.isolate_singular_term ? 2.0 * q * singular : 2.0 * q * (singular + 1.0);
        q += drift * h + vol * q * xi * std::sqrt(h);
        if (q < 0.0) {
          q = -q;
          ++local_reflections;
        }
        r = std::log(q);
        if (q == 0.0) status = PathStatus::Absorbed;
      }
      if (!std::isfinite(q) && !(q == 0.0)) {
        status = PathStatus::Diverged;
        q = r = std::numeric_limits<double>::quiet_NaN();
      }
      record(k + 1);
    }
    record(grid.size());
    ensemble.set_status(path, status);
    reflections += local_reflections;
  });
  ensemble.counters.steps = static_cast<std::uint64_t>(cfg.paths) * (grid.size() - 1);
  ensemble.counters.reflections = reflections.load();
  return ensemble;
}

}  // namespace covlim
