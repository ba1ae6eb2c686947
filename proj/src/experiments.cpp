// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include "covlim/experiments.hpp"

#include <boost/version.hpp>
#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "covlim/covariance_chain.hpp"
#include "covlim/error.hpp"
#include "covlim/gaussian_kernels.hpp"
#include "covlim/limit_integrators.hpp"
#include "covlim/network_sim.hpp"

#ifndef COVLIM_VERSION
#define COVLIM_VERSION "0.0.0"
#endif

namespace covlim {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string library_version() { return COVLIM_VERSION; }

KernelTable tabulate_kernels(const KernelsConfig& cfg) {
  if (cfg.grid < 2) throw Error(ErrorKind::InvalidArgument, "cli", "kernels", "grid needs at least two points");
  KernelTable t;
  const std::size_t g = cfg.grid;
  for (std::size_t i = 0; i < g; ++i) {
    const double rho = i + 1 == g ? 1.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(g - 1);
    t.rho.push_back(rho);
    t.k0.push_back(kernels::kernel_k(0, 0, rho));
    t.k1.push_back(kernels::kernel_k(1, 1, rho));
    t.k2.push_back(kernels::kernel_k(2, 2, rho));
    t.k31.push_back(kernels::kernel_k(3, 1, rho));
    t.nu.push_back(kernels::nu(rho, 1.0, 0.0));
    t.f.push_back(kernels::f_resnet(rho));
    t.d0.push_back(t.k0.back() - kernels::kernel_oracle(0, 0, rho, cfg.oracle_budget).value);
    t.d1.push_back(t.k1.back() - kernels::kernel_oracle(1, 1, rho, cfg.oracle_budget).value);
    t.d2.push_back(t.k2.back() - kernels::kernel_oracle(2, 2, rho, cfg.oracle_budget).value);
    t.d31.push_back(t.k31.back() - kernels::kernel_oracle(3, 1, rho, cfg.oracle_budget).value);
    for (double d : {t.d0.back(), t.d1.back(), t.d2.back(), t.d31.back()})
      t.max_abs_delta = std::max(t.max_abs_delta, std::abs(d));
  }
  return t;
}

std::string structural_family(const std::string& kind) {
  if (kind == ensemble_kind::kMlp || kind == ensemble_kind::kCovChain || kind == ensemble_kind::kShapedChain ||
      kind == ensemble_kind::kCovSde) {
    return "shaped_mlp";
  }
  if (kind == ensemble_kind::kResnet || kind == ensemble_kind::kCovOde) return "resnet";
  if (kind == ensemble_kind::kQChain || kind == ensemble_kind::kQSde) return "rescaled_correlation";
  return "unknown";
}

namespace {

std::size_t nearest_step(const PathEnsemble& e, std::optional<double> time) {
  if (e.steps() == 0) throw Error(ErrorKind::InvalidArgument, "cli", "compare", "ensemble has no time points");
  if (!time) return e.steps() - 1;
  std::size_t best = 0;
  for (std::size_t s = 1; s < e.steps(); ++s) {
    if (std::abs(e.times()[s] - *time) <= std::abs(e.times()[best] - *time)) best = s;
  }
  return best;
}

}  // namespace

SampleSet select_samples(const PathEnsemble& e, const SampleSelection& sel, std::string label, std::size_t* excluded) {
  const std::size_t step = nearest_step(e, sel.time);
  const bool cov = is_covariance_kind(e.meta().kind);
  const bool wants_cov = sel.quantity == CompareQuantity::V || sel.quantity == CompareQuantity::Rho ||
                         sel.quantity == CompareQuantity::LogV;
  if (cov != wants_cov) {
    throw Error(ErrorKind::InvalidArgument, "cli", "select_samples",
                "quantity does not apply to a " + e.meta().kind + " ensemble");
  }
  const std::size_t m = e.meta().m;
  if (cov && (sel.pair_a >= m || sel.pair_b >= m)) {
    throw Error(ErrorKind::InvalidArgument, "cli", "select_samples", "pair index out of range");
  }
  SampleSet out;
  out.label = std::move(label);
  out.source = e.meta().kind;
  out.config_hash = e.meta().config_hash;
  std::size_t skipped = 0;
  for (std::size_t p = 0; p < e.paths(); ++p) {
    double v = std::numeric_limits<double>::quiet_NaN();
    if (e.status(p) == PathStatus::Ok) {
      switch (sel.quantity) {
        case CompareQuantity::V: v = e.value(p, step, CovMatrix::flat_index(sel.pair_a, sel.pair_b, m)); break;
        case CompareQuantity::LogV: v = std::log(e.value(p, step, CovMatrix::flat_index(sel.pair_a, sel.pair_b, m))); break;
        case CompareQuantity::Rho: {
          const double vab = e.value(p, step, CovMatrix::flat_index(sel.pair_a, sel.pair_b, m));
          const double vaa = e.value(p, step, CovMatrix::flat_index(sel.pair_a, sel.pair_a, m));
          const double vbb = e.value(p, step, CovMatrix::flat_index(sel.pair_b, sel.pair_b, m));
          v = vab / std::sqrt(vaa * vbb);
          break;
        }
        case CompareQuantity::Q: v = e.value(p, step, 0); break;
        case CompareQuantity::R: v = e.value(p, step, 1); break;
      }
    }
    if (std::isfinite(v)) {
      out.values.push_back(v);
    } else {
      ++skipped;
    }
  }
  if (excluded) *excluded = skipped;
  return out;
}

ComparisonReport compare_ensembles(const PathEnsemble& a, const PathEnsemble& b, const SampleSelection& sel) {
  if (a.meta().m != b.meta().m) {
    throw Error(ErrorKind::InvalidArgument, "cli", "compare",
                "ensembles have different input counts m (" + std::to_string(a.meta().m) + " vs " +
                    std::to_string(b.meta().m) + ")");
  }
  const std::string fa = structural_family(a.meta().kind);
  const std::string fb = structural_family(b.meta().kind);
  if (fa != fb || fa == "unknown") {
    throw Error(ErrorKind::InvalidArgument, "cli", "compare",
                "ensembles describe different architectures (" + a.meta().kind + " vs " + b.meta().kind + ")");
  }
  return compare_samples(select_samples(a, sel, a.meta().kind), select_samples(b, sel, b.meta().kind));
}

Fig1Result run_fig1(const Fig1Config& cfg, std::uint64_t seed, unsigned threads) {
  Fig1Result out;
  QChainConfig chain;
  chain.rho0 = cfg.rho0;
  chain.n = cfg.n;
  chain.d = cfg.d;
  chain.paths = cfg.paths;
  chain.seed = seed;
  chain.mode = cfg.mode;
  chain.threads = threads;
  out.chain = run_q_chain(chain);

  SdeRunConfig sde;
  sde.t0 = 0.0;
  sde.T = static_cast<double>(cfg.d) / static_cast<double>(cfg.n);
  sde.dt = cfg.dt;
  sde.paths = cfg.paths;
  sde.scheme = SdeScheme::LogEulerShifted;
  sde.seed = seed;
  sde.threads = threads;
  out.sde = integrate_q_sde(cfg.r0.value_or(std::log(1.0 - cfg.rho0)), sde);

  SampleSelection sel;
  sel.quantity = CompareQuantity::R;
  out.report = compare_samples(select_samples(out.chain, sel, "q_chain", &out.chain_excluded),
                               select_samples(out.sde, sel, "q_sde", &out.sde_excluded));
  return out;
}

OdeVsResnetResult run_ode_vs_resnet(const OdeVsResnetConfig& cfg, std::uint64_t seed, unsigned threads) {
  OdeVsResnetResult out;
  NetworkSpec spec;
  spec.arch = Architecture::Resnet;
  spec.n_in = cfg.n;
  spec.n = cfg.n;
  spec.d = cfg.d;
  spec.m = 2;
  const CovMatrix v0 = CovMatrix::equicorrelated(2, cfg.rho0);
  out.resnet = simulate_network_ensemble(spec, InputBatch::with_covariance(v0, spec.n_in), cfg.paths, seed, threads);

  OdeConfig ode;
  ode.T = 1.0;
  ode.dt = cfg.dt;
  ode.drift = ResnetOdeDrift{};
  out.ode = integrate_cov_ode(v0, ode);

  const auto& ode_t = out.ode.times();
  auto ode_rho_at = [&](double t) {
    // Linear interpolation of the ODE correlation between grid points.
    auto it = std::lower_bound(ode_t.begin(), ode_t.end(), t);
    std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - ode_t.begin()), ode_t.size() - 1);
    std::size_t lo = hi == 0 ? 0 : hi - 1;
    auto rho = [&](std::size_t s) {
      return out.ode.value(0, s, 1) / std::sqrt(out.ode.value(0, s, 0) * out.ode.value(0, s, 2));
    };
    if (hi == lo || ode_t[hi] == ode_t[lo]) return rho(hi);
    const double w = std::clamp((t - ode_t[lo]) / (ode_t[hi] - ode_t[lo]), 0.0, 1.0);
    return (1.0 - w) * rho(lo) + w * rho(hi);
  };

  const std::size_t paths = out.resnet.paths();
  for (std::size_t l = 0; l < out.resnet.steps(); ++l) {
    const double t = out.resnet.times()[l];
    const auto rho = out.resnet.correlation_slice(l, 0, 1);
    double mean = 0.0, ratio = 0.0;
    for (std::size_t p = 0; p < paths; ++p) {
      mean += rho[p];
      ratio += out.resnet.value(p, l, 0) / out.resnet.value(p, 0, 0);
    }
    out.times.push_back(t);
    out.mean_rho.push_back(mean / static_cast<double>(paths));
    out.ode_rho.push_back(ode_rho_at(t));
    out.mean_diag_ratio.push_back(ratio / static_cast<double>(paths));
    out.max_layer_deviation = std::max(out.max_layer_deviation, std::abs(out.mean_rho.back() - out.ode_rho.back()));
  }
  for (double t : out.checkpoints) {
    const auto l = static_cast<std::size_t>(std::lround(t * static_cast<double>(cfg.d)));
    out.checkpoint_deviation.push_back(std::abs(out.mean_rho[l] - out.ode_rho[l]));
  }
  const std::size_t last = out.resnet.steps() - 1;
  std::vector<double> ratios(paths);
  for (std::size_t p = 0; p < paths; ++p) ratios[p] = out.resnet.value(p, last, 0) / out.resnet.value(p, 0, 0);
  SampleSet rs{ratios, "diag_ratio", "resnet", 0};
  const Summary s = summarize(rs);
  out.diagonal_ratio = s.mean;
  out.diagonal_ratio_se = s.standard_error();
  return out;
}

ShapedVsSdeResult run_shaped_vs_sde(const ShapedVsSdeConfig& cfg, std::uint64_t seed, unsigned threads) {
  ShapedVsSdeResult out;
  const CovMatrix v0 = CovMatrix::equicorrelated(2, cfg.rho0);
  const ShapingConfig shaping = ShapingConfig::relu_like(cfg.c_plus, cfg.c_minus, 0.5, cfg.n);
  out.chain = run_cov_chain(v0, cfg.n, cfg.d, shaping, cfg.paths, seed, threads);

  SdeRunConfig sde;
  sde.T = static_cast<double>(cfg.d) / static_cast<double>(cfg.n);
  sde.dt = cfg.dt;
  sde.paths = cfg.paths;
  sde.seed = seed;
  sde.threads = threads;
  // Record roughly one point per chain layer.
  sde.record_stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(sde.T / cfg.dt / static_cast<double>(cfg.d))));
  out.sde = integrate_cov_sde(v0, ReluLikeDrift{cfg.c_plus, cfg.c_minus}, sde);

  SampleSelection sel;
  sel.quantity = CompareQuantity::V;
  out.report = compare_samples(select_samples(out.chain, sel, "cov_chain"), select_samples(out.sde, sel, "cov_sde"));
  return out;
}

// --- runner -----------------------------------------------------------------

fs::path resolve_output_dir(const ExperimentConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  const char* root = std::getenv("COVLIM_OUTPUT_ROOT");
  return fs::path(root && *root ? root : "covlim-runs") / std::string(to_string(cfg.kind));
}

namespace {

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

class Artifacts {
 public:
  Artifacts(fs::path dir, std::uint64_t hash) : dir_(std::move(dir)), hash_(hash) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::Io, "cli", "run", "cannot create " + dir_.string() + ": " + ec.message());
  }

  void text(const std::string& name, const std::string& body) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    out << body;
    if (!out) throw Error(ErrorKind::Io, "cli", "run", "cannot write " + (dir_ / name).string());
    checksums_.push_back({name, fnv1a(body)});
  }

  // CSV with a leading "# config_hash=" comment line.
  void csv(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ostringstream s;
    s << "# config_hash=" << hash_hex(hash_) << '\n';
    body(s);
    text(name, s.str());
  }

  void json(const std::string& name, const Json& body) {
    Json j;
    j["config_hash"] = hash_hex(hash_);
    for (const auto& item : body.items()) j[item.key()] = item.value();
    text(name, j.dump(2) + "\n");
  }

  void binary(const std::string& name, PathEnsemble& e) {
    e.meta().config_hash = hash_;
    std::ostringstream s(std::ios::binary);
    write_binary(e, s);
    text(name, s.str());
  }

  const fs::path& dir() const { return dir_; }
  std::uint64_t hash() const { return hash_; }
  const std::vector<std::pair<std::string, std::uint64_t>>& checksums() const { return checksums_; }

 private:
  fs::path dir_;
  std::uint64_t hash_;
  std::vector<std::pair<std::string, std::uint64_t>> checksums_;
};

Json counters_json(const PathEnsemble& e) {
  std::size_t absorbed = 0, diverged = 0;
  for (std::size_t p = 0; p < e.paths(); ++p) {
    absorbed += e.status(p) == PathStatus::Absorbed;
    diverged += e.status(p) == PathStatus::Diverged;
  }
  const double steps = static_cast<double>(std::max<std::uint64_t>(e.counters.steps, 1));
  return Json{{"kind", e.meta().kind},
              {"paths", e.paths()},
              {"time_points", e.steps()},
              {"absorbed_paths", absorbed},
              {"diverged_paths", diverged},
              {"steps", e.counters.steps},
              {"clamp_events", e.counters.clamp_events},
              {"clamp_rate", static_cast<double>(e.counters.clamp_events) / steps},
              {"psd_projections", e.counters.psd_projections},
              {"psd_projection_rate", static_cast<double>(e.counters.psd_projections) / steps},
              {"reflections", e.counters.reflections}};
}

// Per time point means over Ok paths with finite values.
void write_means(const PathEnsemble& e, std::ostream& out) {
  const bool cov = is_covariance_kind(e.meta().kind);
  const std::size_t m = e.meta().m;
  if (cov) {
    out << "layer,t,pair,mean_V,mean_rho,paths\n";
  } else {
    out << "layer,t,mean_q,mean_r,paths\n";
  }
  for (std::size_t s = 0; s < e.steps(); ++s) {
    if (cov) {
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a; b < m; ++b) {
          const std::size_t k = CovMatrix::flat_index(a, b, m);
          double sv = 0.0, sr = 0.0;
          std::size_t count = 0;
          for (std::size_t p = 0; p < e.paths(); ++p) {
            if (e.status(p) != PathStatus::Ok) continue;
            const double v = e.value(p, s, k);
            const double r = v / std::sqrt(e.value(p, s, CovMatrix::flat_index(a, a, m)) *
                                           e.value(p, s, CovMatrix::flat_index(b, b, m)));
            if (!std::isfinite(v) || !std::isfinite(r)) continue;
            sv += v;
            sr += r;
            ++count;
          }
          const double c = static_cast<double>(std::max<std::size_t>(count, 1));
          out << s << ',' << format_double(e.times()[s]) << ',' << k << ',' << format_double(sv / c) << ','
              << format_double(sr / c) << ',' << count << '\n';
        }
    } else {
      double sq = 0.0, sr = 0.0;
      std::size_t count = 0;
      for (std::size_t p = 0; p < e.paths(); ++p) {
        const double q = e.value(p, s, 0);
        const double r = e.value(p, s, 1);
        if (e.status(p) != PathStatus::Ok || !std::isfinite(q) || !std::isfinite(r)) continue;
        sq += q;
        sr += r;
        ++count;
      }
      const double c = static_cast<double>(std::max<std::size_t>(count, 1));
      out << s << ',' << format_double(e.times()[s]) << ',' << format_double(sq / c) << ',' << format_double(sr / c)
          << ',' << count << '\n';
    }
  }
}

void emit_ensemble(Artifacts& art, const OutputFormats& formats, const std::string& stem, PathEnsemble& e) {
  if (formats.binary) art.binary(stem + ".bin", e);
  if (formats.csv) {
    art.csv(stem + ".csv", [&](std::ostream& out) { write_csv(e, out); });
    art.csv(stem + "_means.csv", [&](std::ostream& out) { write_means(e, out); });
  }
}

void emit_report(Artifacts& art, ComparisonReport report, const std::string& stem) {
  report.config_hash = art.hash();
  art.text(stem + ".json", to_json(report));
  art.csv(stem + "_kde.csv", [&](std::ostream& out) { write_kde_csv(report, out); });
}

Json report_summary(const ComparisonReport& r) {
  return Json{{"ks", r.ks},
              {"count_a", r.summary_a.count},
              {"count_b", r.summary_b.count},
              {"mean_a", r.summary_a.mean},
              {"mean_b", r.summary_b.mean},
              {"variance_a", r.summary_a.variance},
              {"variance_b", r.summary_b.variance}};
}

Json run_kind(const ExperimentConfig& cfg, Artifacts& art) {
  const std::uint64_t seed = cfg.seed;
  switch (cfg.kind) {
    case ExperimentKind::Kernels: {
      const KernelTable t = tabulate_kernels(cfg.kernels);
      art.csv("kernels.csv", [&](std::ostream& out) {
        out << "rho,K0,K1,K2,K31,nu,f,dK0,dK1,dK2,dK31\n";
        for (std::size_t i = 0; i < t.rho.size(); ++i) {
          for (double v : {t.rho[i], t.k0[i], t.k1[i], t.k2[i], t.k31[i], t.nu[i], t.f[i], t.d0[i], t.d1[i], t.d2[i]})
            out << format_double(v) << ',';
          out << format_double(t.d31[i]) << '\n';
        }
      });
      return Json{{"grid", t.rho.size()}, {"oracle_budget", cfg.kernels.oracle_budget}, {"max_abs_delta", t.max_abs_delta}};
    }
    case ExperimentKind::SimulateNetwork: {
      const auto& net = cfg.network;
      const InputBatch inputs = InputBatch::with_covariance(net.input.covariance(net.spec.m), net.spec.n_in);
      PathEnsemble e = simulate_network_ensemble(net.spec, inputs, net.paths, seed, cfg.threads);
      emit_ensemble(art, cfg.formats, "network", e);
      return counters_json(e);
    }
    case ExperimentKind::SimulateChain: {
      const auto& c = cfg.chain;
      PathEnsemble e;
      if (c.kind == ChainKind::Covariance) {
        e = run_cov_chain(c.input.covariance(c.m), c.n, c.d, c.shaping, c.paths, seed, cfg.threads);
      } else if (c.kind == ChainKind::Shaped) {
        e = run_shaped_cov_chain(c.input.covariance(c.m), c.n, c.d, c.shaping.with_width(c.n), c.paths, seed,
                                 ShapedChainOptions{c.noise, c.noise_kind}, cfg.threads);
      } else {
        QChainConfig q;
        q.rho0 = c.input.rho0;
        q.n = c.n;
        q.d = c.d;
        q.paths = c.paths;
        q.seed = seed;
        q.mode = c.mode;
        q.options = CorrChainOptions{c.noise_kind, c.infinite_width};
        q.max_depth_ratio = c.max_depth_ratio;
        q.threads = cfg.threads;
        e = run_q_chain(q);
      }
      emit_ensemble(art, cfg.formats, "chain", e);
      return counters_json(e);
    }
    case ExperimentKind::IntegrateLimit: {
      const auto& c = cfg.limit;
      SdeRunConfig sde = c.sde;
      sde.seed = seed;
      sde.threads = cfg.threads;
      PathEnsemble e;
      if (c.kind == LimitKind::CovSde) {
        const CovDrift drift = c.drift == DriftKind::Smooth ? CovDrift{SmoothShapedDrift{c.shaping}}
                                                            : CovDrift{ReluLikeDrift{c.shaping.c_plus, c.shaping.c_minus}};
        e = integrate_cov_sde(c.input.covariance(c.m), drift, sde);
      } else if (c.kind == LimitKind::CovOde) {
        OdeConfig ode;
        ode.t0 = sde.t0;
        ode.T = sde.T;
        ode.dt = sde.dt;
        ode.record_stride = sde.record_stride;
        ode.drift = c.drift == DriftKind::Resnet ? OdeDrift{ResnetOdeDrift{}}
                                                 : OdeDrift{ReluLikeDrift{c.shaping.c_plus, c.shaping.c_minus}};
        e = integrate_cov_ode(c.input.covariance(c.m), ode);
      } else {
        QSdeHooks hooks;
        hooks.noise = c.noise;
        e = integrate_q_sde(c.r0.value_or(std::log(1.0 - c.input.rho0)), sde, hooks);
      }
      emit_ensemble(art, cfg.formats, "limit", e);
      return counters_json(e);
    }
    case ExperimentKind::Compare: {
      const PathEnsemble a = read_binary(fs::path(cfg.compare.a));
      const PathEnsemble b = read_binary(fs::path(cfg.compare.b));
      const SampleSelection sel{cfg.compare.time, cfg.compare.quantity, cfg.compare.pair_a, cfg.compare.pair_b};
      const ComparisonReport report = compare_ensembles(a, b, sel);
      emit_report(art, report, "comparison");
      return report_summary(report);
    }
    case ExperimentKind::ReproduceFig1: {
      Fig1Result r = run_fig1(cfg.fig1, seed, cfg.threads);
      if (cfg.formats.binary) {
        art.binary("q_chain.bin", r.chain);
        art.binary("q_sde.bin", r.sde);
      }
      if (cfg.formats.csv) {
        art.csv("q_chain_means.csv", [&](std::ostream& out) { write_means(r.chain, out); });
        art.csv("q_sde_means.csv", [&](std::ostream& out) { write_means(r.sde, out); });
      }
      emit_report(art, r.report, "terminal_r");
      Json s = report_summary(r.report);
      s["chain_excluded"] = r.chain_excluded;
      s["sde_excluded"] = r.sde_excluded;
      s["chain"] = counters_json(r.chain);
      return s;
    }
    case ExperimentKind::OdeVsResnet: {
      OdeVsResnetResult r = run_ode_vs_resnet(cfg.ode_vs_resnet, seed, cfg.threads);
      if (cfg.formats.binary) {
        art.binary("resnet.bin", r.resnet);
        art.binary("ode.bin", r.ode);
      }
      art.csv("rho_curve.csv", [&](std::ostream& out) {
        out << "layer,t,mean_rho,ode_rho,abs_deviation,mean_diag_ratio,ode_diag_ratio\n";
        for (std::size_t l = 0; l < r.times.size(); ++l) {
          out << l << ',' << format_double(r.times[l]) << ',' << format_double(r.mean_rho[l]) << ','
              << format_double(r.ode_rho[l]) << ',' << format_double(std::abs(r.mean_rho[l] - r.ode_rho[l])) << ','
              << format_double(r.mean_diag_ratio[l]) << ',' << format_double(std::exp(r.times[l] / 2.0)) << '\n';
        }
      });
      Json checkpoints = Json::array();
      for (std::size_t i = 0; i < r.checkpoints.size(); ++i)
        checkpoints.push_back({{"t", r.checkpoints[i]}, {"abs_deviation", r.checkpoint_deviation[i]}});
      Json s{{"checkpoints", checkpoints},
             {"max_layer_deviation", r.max_layer_deviation},
             {"diagonal_ratio", r.diagonal_ratio},
             {"diagonal_ratio_se", r.diagonal_ratio_se},
             {"diagonal_ratio_target", std::exp(0.5)}};
      art.json("report.json", s);
      return s;
    }
    case ExperimentKind::ShapedVsSde: {
      ShapedVsSdeResult r = run_shaped_vs_sde(cfg.shaped_vs_sde, seed, cfg.threads);
      if (cfg.formats.binary) {
        art.binary("cov_chain.bin", r.chain);
        art.binary("cov_sde.bin", r.sde);
      }
      if (cfg.formats.csv) {
        art.csv("cov_chain_means.csv", [&](std::ostream& out) { write_means(r.chain, out); });
        art.csv("cov_sde_means.csv", [&](std::ostream& out) { write_means(r.sde, out); });
      }
      emit_report(art, r.report, "terminal_v12");
      Json s = report_summary(r.report);
      s["sde"] = counters_json(r.sde);
      return s;
    }
  }
  return Json::object();
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t hash = config_hash(cfg);
  Artifacts art(resolve_output_dir(cfg), hash);

  RunResult result;
  result.output_dir = art.dir();
  result.summary = run_kind(cfg, art);
  art.json("summary.json", result.summary);

  Json config = config_to_json(cfg);
  config.erase("output_dir");
  config.erase("threads");
  Json artifacts = Json::array();
  for (const auto& [name, sum] : art.checksums()) {
    artifacts.push_back({{"name", name}, {"fnv1a64", hash_hex(sum)}});
    result.artifacts.push_back(name);
  }
  Json manifest;
  manifest["experiment"] = std::string(to_string(cfg.kind));
  manifest["seed"] = cfg.seed;
  manifest["versions"] = {{"covlim", library_version()},
                          {"ensemble_format", kEnsembleFormatVersion},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                        std::to_string(EIGEN_MINOR_VERSION)},
                          {"boost", BOOST_LIB_VERSION}};
  manifest["artifacts"] = artifacts;
  manifest["config"] = config;
  art.json("manifest.json", manifest);
  result.artifacts.push_back("manifest.json");

  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  {
    std::ofstream timing(art.dir() / "timing.json", std::ios::binary | std::ios::trunc);
    timing << Json{{"config_hash", hash_hex(hash)}, {"wall_seconds", result.wall_seconds}}.dump(2) << "\n";
  }
  result.artifacts.push_back("timing.json");
  return result;
}

}  // namespace covlim
