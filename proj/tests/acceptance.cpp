// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `--only 1,5` runs a subset.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <ratio>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "covlim/covariance_chain.hpp"
#include "covlim/experiment_config.hpp"
#include "covlim/experiments.hpp"
#include "covlim/gaussian_kernels.hpp"
#include "covlim/limit_integrators.hpp"
#include "covlim/network_sim.hpp"
#include "covlim/stats.hpp"

namespace fs = std::filesystem;
using namespace covlim;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double normal_cdf(double x, double mean, double sd) { return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2)); }

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// --- criteria ---------------------------------------------------------------

Verdict kernel_closed_forms() {
  const auto start = Clock::now();
  const KernelTable t = tabulate_kernels(KernelsConfig{201, 200});
  const double secs = seconds_since(start);
  return {t.max_abs_delta <= 1e-8 && secs < 1.0,
          fmt("max |closed - oracle| = %.2e (<= 1e-8) over %zu points, %.3f s (< 1 s)", t.max_abs_delta, t.rho.size(),
              secs)};
}

Verdict m2_identity() {
  // E phi^2 = E g^2 / 2 and E phi^4 = E g^4 / 2 for the ReLU.
  using e_phi2 = std::ratio<1, 2>;
  using e_phi4 = std::ratio<3, 2>;
  using m2 = std::ratio_add<std::ratio_subtract<std::ratio_multiply<std::ratio<4>, e_phi4>,
                                                std::ratio_multiply<std::ratio<4>, e_phi2>>,
                            std::ratio<1>>;
  constexpr bool rational = std::ratio_equal_v<m2, std::ratio<5>>;
  const bool closed = kernels::kernel_k(1, 1, 1.0) == 0.5 && kernels::kernel_k(2, 2, 1.0) == 1.5 &&
                      kernels::kM2 == static_cast<double>(m2::num) / m2::den;
  const double quad = 4.0 * kernels::kernel_oracle(2, 2, 1.0, 200).value -
                      4.0 * kernels::kernel_oracle(1, 1, 1.0, 200).value + 1.0;
  const double gap = std::abs(quad - 5.0);
  return {rational && closed && gap < 1e-6,
          fmt("rational identity = %lld/%lld, closed-form moments %s, quadrature |M2 - 5| = %.2e (< 1e-6)",
              static_cast<long long>(m2::num), static_cast<long long>(m2::den), closed ? "exact" : "MISMATCH", gap)};
}

Verdict shaping_rate() {
  const double rho = 0.5;
  std::vector<double> lx, ly;
  for (double n : {1e2, 1e3, 1e4, 1e5}) {
    const auto shaping = ShapingConfig::relu_like(1.0, 0.0, 0.5, static_cast<std::size_t>(n));
    const double c = kernels::he_normalizer(shaping);
    const double residual = c * kernels::shaped_relu_k1(rho, shaping.s_plus(), shaping.s_minus()) - rho -
                            kernels::nu(rho, 1.0, 0.0) / n;
    lx.push_back(std::log(n));
    ly.push_back(std::log(std::abs(residual)));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / lx.size(), my += ly[i] / ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  const double slope = sxy / sxx;
  return {slope <= -1.4, fmt("fitted slope %.4f (<= -1.4, theory -1.5)", slope)};
}

Verdict ode_vs_resnet() {
  const auto start = Clock::now();
  const OdeVsResnetResult r = run_ode_vs_resnet(OdeVsResnetConfig{}, 0);
  const double secs = seconds_since(start);
  double worst = 0.0;
  for (double d : r.checkpoint_deviation) worst = std::max(worst, d);
  const double rel = std::abs(r.diagonal_ratio / std::exp(0.5) - 1.0);
  return {worst < 0.03 && rel < 0.05 && secs < 120.0,
          fmt("max |mean rho - ODE rho| at t=0.25,0.5,1 = %.4f/%.4f/%.4f (< 0.03); diag ratio %.4f vs e^0.5 (%.2f%% "
              "off, < 5%%); %.1f s (< 120 s)",
              r.checkpoint_deviation[0], r.checkpoint_deviation[1], r.checkpoint_deviation[2], r.diagonal_ratio,
              100.0 * rel, secs)};
}

Verdict scalar_sde_law() {
  const double v0 = 1.0;
  CovMatrix start(1);
  start(0, 0) = v0;
  SdeRunConfig cfg;
  cfg.T = 1.0;
  cfg.dt = 1e-3;
  cfg.paths = 10000;
  cfg.seed = 0;
  const PathEnsemble e = integrate_cov_sde(start, ReluLikeDrift{1.0, 0.0}, cfg);
  SampleSet terminal{e.slice(e.steps() - 1, 0), "V_T", "cov_sde"};
  const Summary s = summarize(terminal);
  const double z = std::abs(s.mean - v0) / s.standard_error();
  SampleSet logs{{}, "log V_T", "cov_sde"};
  for (double v : terminal.values) logs.values.push_back(std::log(v));
  const double ks = ks_against(logs, [&](double x) { return normal_cdf(x, std::log(v0) - 1.0, std::numbers::sqrt2); });
  return {z < 3.0 && ks < 0.02,
          fmt("|mean V_T - V0| = %.2f SE (< 3); KS(log V_T, N(log V0 - 1, 2)) = %.4f (< 0.02)", z, ks)};
}

Verdict shaped_vs_sde() {
  const ShapedVsSdeResult r = run_shaped_vs_sde(ShapedVsSdeConfig{}, 0);
  return {r.report.ks < 0.07, fmt("KS of V12 at t=1, chain vs SDE = %.4f (< 0.07), %zu vs %zu paths", r.report.ks,
                                  r.report.summary_a.count, r.report.summary_b.count)};
}

Verdict fig1(const fs::path& workdir) {
  ExperimentConfig cfg = default_config(ExperimentKind::ReproduceFig1);
  cfg.output_dir = (workdir / "reproduce-fig1").string();
  cfg.formats.csv = true;
  cfg.formats.binary = false;
  const auto start = Clock::now();
  const RunResult r = run_experiment(cfg);
  const double secs = seconds_since(start);
  const double ks = r.summary["ks"].get<double>();
  const bool kde = fs::exists(r.output_dir / "terminal_r_kde.csv") && fs::file_size(r.output_dir / "terminal_r_kde.csv") > 0;
  return {ks < 0.10 && kde && secs < 300.0,
          fmt("KS terminal r, exact q-chain vs log-scheme SDE = %.4f (< 0.10); KDE csv %s; %.1f s (< 300 s)", ks,
              kde ? "written" : "MISSING", secs)};
}

Verdict q_fixed_point() {
  QChainConfig cfg;
  cfg.n = 150;
  cfg.d = 10000;
  cfg.rho0 = 0.3;
  cfg.options.infinite_width = true;
  const PathEnsemble e = run_q_chain(cfg);
  const double q = e.value(0, e.steps() - 1, 0);
  const double target = 4.5 * std::numbers::pi * std::numbers::pi;
  return {std::abs(q - target) < 1.0, fmt("q at l=1e4 = %.4f, |q - 9 pi^2/2| = %.4f (< 1)", q, std::abs(q - target))};
}

Verdict network_vs_chain() {
  const std::size_t n = 64, paths = 4096;
  NetworkSpec spec;
  spec.arch = Architecture::ShapedMlp;
  spec.n_in = n;
  spec.n = n;
  spec.d = n;
  spec.m = 2;
  spec.shaping = ShapingConfig::relu_like(1.0, 0.0, 0.5);
  const CovMatrix v0 = CovMatrix::equicorrelated(2, 0.3);
  const PathEnsemble net = simulate_network_ensemble(spec, InputBatch::with_covariance(v0, n), paths, 0);
  const PathEnsemble chain = run_cov_chain(v0, n, n, spec.shaping, paths, 0);
  const std::size_t k = CovMatrix::flat_index(0, 1, 2);
  bool pass = true;
  std::string detail = "KS of V12, forward pass vs exact chain:";
  for (std::size_t layer : {std::size_t{1}, n / 2, n}) {
    const double ks = ks_distance(SampleSet{net.slice(layer, k), "mlp", "network_sim"},
                                  SampleSet{chain.slice(layer, k), "chain", "covariance_chain"});
    pass = pass && ks < 0.05;
    detail += fmt(" l=%zu %.4f", layer, ks);
  }
  return {pass, detail + " (each < 0.05)"};
}

// Reduced-size versions of every experiment kind, run twice with different
// thread counts.
Verdict determinism(const fs::path& workdir) {
  const fs::path root = workdir / "determinism";
  fs::remove_all(root);
  std::vector<ExperimentConfig> configs;
  auto add = [&](ExperimentKind kind, const std::string& name, auto&& tweak) {
    ExperimentConfig cfg = default_config(kind);
    cfg.seed = 20260;
    tweak(cfg);
    cfg.output_dir = name;
    configs.push_back(cfg);
  };
  add(ExperimentKind::Kernels, "kernels", [](auto& c) { c.kernels.grid = 21; });
  add(ExperimentKind::SimulateNetwork, "network", [](auto& c) {
    c.network.spec.n = 16;
    c.network.spec.d = 8;
    c.network.paths = 24;
  });
  add(ExperimentKind::SimulateNetwork, "resnet", [](auto& c) {
    c.network.spec.arch = Architecture::Resnet;
    c.network.spec.shaping = ShapingConfig::unshaped();
    c.network.spec.n = 16;
    c.network.spec.d = 8;
    c.network.paths = 24;
  });
  add(ExperimentKind::SimulateChain, "cov_chain", [](auto& c) {
    c.chain.n = 16;
    c.chain.d = 8;
    c.chain.paths = 24;
  });
  add(ExperimentKind::SimulateChain, "shaped_chain", [](auto& c) {
    c.chain.kind = ChainKind::Shaped;
    c.chain.n = 16;
    c.chain.d = 16;
    c.chain.paths = 24;
  });
  add(ExperimentKind::SimulateChain, "q_chain", [](auto& c) {
    c.chain.kind = ChainKind::Rescaled;
    c.chain.n = 32;
    c.chain.d = 32;
    c.chain.paths = 24;
  });
  add(ExperimentKind::IntegrateLimit, "cov_sde", [](auto& c) {
    c.limit.sde.dt = 1e-2;
    c.limit.sde.paths = 24;
  });
  add(ExperimentKind::IntegrateLimit, "cov_ode", [](auto& c) {
    c.limit.kind = LimitKind::CovOde;
    c.limit.drift = DriftKind::Resnet;
    c.limit.sde.dt = 1e-2;
  });
  add(ExperimentKind::IntegrateLimit, "q_sde", [](auto& c) {
    c.limit.kind = LimitKind::QSde;
    c.limit.sde.scheme = SdeScheme::LogEulerShifted;
    c.limit.sde.dt = 1e-2;
    c.limit.sde.paths = 24;
  });
  add(ExperimentKind::ReproduceFig1, "fig1", [](auto& c) {
    c.fig1.n = 40;
    c.fig1.d = 40;
    c.fig1.paths = 256;
  });
  add(ExperimentKind::OdeVsResnet, "ode_vs_resnet", [](auto& c) {
    c.ode_vs_resnet.n = 24;
    c.ode_vs_resnet.d = 24;
    c.ode_vs_resnet.paths = 32;
  });
  add(ExperimentKind::ShapedVsSde, "shaped_vs_sde", [](auto& c) {
    c.shaped_vs_sde.n = 24;
    c.shaped_vs_sde.d = 24;
    c.shaped_vs_sde.paths = 64;
    c.shaped_vs_sde.dt = 1e-2;
  });

  std::size_t files = 0;
  std::vector<std::string> mismatched;
  for (const char* run : {"run1", "run2"}) {
    for (auto cfg : configs) {
      cfg.threads = run[3] == '1' ? 1 : 2;
      cfg.output_dir = (root / run / cfg.output_dir).string();
      run_experiment(cfg);
    }
    // compare runs on ensembles written by this run
    ExperimentConfig cmp = default_config(ExperimentKind::Compare);
    cmp.seed = 20260;
    cmp.compare.a = (root / run / "network" / "network.bin").string();
    cmp.compare.b = (root / run / "cov_chain" / "chain.bin").string();
    cmp.compare.quantity = CompareQuantity::Rho;
    cmp.output_dir = (root / run / "compare").string();
    cmp.threads = run[3] == '1' ? 1 : 2;
    run_experiment(cmp);
  }
  for (const auto& entry : fs::recursive_directory_iterator(root / "run1")) {
    if (!entry.is_regular_file() || entry.path().filename() == "timing.json") continue;
    const fs::path rel = fs::relative(entry.path(), root / "run1");
    std::string a = slurp(entry.path());
    std::string b = slurp(root / "run2" / rel);
    // The compare artifacts embed input paths, which differ between the runs.
    if (rel.begin()->string() == "compare" && rel.filename() == "manifest.json") {
      auto strip = [](std::string s) {
        for (const char* run : {"run1", "run2"})
          for (auto pos = s.find(run); pos != std::string::npos; pos = s.find(run)) s.replace(pos, 4, "runX");
        return s;
      };
      a = strip(a);
      b = strip(b);
    }
    ++files;
    if (a != b) mismatched.push_back(rel.string());
  }
  std::string detail = fmt("%zu experiment runs x2 (1 vs 2 threads), %zu artifacts compared byte for byte",
                           configs.size() + 1, files);
  if (!mismatched.empty()) {
    detail += "; differing:";
    for (const auto& m : mismatched) detail += " " + m;
  }
  return {mismatched.empty() && files > 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covlim acceptance suite"};
  std::string workdir = "acceptance-runs";
  std::vector<int> only;
  app.add_option("--workdir", workdir, "scratch directory for emitted artifacts");
  app.add_option("--only", only, "criterion numbers to run")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "kernel closed forms vs oracle", kernel_closed_forms},
      {2, "M2 identity", m2_identity},
      {3, "shaping lemma rate", shaping_rate},
      {4, "ResNet ODE vs simulation", ode_vs_resnet},
      {5, "scalar covariance SDE martingale and law", scalar_sde_law},
      {6, "shaped chain vs covariance SDE", shaped_vs_sde},
      {7, "rescaled correlation chain vs log-scheme SDE", [&] { return fig1(workdir); }},
      {8, "noiseless q fixed point", q_fixed_point},
      {9, "forward pass vs exact covariance chain", network_vs_chain},
      {10, "determinism of canned experiments", [&] { return determinism(workdir); }},
  };

  const std::set<int> selected(only.begin(), only.end());
  int failures = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    ++ran;
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("%s [%2d] %s: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/%d passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
