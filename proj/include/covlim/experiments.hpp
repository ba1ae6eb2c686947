// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "covlim/experiment_config.hpp"
#include "covlim/path_ensemble.hpp"
#include "covlim/stats.hpp"

namespace covlim {

// --- kernel table ----------------------------------------------------------

struct KernelTable {
  std::vector<double> rho;
  std::vector<double> k0, k1, k2, k31, nu, f;
  /// closed form minus quadrature oracle
  std::vector<double> d0, d1, d2, d31;
  double max_abs_delta = 0.0;
};

/// Closed forms and oracle deltas on `grid` equispaced points of [-1, 1].
/// nu uses (c+ - c-)^2 = 1.
KernelTable tabulate_kernels(const KernelsConfig& cfg);

// --- ensemble comparison ---------------------------------------------------

/// "shaped_mlp" for mlp, cov_chain, shaped_chain and cov_sde; "resnet" for
/// resnet and cov_ode; "rescaled_correlation" for q_chain and q_sde.
std::string structural_family(const std::string& kind);

struct SampleSelection {
  std::optional<double> time;  // nearest grid point; terminal when unset
  CompareQuantity quantity = CompareQuantity::V;
  std::size_t pair_a = 0;
  std::size_t pair_b = 1;
};

/// Values at the selected time across paths. Paths that are not Ok or whose
/// value is not finite are skipped and counted in `excluded`.
SampleSet select_samples(const PathEnsemble& ensemble, const SampleSelection& sel, std::string label,
                         std::size_t* excluded = nullptr);

/// Refuses (ErrorKind::InvalidArgument) ensembles whose m or structural
/// family differ.
ComparisonReport compare_ensembles(const PathEnsemble& a, const PathEnsemble& b, const SampleSelection& sel);

// --- canned experiments ----------------------------------------------------

struct Fig1Result {
  PathEnsemble chain;
  PathEnsemble sde;
  ComparisonReport report;  // a = chain terminal r, b = SDE terminal r
  std::size_t chain_excluded = 0;
  std::size_t sde_excluded = 0;
};

/// Rescaled-correlation chain (t = l/n) against the log-scheme SDE from t = 0.
Fig1Result run_fig1(const Fig1Config& cfg, std::uint64_t seed, unsigned threads = 0);

struct OdeVsResnetResult {
  PathEnsemble resnet;
  PathEnsemble ode;
  std::vector<double> times;      // t = l/d
  std::vector<double> mean_rho;   // ensemble mean of rho^{12}
  std::vector<double> ode_rho;    // ODE rho^{12} at the same t
  std::vector<double> mean_diag_ratio;  // mean over paths of V^{11}_l / V^{11}_0
  std::vector<double> checkpoints{0.25, 0.5, 1.0};
  std::vector<double> checkpoint_deviation;
  double max_layer_deviation = 0.0;
  double diagonal_ratio = 0.0;  // at t = 1
  double diagonal_ratio_se = 0.0;
};

OdeVsResnetResult run_ode_vs_resnet(const OdeVsResnetConfig& cfg, std::uint64_t seed, unsigned threads = 0);

struct ShapedVsSdeResult {
  PathEnsemble chain;
  PathEnsemble sde;
  ComparisonReport report;  // V^{12} at t = d/n, a = chain, b = SDE
};

/// Exact shaped-ReLU covariance chain (p = 1/2) against Euler-Maruyama for the
/// covariance SDE with the matching drift.
ShapedVsSdeResult run_shaped_vs_sde(const ShapedVsSdeConfig& cfg, std::uint64_t seed, unsigned threads = 0);

// --- runner ----------------------------------------------------------------

/// output_dir if set, else $COVLIM_OUTPUT_ROOT/<kind> (root defaults to
/// "covlim-runs").
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg);

struct RunResult {
  std::filesystem::path output_dir;
  std::vector<std::string> artifacts;  // file names inside output_dir
  nlohmann::ordered_json summary;
  double wall_seconds = 0.0;
};

/// Validates, executes and writes artifacts plus manifest.json (deterministic)
/// and timing.json (wall time). Throws SchemaError or covlim::Error.
RunResult run_experiment(const ExperimentConfig& cfg);

std::string library_version();

}  // namespace covlim
