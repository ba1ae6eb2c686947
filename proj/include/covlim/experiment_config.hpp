// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "covlim/covariance_chain.hpp"
#include "covlim/gaussian_kernels.hpp"
#include "covlim/limit_integrators.hpp"
#include "covlim/network_sim.hpp"

namespace covlim {

/// Config file problem. `field` names the owning type and member
/// ("SdeRunConfig.dt"); `pointer` is the JSON pointer inside the file.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string field, std::string pointer, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)), pointer_(std::move(pointer)) {}
  const std::string& field() const noexcept { return field_; }
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string field_;
  std::string pointer_;
};

enum class ExperimentKind {
  Kernels,
  SimulateNetwork,
  SimulateChain,
  IntegrateLimit,
  Compare,
  ReproduceFig1,
  OdeVsResnet,
  ShapedVsSde,
};

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);

/// Equicorrelated input covariance: unit-free variance on the diagonal and
/// rho0 * variance off it.
struct InputSpec {
  double rho0 = 0.3;
  double variance = 1.0;

  CovMatrix covariance(std::size_t m) const;
};

struct KernelsConfig {
  std::size_t grid = 201;
  std::size_t oracle_budget = 200;
};

struct NetworkRunConfig {
  NetworkSpec spec;
  InputSpec input;
  std::size_t paths = 64;
};

enum class ChainKind { Covariance, Rescaled, Shaped };

struct ChainRunConfig {
  ChainKind kind = ChainKind::Covariance;
  std::size_t n = 64;
  std::size_t d = 64;
  std::size_t m = 2;
  InputSpec input;
  std::size_t paths = 64;
  ShapingConfig shaping = ShapingConfig::relu_like(1.0, 0.0, 0.5);
  QChainMode mode = QChainMode::Approximate;
  NoiseKind noise_kind = NoiseKind::Gaussian;
  bool noise = true;
  bool infinite_width = false;
  std::size_t max_depth_ratio = 1000;
};

enum class LimitKind { CovSde, CovOde, QSde };
enum class DriftKind { ReluLike, Smooth, Resnet };

struct LimitRunConfig {
  LimitKind kind = LimitKind::CovSde;
  std::size_t m = 2;
  InputSpec input;
  DriftKind drift = DriftKind::ReluLike;
  ShapingConfig shaping = ShapingConfig::relu_like(1.0, 0.0, 0.5);
  /// q-SDE start; defaults to log(1 - input.rho0).
  std::optional<double> r0;
  bool noise = true;
  SdeRunConfig sde;
};

enum class CompareQuantity { V, Rho, LogV, Q, R };

struct CompareConfig {
  std::string a;
  std::string b;
  /// Nearest grid time in each ensemble; terminal time when unset.
  std::optional<double> time;
  CompareQuantity quantity = CompareQuantity::V;
  std::size_t pair_a = 0;
  std::size_t pair_b = 1;
};

struct Fig1Config {
  std::size_t n = 150;
  std::size_t d = 150;
  double rho0 = 0.3;
  std::size_t paths = 8192;
  double dt = 1e-2;
  std::optional<double> r0;
  QChainMode mode = QChainMode::Exact;
};

struct OdeVsResnetConfig {
  std::size_t n = 200;
  std::size_t d = 200;
  double rho0 = 0.3;
  std::size_t paths = 1000;
  double dt = 1e-3;
};

struct ShapedVsSdeConfig {
  std::size_t n = 128;
  std::size_t d = 128;
  double rho0 = 0.3;
  std::size_t paths = 4096;
  double dt = 1e-3;
  double c_plus = 1.0;
  double c_minus = 0.0;
};

struct OutputFormats {
  bool csv = true;
  bool binary = true;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Kernels;
  std::uint64_t seed = 0;
  /// Empty means <output root>/<kind>, the root coming from COVLIM_OUTPUT_ROOT
  /// or "covlim-runs".
  std::string output_dir;
  OutputFormats formats;
  unsigned threads = 0;

  KernelsConfig kernels;
  NetworkRunConfig network;
  ChainRunConfig chain;
  LimitRunConfig limit;
  CompareConfig compare;
  Fig1Config fig1;
  OdeVsResnetConfig ode_vs_resnet;
  ShapedVsSdeConfig shaped_vs_sde;
};

/// Defaults for `kind`; every section carries its documented defaults.
ExperimentConfig default_config(ExperimentKind kind);

/// Strict parse: unknown keys and wrong types raise SchemaError. Missing keys
/// keep their defaults.
ExperimentConfig config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);

/// Range and invariant checks for the sections `cfg.kind` uses.
void validate_config(const ExperimentConfig& cfg);

/// FNV-1a 64 of the canonical JSON with output_dir and threads removed, so
/// the hash identifies what is computed rather than where or how fast.
/// Compare inputs enter by file content, not path.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string hash_hex(std::uint64_t hash);

}  // namespace covlim
