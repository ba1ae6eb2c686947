// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include "covlim/experiment_config.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <type_traits>
#include <utility>

#include "covlim/error.hpp"

namespace covlim {

using Json = nlohmann::ordered_json;

namespace {

template <class E>
using NameTable = std::initializer_list<std::pair<std::string_view, E>>;

const NameTable<ExperimentKind> kExperimentNames = {
    {"kernels", ExperimentKind::Kernels},
    {"simulate-network", ExperimentKind::SimulateNetwork},
    {"simulate-chain", ExperimentKind::SimulateChain},
    {"integrate-limit", ExperimentKind::IntegrateLimit},
    {"compare", ExperimentKind::Compare},
    {"reproduce-fig1", ExperimentKind::ReproduceFig1},
    {"ode-vs-resnet", ExperimentKind::OdeVsResnet},
    {"shaped-vs-sde", ExperimentKind::ShapedVsSde},
};
const NameTable<Architecture> kArchNames = {{"shaped_mlp", Architecture::ShapedMlp}, {"resnet", Architecture::Resnet}};
const NameTable<ShapingKind> kShapingNames = {
    {"relu_like", ShapingKind::ReluLike}, {"smooth", ShapingKind::Smooth}, {"unshaped", ShapingKind::Unshaped}};
const NameTable<SmoothBase> kBaseNames = {
    {"tanh", SmoothBase::Tanh}, {"sin", SmoothBase::Sin}, {"softplus", SmoothBase::Softplus}};
const NameTable<ChainKind> kChainNames = {
    {"covariance", ChainKind::Covariance}, {"rescaled", ChainKind::Rescaled}, {"shaped", ChainKind::Shaped}};
const NameTable<QChainMode> kModeNames = {{"approximate", QChainMode::Approximate}, {"exact", QChainMode::Exact}};
const NameTable<NoiseKind> kNoiseNames = {{"gaussian", NoiseKind::Gaussian}, {"rademacher", NoiseKind::Rademacher}};
const NameTable<LimitKind> kLimitNames = {
    {"cov_sde", LimitKind::CovSde}, {"cov_ode", LimitKind::CovOde}, {"q_sde", LimitKind::QSde}};
const NameTable<DriftKind> kDriftNames = {
    {"relu_like", DriftKind::ReluLike}, {"smooth", DriftKind::Smooth}, {"resnet", DriftKind::Resnet}};
const NameTable<SdeScheme> kSchemeNames = {
    {"euler_maruyama", SdeScheme::EulerMaruyama}, {"log_euler_shifted", SdeScheme::LogEulerShifted}};
const NameTable<CompareQuantity> kQuantityNames = {{"V", CompareQuantity::V},
                                                  {"rho", CompareQuantity::Rho},
                                                  {"log_V", CompareQuantity::LogV},
                                                  {"q", CompareQuantity::Q},
                                                  {"r", CompareQuantity::R}};

template <class E>
std::string name_of(E value, NameTable<E> table) {
  for (const auto& [name, v] : table)
    if (v == value) return std::string(name);
  return "?";
}

// One JSON object being parsed, with the type name used in error messages.
class Section {
 public:
  Section(const Json& j, std::string pointer, std::string type, std::initializer_list<const char*> keys)
      : j_(j), pointer_(std::move(pointer)), type_(std::move(type)) {
    if (!j_.is_object()) throw SchemaError(type_, pointer_.empty() ? "/" : pointer_, type_ + ": expected an object");
    for (const auto& item : j_.items()) {
      bool known = false;
      for (const char* k : keys) known = known || item.key() == k;
      if (!known) fail(item.key(), "unknown field");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const Json& at(const char* key) const { return j_.at(key); }
  std::string pointer(const char* key) const { return pointer_ + "/" + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& what, const std::string& type = {}) const {
    const std::string field = (type.empty() ? type_ : type) + "." + key;
    throw SchemaError(field, pointer_ + "/" + key, field + ": " + what);
  }

  template <class U>
    requires(std::is_unsigned_v<U> && !std::is_same_v<U, bool>)
  void read(const char* key, U& out, const std::string& type = {}) const {
    if (!has(key)) return;
    const Json& v = at(key);
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > std::numeric_limits<U>::max()) {
      fail(key, "expected a non-negative integer", type);
    }
    out = v.get<U>();
  }
  void read(const char* key, double& out, const std::string& type = {}) const {
    if (!has(key)) return;
    const Json& v = at(key);
    if (!v.is_number()) fail(key, "expected a number", type);
    out = v.get<double>();
  }
  void read(const char* key, std::optional<double>& out, const std::string& type = {}) const {
    if (!has(key)) return;
    const Json& v = at(key);
    if (v.is_null()) {
      out.reset();
      return;
    }
    if (!v.is_number()) fail(key, "expected a number or null", type);
    out = v.get<double>();
  }
  void read(const char* key, bool& out, const std::string& type = {}) const {
    if (!has(key)) return;
    const Json& v = at(key);
    if (!v.is_boolean()) fail(key, "expected true or false", type);
    out = v.get<bool>();
  }
  void read(const char* key, std::string& out, const std::string& type = {}) const {
    if (!has(key)) return;
    const Json& v = at(key);
    if (!v.is_string()) fail(key, "expected a string", type);
    out = v.get<std::string>();
  }
  template <class E>
  void read_enum(const char* key, E& out, NameTable<E> table, const std::string& type = {}) const {
    if (!has(key)) return;
    const Json& v = at(key);
    if (v.is_string()) {
      for (const auto& [name, value] : table) {
        if (v.get<std::string>() == name) {
          out = value;
          return;
        }
      }
    }
    std::string allowed;
    for (const auto& [name, value] : table) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    fail(key, "expected one of: " + allowed, type);
  }

 private:
  const Json& j_;
  std::string pointer_;
  std::string type_;
};

InputSpec parse_input(const Json& j, const std::string& ptr) {
  Section s(j, ptr, "InputSpec", {"rho0", "variance"});
  InputSpec in;
  s.read("rho0", in.rho0);
  s.read("variance", in.variance);
  return in;
}

Json input_json(const InputSpec& in) { return Json{{"rho0", in.rho0}, {"variance", in.variance}}; }

ShapingConfig parse_shaping(const Json& j, const std::string& ptr, ShapingConfig out) {
  Section s(j, ptr, "ShapingConfig", {"kind", "c_plus", "c_minus", "p", "a", "base", "n_ref"});
  s.read_enum("kind", out.kind, kShapingNames);
  s.read("c_plus", out.c_plus);
  s.read("c_minus", out.c_minus);
  s.read("p", out.p);
  s.read("a", out.a);
  s.read_enum("base", out.base, kBaseNames);
  s.read("n_ref", out.n_ref);
  if (out.kind == ShapingKind::Smooth) {
    const ShapingConfig smooth = ShapingConfig::smooth(out.base, out.a, out.p, out.n_ref);
    out.phi2_0 = smooth.phi2_0;
    out.phi3_0 = smooth.phi3_0;
  }
  return out;
}

Json shaping_json(const ShapingConfig& s) {
  return Json{{"kind", name_of(s.kind, kShapingNames)},
              {"c_plus", s.c_plus},
              {"c_minus", s.c_minus},
              {"p", s.p},
              {"a", s.a},
              {"base", name_of(s.base, kBaseNames)},
              {"n_ref", s.n_ref}};
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

[[noreturn]] void bad(const std::string& field, const std::string& pointer, const std::string& what) {
  throw SchemaError(field, pointer, field + ": " + what);
}

void check_positive(std::size_t v, const std::string& field, const std::string& pointer) {
  if (v == 0) bad(field, pointer, "must be >= 1");
}

void check_input(const InputSpec& in, const std::string& pointer, bool open_interval) {
  const bool ok = open_interval ? (in.rho0 > -1.0 && in.rho0 < 1.0) : (in.rho0 >= -1.0 && in.rho0 <= 1.0);
  if (!ok) bad("InputSpec.rho0", pointer + "/rho0", open_interval ? "must lie in (-1, 1)" : "must lie in [-1, 1]");
  if (!(in.variance > 0.0) || !std::isfinite(in.variance)) bad("InputSpec.variance", pointer + "/variance", "must be > 0");
}

// Shaped runs need p in (0, 1/2]; unshaped runs ignore p.
void check_shaping(const ShapingConfig& s, const std::string& pointer, bool require_relu_like) {
  if (require_relu_like && s.kind != ShapingKind::ReluLike) {
    bad("ShapingConfig.kind", pointer + "/kind", "must be relu_like for this run");
  }
  if (s.kind == ShapingKind::Unshaped) return;
  if (!(s.p > 0.0 && s.p <= 0.5)) bad("ShapingConfig.p", pointer + "/p", "must lie in (0, 1/2] for a shaped run");
  if (!std::isfinite(s.c_plus)) bad("ShapingConfig.c_plus", pointer + "/c_plus", "must be finite");
  if (!std::isfinite(s.c_minus)) bad("ShapingConfig.c_minus", pointer + "/c_minus", "must be finite");
  if (s.kind == ShapingKind::Smooth && (s.a == 0.0 || !std::isfinite(s.a))) {
    bad("ShapingConfig.a", pointer + "/a", "must be nonzero for smooth shaping");
  }
}

void check_sde(const SdeRunConfig& c, const std::string& pointer) {
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) bad("SdeRunConfig.dt", pointer + "/dt", "must be > 0");
  if (!(c.t0 >= 0.0) || !std::isfinite(c.t0)) bad("SdeRunConfig.t0", pointer + "/t0", "must be >= 0");
  if (!(c.T > c.t0) || !std::isfinite(c.T)) bad("SdeRunConfig.T", pointer + "/T", "must exceed t0");
  if (c.dt > c.T - c.t0) bad("SdeRunConfig.dt", pointer + "/dt", "must not exceed T - t0");
  check_positive(c.paths, "SdeRunConfig.paths", pointer + "/paths");
  check_positive(c.record_stride, "SdeRunConfig.record_stride", pointer + "/record_stride");
}

void check_step(double dt, double horizon, const std::string& field, const std::string& pointer) {
  if (!(dt > 0.0) || !std::isfinite(dt)) bad(field, pointer, "must be > 0");
  if (dt > horizon) bad(field, pointer, "must not exceed the integration horizon");
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  for (const auto& [name, v] : kExperimentNames)
    if (v == kind) return name;
  return "?";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
  for (const auto& [n, v] : kExperimentNames)
    if (n == name) return v;
  return std::nullopt;
}

CovMatrix InputSpec::covariance(std::size_t m) const { return CovMatrix::equicorrelated(m, rho0, variance); }

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  cfg.network.spec.arch = Architecture::ShapedMlp;
  cfg.network.spec.n_in = 64;
  cfg.network.spec.n = 64;
  cfg.network.spec.d = 64;
  cfg.network.spec.m = 2;
  cfg.network.spec.shaping = ShapingConfig::relu_like(1.0, 0.0, 0.5);
  return cfg;
}

ExperimentConfig config_from_json(const Json& j) {
  Section top(j, "", "ExperimentConfig",
              {"experiment", "seed", "output_dir", "formats", "threads", "kernels", "network", "chain", "limit",
               "compare", "fig1", "ode_vs_resnet", "shaped_vs_sde"});
  if (!top.has("experiment")) top.fail("experiment", "missing required field");
  ExperimentKind kind{};
  top.read_enum("experiment", kind, kExperimentNames);
  ExperimentConfig cfg = default_config(kind);
  top.read("seed", cfg.seed);
  top.read("output_dir", cfg.output_dir);
  top.read("threads", cfg.threads);

  if (top.has("formats")) {
    Section s(top.at("formats"), top.pointer("formats"), "OutputFormats", {"csv", "binary"});
    s.read("csv", cfg.formats.csv);
    s.read("binary", cfg.formats.binary);
  }
  if (top.has("kernels")) {
    Section s(top.at("kernels"), top.pointer("kernels"), "KernelsConfig", {"grid", "oracle_budget"});
    s.read("grid", cfg.kernels.grid);
    s.read("oracle_budget", cfg.kernels.oracle_budget);
  }
  if (top.has("network")) {
    const std::string ptr = top.pointer("network");
    Section s(top.at("network"), ptr, "NetworkRunConfig", {"arch", "n_in", "n", "d", "m", "shaping", "input", "paths"});
    auto& spec = cfg.network.spec;
    s.read_enum("arch", spec.arch, kArchNames, "NetworkSpec");
    s.read("n_in", spec.n_in, "NetworkSpec");
    s.read("n", spec.n, "NetworkSpec");
    s.read("d", spec.d, "NetworkSpec");
    s.read("m", spec.m, "NetworkSpec");
    s.read("paths", cfg.network.paths);
    if (s.has("shaping")) spec.shaping = parse_shaping(s.at("shaping"), ptr + "/shaping", spec.shaping);
    if (s.has("input")) cfg.network.input = parse_input(s.at("input"), ptr + "/input");
  }
  if (top.has("chain")) {
    const std::string ptr = top.pointer("chain");
    Section s(top.at("chain"), ptr, "ChainRunConfig",
              {"kind", "n", "d", "m", "input", "paths", "shaping", "mode", "noise_kind", "noise", "infinite_width",
               "max_depth_ratio"});
    auto& c = cfg.chain;
    s.read_enum("kind", c.kind, kChainNames);
    s.read("n", c.n);
    s.read("d", c.d);
    s.read("m", c.m);
    s.read("paths", c.paths);
    s.read_enum("mode", c.mode, kModeNames);
    s.read_enum("noise_kind", c.noise_kind, kNoiseNames);
    s.read("noise", c.noise);
    s.read("infinite_width", c.infinite_width);
    s.read("max_depth_ratio", c.max_depth_ratio);
    if (s.has("shaping")) c.shaping = parse_shaping(s.at("shaping"), ptr + "/shaping", c.shaping);
    if (s.has("input")) c.input = parse_input(s.at("input"), ptr + "/input");
  }
  if (top.has("limit")) {
    const std::string ptr = top.pointer("limit");
    Section s(top.at("limit"), ptr, "LimitRunConfig", {"kind", "m", "input", "drift", "shaping", "r0", "noise", "sde"});
    auto& c = cfg.limit;
    s.read_enum("kind", c.kind, kLimitNames);
    s.read("m", c.m);
    s.read_enum("drift", c.drift, kDriftNames);
    s.read("r0", c.r0);
    s.read("noise", c.noise);
    if (s.has("shaping")) c.shaping = parse_shaping(s.at("shaping"), ptr + "/shaping", c.shaping);
    if (s.has("input")) c.input = parse_input(s.at("input"), ptr + "/input");
    if (s.has("sde")) {
      Section q(s.at("sde"), ptr + "/sde", "SdeRunConfig", {"t0", "T", "dt", "paths", "scheme", "record_stride"});
      q.read("t0", c.sde.t0);
      q.read("T", c.sde.T);
      q.read("dt", c.sde.dt);
      q.read("paths", c.sde.paths);
      q.read_enum("scheme", c.sde.scheme, kSchemeNames);
      q.read("record_stride", c.sde.record_stride);
    }
  }
  if (top.has("compare")) {
    Section s(top.at("compare"), top.pointer("compare"), "CompareConfig", {"a", "b", "time", "quantity", "pair"});
    auto& c = cfg.compare;
    s.read("a", c.a);
    s.read("b", c.b);
    s.read("time", c.time);
    s.read_enum("quantity", c.quantity, kQuantityNames);
    if (s.has("pair")) {
      const Json& p = s.at("pair");
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_unsigned() || !p[1].is_number_unsigned()) {
        s.fail("pair", "expected two non-negative integers");
      }
      c.pair_a = p[0].get<std::size_t>();
      c.pair_b = p[1].get<std::size_t>();
    }
  }
  if (top.has("fig1")) {
    Section s(top.at("fig1"), top.pointer("fig1"), "Fig1Config", {"n", "d", "rho0", "paths", "dt", "r0", "mode"});
    auto& c = cfg.fig1;
    s.read("n", c.n);
    s.read("d", c.d);
    s.read("rho0", c.rho0);
    s.read("paths", c.paths);
    s.read("dt", c.dt);
    s.read("r0", c.r0);
    s.read_enum("mode", c.mode, kModeNames);
  }
  if (top.has("ode_vs_resnet")) {
    Section s(top.at("ode_vs_resnet"), top.pointer("ode_vs_resnet"), "OdeVsResnetConfig", {"n", "d", "rho0", "paths", "dt"});
    auto& c = cfg.ode_vs_resnet;
    s.read("n", c.n);
    s.read("d", c.d);
    s.read("rho0", c.rho0);
    s.read("paths", c.paths);
    s.read("dt", c.dt);
  }
  if (top.has("shaped_vs_sde")) {
    Section s(top.at("shaped_vs_sde"), top.pointer("shaped_vs_sde"), "ShapedVsSdeConfig",
              {"n", "d", "rho0", "paths", "dt", "c_plus", "c_minus"});
    auto& c = cfg.shaped_vs_sde;
    s.read("n", c.n);
    s.read("d", c.d);
    s.read("rho0", c.rho0);
    s.read("paths", c.paths);
    s.read("dt", c.dt);
    s.read("c_plus", c.c_plus);
    s.read("c_minus", c.c_minus);
  }
  return cfg;
}

Json config_to_json(const ExperimentConfig& cfg) {
  Json j;
  j["experiment"] = std::string(to_string(cfg.kind));
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["formats"] = {{"csv", cfg.formats.csv}, {"binary", cfg.formats.binary}};
  j["threads"] = cfg.threads;
  j["kernels"] = {{"grid", cfg.kernels.grid}, {"oracle_budget", cfg.kernels.oracle_budget}};
  const auto& net = cfg.network;
  j["network"] = {{"arch", name_of(net.spec.arch, kArchNames)},
                  {"n_in", net.spec.n_in},
                  {"n", net.spec.n},
                  {"d", net.spec.d},
                  {"m", net.spec.m},
                  {"shaping", shaping_json(net.spec.shaping)},
                  {"input", input_json(net.input)},
                  {"paths", net.paths}};
  const auto& ch = cfg.chain;
  j["chain"] = {{"kind", name_of(ch.kind, kChainNames)},
                {"n", ch.n},
                {"d", ch.d},
                {"m", ch.m},
                {"input", input_json(ch.input)},
                {"paths", ch.paths},
                {"shaping", shaping_json(ch.shaping)},
                {"mode", name_of(ch.mode, kModeNames)},
                {"noise_kind", name_of(ch.noise_kind, kNoiseNames)},
                {"noise", ch.noise},
                {"infinite_width", ch.infinite_width},
                {"max_depth_ratio", ch.max_depth_ratio}};
  const auto& li = cfg.limit;
  j["limit"] = {{"kind", name_of(li.kind, kLimitNames)},
                {"m", li.m},
                {"input", input_json(li.input)},
                {"drift", name_of(li.drift, kDriftNames)},
                {"shaping", shaping_json(li.shaping)},
                {"r0", optional_json(li.r0)},
                {"noise", li.noise},
                {"sde",
                 {{"t0", li.sde.t0},
                  {"T", li.sde.T},
                  {"dt", li.sde.dt},
                  {"paths", li.sde.paths},
                  {"scheme", name_of(li.sde.scheme, kSchemeNames)},
                  {"record_stride", li.sde.record_stride}}}};
  const auto& co = cfg.compare;
  j["compare"] = {{"a", co.a},
                  {"b", co.b},
                  {"time", optional_json(co.time)},
                  {"quantity", name_of(co.quantity, kQuantityNames)},
                  {"pair", Json::array({co.pair_a, co.pair_b})}};
  const auto& f1 = cfg.fig1;
  j["fig1"] = {{"n", f1.n},   {"d", f1.d},   {"rho0", f1.rho0}, {"paths", f1.paths},
               {"dt", f1.dt}, {"r0", optional_json(f1.r0)}, {"mode", name_of(f1.mode, kModeNames)}};
  const auto& ov = cfg.ode_vs_resnet;
  j["ode_vs_resnet"] = {{"n", ov.n}, {"d", ov.d}, {"rho0", ov.rho0}, {"paths", ov.paths}, {"dt", ov.dt}};
  const auto& sv = cfg.shaped_vs_sde;
  j["shaped_vs_sde"] = {{"n", sv.n},   {"d", sv.d},   {"rho0", sv.rho0},       {"paths", sv.paths},
                        {"dt", sv.dt}, {"c_plus", sv.c_plus}, {"c_minus", sv.c_minus}};
  return j;
}

void validate_config(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::Kernels:
      if (cfg.kernels.grid < 2) bad("KernelsConfig.grid", "/kernels/grid", "must be >= 2");
      if (cfg.kernels.oracle_budget < 2) bad("KernelsConfig.oracle_budget", "/kernels/oracle_budget", "must be >= 2");
      break;
    case ExperimentKind::SimulateNetwork: {
      const auto& net = cfg.network;
      check_positive(net.spec.n_in, "NetworkSpec.n_in", "/network/n_in");
      check_positive(net.spec.n, "NetworkSpec.n", "/network/n");
      check_positive(net.spec.d, "NetworkSpec.d", "/network/d");
      check_positive(net.spec.m, "NetworkSpec.m", "/network/m");
      check_positive(net.paths, "NetworkRunConfig.paths", "/network/paths");
      if (net.spec.n_in < net.spec.m) bad("NetworkSpec.n_in", "/network/n_in", "must be at least m");
      check_input(net.input, "/network/input", false);
      if (net.spec.arch == Architecture::ShapedMlp) check_shaping(net.spec.shaping, "/network/shaping", false);
      try {
        net.spec.validate();
      } catch (const Error& e) {
        bad("NetworkSpec", "/network", e.what());
      }
      break;
    }
    case ExperimentKind::SimulateChain: {
      const auto& c = cfg.chain;
      check_positive(c.n, "ChainRunConfig.n", "/chain/n");
      check_positive(c.d, "ChainRunConfig.d", "/chain/d");
      check_positive(c.m, "ChainRunConfig.m", "/chain/m");
      check_positive(c.paths, "ChainRunConfig.paths", "/chain/paths");
      check_input(c.input, "/chain/input", c.kind == ChainKind::Rescaled);
      if (c.kind == ChainKind::Covariance) check_shaping(c.shaping, "/chain/shaping", false);
      if (c.kind == ChainKind::Shaped) check_shaping(c.shaping, "/chain/shaping", true);
      if (c.kind == ChainKind::Rescaled) {
        if (c.m != 2) bad("ChainRunConfig.m", "/chain/m", "the rescaled chain tracks a single pair (m = 2)");
        check_positive(c.max_depth_ratio, "ChainRunConfig.max_depth_ratio", "/chain/max_depth_ratio");
        if (c.d > c.n * c.max_depth_ratio) bad("ChainRunConfig.d", "/chain/d", "exceeds n * max_depth_ratio");
      }
      break;
    }
    case ExperimentKind::IntegrateLimit: {
      const auto& c = cfg.limit;
      check_sde(c.sde, "/limit/sde");
      if (c.kind != LimitKind::QSde) {
        check_positive(c.m, "LimitRunConfig.m", "/limit/m");
        if (c.m > 4) bad("LimitRunConfig.m", "/limit/m", "limit solvers support m <= 4");
        check_input(c.input, "/limit/input", false);
      }
      if (c.kind == LimitKind::CovSde) {
        if (c.drift == DriftKind::Resnet) bad("LimitRunConfig.drift", "/limit/drift", "the covariance SDE needs relu_like or smooth");
        check_shaping(c.shaping, "/limit/shaping", c.drift == DriftKind::ReluLike);
        if (c.drift == DriftKind::Smooth && c.shaping.kind != ShapingKind::Smooth) {
          bad("ShapingConfig.kind", "/limit/shaping/kind", "must be smooth for a smooth drift");
        }
      }
      if (c.kind == LimitKind::CovOde) {
        if (c.drift == DriftKind::Smooth) bad("LimitRunConfig.drift", "/limit/drift", "the ODE needs resnet or relu_like");
        if (c.drift == DriftKind::ReluLike) check_shaping(c.shaping, "/limit/shaping", true);
      }
      if (c.kind == LimitKind::QSde) {
        if (c.sde.scheme == SdeScheme::EulerMaruyama && !(c.sde.t0 > 0.0)) {
          bad("SdeRunConfig.t0", "/limit/sde/t0", "must be > 0 for the euler_maruyama scheme");
        }
        if (c.r0 && !std::isfinite(*c.r0)) bad("LimitRunConfig.r0", "/limit/r0", "must be finite");
        if (!c.r0) check_input(c.input, "/limit/input", true);
      }
      break;
    }
    case ExperimentKind::Compare:
      if (cfg.compare.a.empty()) bad("CompareConfig.a", "/compare/a", "must name an ensemble file");
      if (cfg.compare.b.empty()) bad("CompareConfig.b", "/compare/b", "must name an ensemble file");
      if (cfg.compare.time && !std::isfinite(*cfg.compare.time)) bad("CompareConfig.time", "/compare/time", "must be finite");
      break;
    case ExperimentKind::ReproduceFig1: {
      const auto& c = cfg.fig1;
      check_positive(c.n, "Fig1Config.n", "/fig1/n");
      check_positive(c.d, "Fig1Config.d", "/fig1/d");
      check_positive(c.paths, "Fig1Config.paths", "/fig1/paths");
      if (!(c.rho0 > -1.0 && c.rho0 < 1.0)) bad("Fig1Config.rho0", "/fig1/rho0", "must lie in (-1, 1)");
      check_step(c.dt, static_cast<double>(c.d) / static_cast<double>(c.n), "Fig1Config.dt", "/fig1/dt");
      if (c.r0 && !std::isfinite(*c.r0)) bad("Fig1Config.r0", "/fig1/r0", "must be finite");
      break;
    }
    case ExperimentKind::OdeVsResnet: {
      const auto& c = cfg.ode_vs_resnet;
      check_positive(c.n, "OdeVsResnetConfig.n", "/ode_vs_resnet/n");
      check_positive(c.d, "OdeVsResnetConfig.d", "/ode_vs_resnet/d");
      check_positive(c.paths, "OdeVsResnetConfig.paths", "/ode_vs_resnet/paths");
      if (c.n < 2) bad("OdeVsResnetConfig.n", "/ode_vs_resnet/n", "must be >= 2 (two inputs)");
      if (!(c.rho0 >= -1.0 && c.rho0 <= 1.0)) bad("OdeVsResnetConfig.rho0", "/ode_vs_resnet/rho0", "must lie in [-1, 1]");
      check_step(c.dt, 1.0, "OdeVsResnetConfig.dt", "/ode_vs_resnet/dt");
      break;
    }
    case ExperimentKind::ShapedVsSde: {
      const auto& c = cfg.shaped_vs_sde;
      check_positive(c.n, "ShapedVsSdeConfig.n", "/shaped_vs_sde/n");
      check_positive(c.d, "ShapedVsSdeConfig.d", "/shaped_vs_sde/d");
      check_positive(c.paths, "ShapedVsSdeConfig.paths", "/shaped_vs_sde/paths");
      if (!(c.rho0 >= -1.0 && c.rho0 <= 1.0)) bad("ShapedVsSdeConfig.rho0", "/shaped_vs_sde/rho0", "must lie in [-1, 1]");
      check_step(c.dt, static_cast<double>(c.d) / static_cast<double>(c.n), "ShapedVsSdeConfig.dt", "/shaped_vs_sde/dt");
      if (!std::isfinite(c.c_plus)) bad("ShapedVsSdeConfig.c_plus", "/shaped_vs_sde/c_plus", "must be finite");
      if (!std::isfinite(c.c_minus)) bad("ShapedVsSdeConfig.c_minus", "/shaped_vs_sde/c_minus", "must be finite");
      break;
    }
  }
}

namespace {

std::uint64_t fnv1a_update(std::uint64_t h, const char* data, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Content hash of an input ensemble; the path itself when unreadable.
std::string input_identity(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return path;
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) h = fnv1a_update(h, buf, static_cast<std::size_t>(in.gcount()));
  return "fnv1a64:" + hash_hex(h);
}

}  // namespace

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  Json j = config_to_json(cfg);
  j.erase("output_dir");
  j.erase("threads");
  if (cfg.kind == ExperimentKind::Compare) {
    j["compare"]["a"] = input_identity(cfg.compare.a);
    j["compare"]["b"] = input_identity(cfg.compare.b);
  }
  const std::string text = j.dump();
  return fnv1a_update(0xcbf29ce484222325ull, text.data(), text.size());
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace covlim
