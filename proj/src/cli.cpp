// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include "covlim/cli.hpp"

#include <CLI11.hpp>
#include <deque>
#include <fstream>
#include <optional>
#include <string>

#include "covlim/error.hpp"
#include "covlim/experiment_config.hpp"
#include "covlim/experiments.hpp"

namespace covlim {

using Json = nlohmann::ordered_json;

namespace {

// A command line flag that overrides one config field, addressed by its JSON
// pointer, so flags and files go through the same schema checks.
struct Override {
  std::string pointer;
  std::optional<std::uint64_t> count;
  std::optional<double> real;
  std::optional<std::string> text;
  bool flag = false;
  bool flag_value = true;
};

class Overrides {
 public:
  void count(CLI::App* app, const std::string& name, const std::string& pointer, const std::string& help) {
    auto& o = add(pointer);
    app->add_option(name, o.count, help);
  }
  void real(CLI::App* app, const std::string& name, const std::string& pointer, const std::string& help) {
    auto& o = add(pointer);
    app->add_option(name, o.real, help);
  }
  void text(CLI::App* app, const std::string& name, const std::string& pointer, const std::string& help) {
    auto& o = add(pointer);
    app->add_option(name, o.text, help);
  }
  void boolean(CLI::App* app, const std::string& name, const std::string& pointer, bool value, const std::string& help) {
    auto& o = add(pointer);
    o.flag_value = value;
    app->add_flag(name, o.flag, help);
  }

  void apply(Json& j) const {
    for (const auto& o : items_) {
      const Json::json_pointer ptr(o.pointer);
      if (o.count) j[ptr] = *o.count;
      if (o.real) j[ptr] = *o.real;
      if (o.text) j[ptr] = *o.text;
      if (o.flag) j[ptr] = o.flag_value;
    }
  }

 private:
  Override& add(const std::string& pointer) {
    items_.push_back(Override{pointer, {}, {}, {}, false, true});
    return items_.back();
  }
  std::deque<Override> items_;
};

Json read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cli", "read_config", "cannot open config file " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("ExperimentConfig", "/", std::string("invalid JSON: ") + e.what());
  }
}

void report_error(std::ostream& err, const Json& body) { err << body.dump() << '\n'; }

void add_common(CLI::App* app, Overrides& ov, std::string* config_path) {
  if (config_path) app->add_option("--config", *config_path, "JSON config file; flags override its values");
  ov.count(app, "--seed", "/seed", "master seed");
  ov.text(app, "--out", "/output_dir", "output directory (default $COVLIM_OUTPUT_ROOT/<experiment>)");
  ov.count(app, "--threads", "/threads", "worker threads, 0 = hardware concurrency");
  ov.boolean(app, "--no-csv", "/formats/csv", false, "skip CSV artifacts");
  ov.boolean(app, "--no-binary", "/formats/binary", false, "skip binary ensemble artifacts");
}

void add_shaping(CLI::App* app, Overrides& ov, const std::string& base) {
  ov.text(app, "--shaping", base + "/kind", "relu_like | smooth | unshaped");
  ov.real(app, "--c-plus", base + "/c_plus", "positive-side shaping constant");
  ov.real(app, "--c-minus", base + "/c_minus", "negative-side shaping constant");
  ov.real(app, "--p", base + "/p", "shaping exponent in (0, 1/2]");
  ov.real(app, "--a", base + "/a", "smooth shaping scale");
  ov.text(app, "--base", base + "/base", "smooth base: tanh | sin | softplus");
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"covlim: covariance scaling limits of shaped networks at initialization"};
  app.require_subcommand(1);

  struct Command {
    CLI::App* app;
    std::optional<ExperimentKind> kind;  // unset for run and validate
    Overrides overrides;
    std::string config_path;
  };
  std::deque<Command> commands;
  auto make = [&](const std::string& name, const std::string& help, std::optional<ExperimentKind> kind) -> Command& {
    commands.push_back(Command{app.add_subcommand(name, help), kind, {}, {}});
    return commands.back();
  };

  auto& run = make("run", "run the experiment described by a config file", std::nullopt);
  run.app->add_option("config", run.config_path, "config file")->required();
  add_common(run.app, run.overrides, nullptr);

  auto& validate = make("validate", "check a config file without running it", std::nullopt);
  validate.app->add_option("config", validate.config_path, "config file")->required();

  auto& kernels = make("kernels", "tabulate kernel closed forms and oracle deltas", ExperimentKind::Kernels);
  add_common(kernels.app, kernels.overrides, &kernels.config_path);
  kernels.overrides.count(kernels.app, "--grid", "/kernels/grid", "number of rho grid points");
  kernels.overrides.count(kernels.app, "--budget", "/kernels/oracle_budget", "oracle quadrature nodes per axis");

  auto& network = make("simulate-network", "simulate finite networks", ExperimentKind::SimulateNetwork);
  add_common(network.app, network.overrides, &network.config_path);
  {
    auto& o = network.overrides;
    o.text(network.app, "--arch", "/network/arch", "shaped_mlp | resnet");
    o.count(network.app, "--n-in", "/network/n_in", "input dimension");
    o.count(network.app, "--n", "/network/n", "width");
    o.count(network.app, "--d", "/network/d", "depth");
    o.count(network.app, "--m", "/network/m", "number of inputs");
    o.count(network.app, "--paths", "/network/paths", "independent networks");
    o.real(network.app, "--rho0", "/network/input/rho0", "input correlation");
    add_shaping(network.app, o, "/network/shaping");
  }

  auto& chain = make("simulate-chain", "run covariance, shaped or rescaled-correlation chains",
                     ExperimentKind::SimulateChain);
  add_common(chain.app, chain.overrides, &chain.config_path);
  {
    auto& o = chain.overrides;
    o.text(chain.app, "--kind", "/chain/kind", "covariance | shaped | rescaled");
    o.count(chain.app, "--n", "/chain/n", "width");
    o.count(chain.app, "--d", "/chain/d", "depth");
    o.count(chain.app, "--m", "/chain/m", "number of inputs");
    o.count(chain.app, "--paths", "/chain/paths", "independent chains");
    o.real(chain.app, "--rho0", "/chain/input/rho0", "initial correlation");
    o.text(chain.app, "--mode", "/chain/mode", "rescaled chain: approximate | exact");
    o.text(chain.app, "--noise-kind", "/chain/noise_kind", "gaussian | rademacher");
    o.boolean(chain.app, "--infinite-width", "/chain/infinite_width", true, "drop 1/n drift and noise");
    o.boolean(chain.app, "--no-noise", "/chain/noise", false, "shaped chain without noise");
    add_shaping(chain.app, o, "/chain/shaping");
  }

  auto& limit = make("integrate-limit", "integrate the limiting SDE or ODE", ExperimentKind::IntegrateLimit);
  add_common(limit.app, limit.overrides, &limit.config_path);
  {
    auto& o = limit.overrides;
    o.text(limit.app, "--kind", "/limit/kind", "cov_sde | cov_ode | q_sde");
    o.count(limit.app, "--m", "/limit/m", "number of inputs");
    o.real(limit.app, "--rho0", "/limit/input/rho0", "initial correlation");
    o.text(limit.app, "--drift", "/limit/drift", "relu_like | smooth | resnet");
    o.real(limit.app, "--r0", "/limit/r0", "initial log q for the q-SDE");
    o.real(limit.app, "--t0", "/limit/sde/t0", "start time");
    o.real(limit.app, "--T", "/limit/sde/T", "end time");
    o.real(limit.app, "--dt", "/limit/sde/dt", "step size");
    o.count(limit.app, "--paths", "/limit/sde/paths", "independent paths");
    o.text(limit.app, "--scheme", "/limit/sde/scheme", "euler_maruyama | log_euler_shifted");
    o.count(limit.app, "--stride", "/limit/sde/record_stride", "record every k-th step");
    o.boolean(limit.app, "--no-noise", "/limit/noise", false, "q-SDE without noise");
    add_shaping(limit.app, o, "/limit/shaping");
  }

  auto& compare = make("compare", "compare two binary ensembles", ExperimentKind::Compare);
  add_common(compare.app, compare.overrides, &compare.config_path);
  {
    auto& o = compare.overrides;
    o.text(compare.app, "a", "/compare/a", "first ensemble (.bin)");
    o.text(compare.app, "b", "/compare/b", "second ensemble (.bin)");
    o.real(compare.app, "--time", "/compare/time", "time to compare at (default: terminal)");
    o.text(compare.app, "--quantity", "/compare/quantity", "V | rho | log_V | q | r");
  }

  auto& fig1 = make("reproduce-fig1", "rescaled-correlation chain vs its log-scheme SDE", ExperimentKind::ReproduceFig1);
  add_common(fig1.app, fig1.overrides, &fig1.config_path);
  {
    auto& o = fig1.overrides;
    o.count(fig1.app, "--n", "/fig1/n", "width");
    o.count(fig1.app, "--d", "/fig1/d", "depth");
    o.real(fig1.app, "--rho0", "/fig1/rho0", "initial correlation");
    o.count(fig1.app, "--paths", "/fig1/paths", "paths per ensemble");
    o.real(fig1.app, "--dt", "/fig1/dt", "SDE step size");
    o.real(fig1.app, "--r0", "/fig1/r0", "SDE initial log q (default log(1 - rho0))");
    o.text(fig1.app, "--mode", "/fig1/mode", "approximate | exact");
  }

  auto& ode = make("ode-vs-resnet", "ResNet ensemble correlation vs the covariance ODE", ExperimentKind::OdeVsResnet);
  add_common(ode.app, ode.overrides, &ode.config_path);
  {
    auto& o = ode.overrides;
    o.count(ode.app, "--n", "/ode_vs_resnet/n", "width");
    o.count(ode.app, "--d", "/ode_vs_resnet/d", "depth");
    o.real(ode.app, "--rho0", "/ode_vs_resnet/rho0", "input correlation");
    o.count(ode.app, "--paths", "/ode_vs_resnet/paths", "independent networks");
    o.real(ode.app, "--dt", "/ode_vs_resnet/dt", "ODE step size");
  }

  auto& shaped = make("shaped-vs-sde", "shaped covariance chain vs the covariance SDE", ExperimentKind::ShapedVsSde);
  add_common(shaped.app, shaped.overrides, &shaped.config_path);
  {
    auto& o = shaped.overrides;
    o.count(shaped.app, "--n", "/shaped_vs_sde/n", "width");
    o.count(shaped.app, "--d", "/shaped_vs_sde/d", "depth");
    o.real(shaped.app, "--rho0", "/shaped_vs_sde/rho0", "input correlation");
    o.count(shaped.app, "--paths", "/shaped_vs_sde/paths", "paths per ensemble");
    o.real(shaped.app, "--dt", "/shaped_vs_sde/dt", "SDE step size");
    o.real(shaped.app, "--c-plus", "/shaped_vs_sde/c_plus", "positive-side shaping constant");
    o.real(shaped.app, "--c-minus", "/shaped_vs_sde/c_minus", "negative-side shaping constant");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, Json{{"status", "error"}, {"error", "usage"}, {"message", e.what()}});
    return kExitSchema;
  }

  Command* active = nullptr;
  for (auto& c : commands)
    if (c.app->parsed()) active = &c;
  if (active == nullptr) return kExitFailure;

  try {
    Json j = active->config_path.empty() ? Json::object() : read_config_file(active->config_path);
    if (active->kind) j["experiment"] = std::string(to_string(*active->kind));
    active->overrides.apply(j);
    const ExperimentConfig cfg = config_from_json(j);
    validate_config(cfg);
    if (active == &validate) {
      out << Json{{"status", "ok"}, {"experiment", std::string(to_string(cfg.kind))},
                  {"config_hash", hash_hex(config_hash(cfg))}, {"errors", Json::array()}}
                 .dump()
          << '\n';
      return kExitOk;
    }
    const RunResult result = run_experiment(cfg);
    out << Json{{"status", "ok"},
                {"experiment", std::string(to_string(cfg.kind))},
                {"config_hash", hash_hex(config_hash(cfg))},
                {"output_dir", result.output_dir.string()},
                {"wall_seconds", result.wall_seconds},
                {"summary", result.summary}}
               .dump(2)
        << '\n';
    return kExitOk;
  } catch (const SchemaError& e) {
    report_error(err, Json{{"status", "error"},
                           {"error", "schema"},
                           {"field", e.field()},
                           {"pointer", e.pointer()},
                           {"message", e.what()}});
    return kExitSchema;
  } catch (const Error& e) {
    const bool io = e.kind() == ErrorKind::Io;
    report_error(err, Json{{"status", "error"},
                           {"error", io ? "io" : "numeric"},
                           {"kind", std::string(to_string(e.kind()))},
                           {"module", e.module()},
                           {"op", e.op()},
                           {"message", e.what()}});
    return io ? kExitIo : kExitNumeric;
  } catch (const std::exception& e) {
    report_error(err, Json{{"status", "error"}, {"error", "internal"}, {"message", e.what()}});
    return kExitFailure;
  }
}

}  // namespace covlim
