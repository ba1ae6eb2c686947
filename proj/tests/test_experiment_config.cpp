// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <string>

#include <json.hpp>

#include "covlim/experiment_config.hpp"
#include "covlim/experiments.hpp"

using namespace covlim;
using Json = nlohmann::ordered_json;

namespace {

const ExperimentKind kAllKinds[] = {
    ExperimentKind::Kernels,       ExperimentKind::SimulateNetwork, ExperimentKind::SimulateChain,
    ExperimentKind::IntegrateLimit, ExperimentKind::Compare,        ExperimentKind::ReproduceFig1,
    ExperimentKind::OdeVsResnet,   ExperimentKind::ShapedVsSde,
};

std::string schema_field(const Json& j) {
  try {
    validate_config(config_from_json(j));
  } catch (const SchemaError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("experiment names round trip") {
  for (auto k : kAllKinds) CHECK(parse_experiment_kind(to_string(k)) == k);
  CHECK_FALSE(parse_experiment_kind("bogus").has_value());
  CHECK(to_string(ExperimentKind::ReproduceFig1) == "reproduce-fig1");
}

TEST_CASE("config round trips through JSON") {
  for (auto k : kAllKinds) {
    auto cfg = default_config(k);
    cfg.seed = 12345;
    cfg.limit.r0 = -0.25;
    cfg.limit.shaping = ShapingConfig::smooth(SmoothBase::Softplus, 0.5, 0.3, 17);
    cfg.compare.time = 0.5;
    const Json j = config_to_json(cfg);
    const auto back = config_from_json(j);
    CHECK(config_to_json(back) == j);
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(config_from_json(Json::parse(j.dump())).limit.r0 == -0.25);
  }
}

TEST_CASE("config hash tracks computed content only") {
  auto a = default_config(ExperimentKind::ReproduceFig1);
  auto b = a;
  b.output_dir = "/somewhere/else";
  b.threads = 7;
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 1;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.fig1.dt = 0.02;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(hash_hex(0xabcull) == "0000000000000abc");
}

TEST_CASE("missing keys keep defaults and unknown keys are rejected") {
  const auto cfg = config_from_json(Json{{"experiment", "reproduce-fig1"}});
  CHECK(cfg.fig1.n == 150);
  CHECK(cfg.fig1.paths == 8192);
  CHECK(cfg.fig1.mode == QChainMode::Exact);

  try {
    config_from_json(Json{{"experiment", "kernels"}, {"kernels", {{"grid", 5}, {"gird", 6}}}});
    FAIL("expected schema error");
  } catch (const SchemaError& e) {
    CHECK(e.pointer() == "/kernels/gird");
  }
  CHECK_THROWS_AS(config_from_json(Json{{"seed", 1}}), SchemaError);
  CHECK_THROWS_AS(config_from_json(Json{{"experiment", "warp-drive"}}), SchemaError);
  CHECK_THROWS_AS(config_from_json(Json{{"experiment", "kernels"}, {"seed", "zero"}}), SchemaError);
  CHECK_THROWS_AS(config_from_json(Json{{"experiment", "kernels"}, {"seed", -1}}), SchemaError);
}

TEST_CASE("validation names the offending field") {
  Json sde_cfg{{"experiment", "integrate-limit"}, {"limit", {{"sde", {{"dt", 0.0}}}}}};
  CHECK(schema_field(sde_cfg) == "SdeRunConfig.dt");
  sde_cfg["limit"]["sde"]["dt"] = -0.1;
  CHECK(schema_field(sde_cfg) == "SdeRunConfig.dt");

  Json shaped{{"experiment", "simulate-chain"}, {"chain", {{"kind", "shaped"}, {"shaping", {{"p", 0.75}}}}}};
  CHECK(schema_field(shaped) == "ShapingConfig.p");
  shaped["chain"]["shaping"]["p"] = 0.0;
  CHECK(schema_field(shaped) == "ShapingConfig.p");
  shaped["chain"]["shaping"]["p"] = 0.5;
  CHECK(schema_field(shaped) == "");

  Json net{{"experiment", "simulate-network"}, {"network", {{"shaping", {{"p", 0.6}}}}}};
  CHECK(schema_field(net) == "ShapingConfig.p");

  for (auto k : kAllKinds) {
    if (k == ExperimentKind::Compare) continue;  // needs input files
    CHECK_NOTHROW(validate_config(default_config(k)));
  }
  CHECK_THROWS_AS(validate_config(default_config(ExperimentKind::Compare)), SchemaError);
}

TEST_CASE("structural families") {
  CHECK(structural_family("mlp") == structural_family("cov_chain"));
  CHECK(structural_family("cov_sde") == structural_family("shaped_chain"));
  CHECK(structural_family("resnet") == structural_family("cov_ode"));
  CHECK(structural_family("q_chain") == structural_family("q_sde"));
  CHECK(structural_family("mlp") != structural_family("resnet"));
  CHECK(structural_family("q_sde") != structural_family("cov_sde"));
}
