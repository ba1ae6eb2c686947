# Copyright 2026 The covlim Authors
# SPDX-License-Identifier: Apache-2.0
import json
import math
import os

import numpy as np
import pytest

import covlim


def test_kernel_closed_forms_match_oracle():
    for rho in (-0.9, -0.3, 0.0, 0.5, 0.99):
        for p, r in ((0, 0), (1, 1), (2, 2), (3, 1)):
            value, err = covlim.kernel_oracle(p, r, rho, budget=200)
            assert abs(covlim.kernel_k(p, r, rho) - value) <= 1e-8


def test_kernel_values_at_endpoints():
    assert covlim.kernel_k(1, 1, 1.0) == pytest.approx(0.5)
    assert covlim.kernel_k(1, 1, 0.0) == pytest.approx(1.0 / (2.0 * math.pi))
    assert covlim.f_resnet(1.0) == pytest.approx(1.0)
    assert covlim.nu(1.0, 1.0, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_errors_carry_module_and_op():
    with pytest.raises(covlim.CovlimError) as info:
        covlim.kernel_k(1, 2, 0.5)
    assert info.value.module == "gaussian_kernels"
    assert info.value.kind == "unsupported_kernel"


def test_q_chain_shapes_and_determinism():
    a = covlim.run_q_chain(rho0=0.3, n=32, d=32, paths=50, seed=7)
    b = covlim.run_q_chain(rho0=0.3, n=32, d=32, paths=50, seed=7, threads=2)
    assert a.kind == "q_chain"
    assert a.values.shape == (50, a.times.size, 2)
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_allclose(a.times[-1], 1.0)


def test_q_sde_log_scheme_runs_from_zero():
    e = covlim.integrate_q_sde(r0=math.log(0.7), T=1.0, dt=1e-2, paths=20, seed=1)
    r = e.values[:, -1, 1]
    assert np.all(np.isfinite(r))


def test_stats_helpers():
    rng = np.random.default_rng(0)
    a = rng.normal(size=2000)
    assert covlim.ks_distance(a, a) == 0.0
    grid, density, h = covlim.kde(a)
    assert h > 0
    assert np.trapezoid(density, grid) == pytest.approx(1.0, abs=1e-12)
    s = covlim.summarize(a)
    assert s["count"] == 2000
    rep = covlim.compare_samples(a, a + 10.0)
    assert rep["ks"] == 1.0


def test_run_experiment_writes_artifacts(tmp_path):
    cfg = covlim.default_config("kernels")
    cfg["output_dir"] = str(tmp_path / "kernels")
    res = covlim.run_experiment(cfg)
    assert os.path.isdir(res["output_dir"])
    assert "manifest.json" in os.listdir(res["output_dir"])
    with open(os.path.join(res["output_dir"], "manifest.json")) as f:
        assert "config_hash" in json.load(f)


def test_config_errors_name_the_field():
    cfg = covlim.default_config("integrate-limit")
    cfg["limit"]["sde"]["dt"] = -1.0
    with pytest.raises(covlim.ConfigError) as info:
        covlim.run_experiment(cfg)
    assert info.value.field.endswith(".dt")
