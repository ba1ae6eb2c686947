# Copyright 2026 The covlim Authors
# SPDX-License-Identifier: Apache-2.0
"""Covariance limits of shaped MLPs and ResNets."""

import json

from ._core import (
    ConfigError,
    CovlimError,
    PathEnsemble,
    __version__,
    compare_samples,
    expanded_correlation_update,
    f_resnet,
    integrate_q_sde,
    kde,
    kernel_k,
    kernel_oracle,
    ks_distance,
    mu_sigma_correlation,
    nu,
    read_ensemble,
    run_q_chain,
    shaped_relu_k1,
    silverman_bandwidth,
    summarize,
)
from . import _core


def default_config(kind):
    """Default experiment config for `kind` as a dict."""
    return json.loads(_core.default_config(kind))


def run_experiment(config):
    """Run an experiment config (dict or JSON text) and write its artifacts.

    Returns a dict with output_dir, artifacts, summary and wall_seconds.
    """
    text = config if isinstance(config, str) else json.dumps(config)
    out_dir, artifacts, summary, wall = _core.run_experiment_json(text)
    return {
        "output_dir": out_dir,
        "artifacts": list(artifacts),
        "summary": json.loads(summary),
        "wall_seconds": wall,
    }


__all__ = [
    "ConfigError",
    "CovlimError",
    "PathEnsemble",
    "__version__",
    "compare_samples",
    "default_config",
    "expanded_correlation_update",
    "f_resnet",
    "integrate_q_sde",
    "kde",
    "kernel_k",
    "kernel_oracle",
    "ks_distance",
    "mu_sigma_correlation",
    "nu",
    "read_ensemble",
    "run_experiment",
    "run_q_chain",
    "shaped_relu_k1",
    "silverman_bandwidth",
    "summarize",
]
