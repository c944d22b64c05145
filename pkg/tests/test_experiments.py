from __future__ import annotations

import math

import numpy as np
import pytest

from conjfield.errors import PreconditionError
from conjfield.experiments import ExperimentConfig, noise_experiment, perturb


def test_additive_noise_bounds():
    rng = np.random.default_rng(0)
    y = perturb(np.zeros(10_000), 0.5, "additive-interval", rng)
    assert y.min() >= -0.25 and y.max() <= 0.25
    assert y.min() < -0.24 and y.max() > 0.24


def test_relative_noise_bounds():
    rng = np.random.default_rng(0)
    base = np.linspace(1, 2, 10_000)
    y = perturb(base, 0.05, "relative", rng)
    ratio = y / base - 1
    assert ratio.min() >= -0.05 and ratio.max() <= 0.05


def test_config_rejects_unknown_keys_and_bad_values():
    with pytest.raises(PreconditionError):
        ExperimentConfig.from_dict({"nope": 1})
    with pytest.raises(PreconditionError):
        ExperimentConfig(noise="gaussian")
    with pytest.raises(PreconditionError):
        ExperimentConfig(sigmas=[-1.0])


def test_config_json_round_trip(tmp_path):
    cfg = ExperimentConfig(sigmas=[0.1, 0.2], replicates=3, seed=7)
    p = tmp_path / "c.json"
    import json

    p.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.from_json(p) == cfg


def test_small_noise_recovery():
    rows = noise_experiment(ExperimentConfig(sigmas=[0.1], replicates=10))
    assert len(rows) == 1
    assert rows[0].C_v < 0.1


def test_noiseless_run():
    (row,) = noise_experiment(ExperimentConfig(sigmas=[0.0], replicates=2))
    assert row.eps_v < 1e-8
    assert math.isnan(row.C_v)
    assert "C_v-undefined" in row.flags


def test_rational_fitter_sweep_row():
    cfg = ExperimentConfig(example="singular", sigmas=[0.05], replicates=2, noise="relative",
                           fitter="rational", solver="fixed-point", x_range=(-0.5, 1.2),
                           eval_range=(-0.45, 1.2), n_pairs=200)
    (row,) = noise_experiment(cfg)
    assert row.eps_v < 0.2


def test_sweep_is_deterministic():
    cfg = ExperimentConfig(sigmas=[0.5, 1.9], replicates=3)
    a = noise_experiment(cfg)
    b = noise_experiment(cfg)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]
