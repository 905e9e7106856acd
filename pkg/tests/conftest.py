#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: conftest.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

import copy
import os

import pytest
import yaml

from ebdistill import (
    MLPConfig,
    SyntheticSpec,
    apply_scaler,
    calibrate_ensemble_cv,
    fit_scaler,
    generate_synthetic,
    train_ensemble,
)


TINY_MLP = MLPConfig(
    hidden_widths=(8,),
    epochs=20,
    learning_rate=0.01,
    batch_size=16,
    init_seed=1,
    shuffle_seed=2,
)


def pytest_addoption(parser):
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="run the slow desk-scale tests",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return

    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def no_user_config(monkeypatch):
    monkeypatch.delenv("EBDISTILL_CONFIG_PATH", raising=False)
    monkeypatch.delenv("EBDISTILL_OUTPUT", raising=False)


@pytest.fixture(scope="session")
def tiny_mlp():
    return TINY_MLP


@pytest.fixture(scope="session")
def synthetic_data():
    return generate_synthetic(
        SyntheticSpec(
            n_samples=80,
            n_features=3,
            function="linear",
            noise="heteroscedastic",
            noise_level=0.5,
            seed=3,
        )
    )


@pytest.fixture(scope="session")
def scaled_data(synthetic_data):
    return apply_scaler(fit_scaler(synthetic_data), synthetic_data)


@pytest.fixture(scope="session")
def calibrated_ensemble(scaled_data):
    ensemble = train_ensemble(scaled_data, 3, TINY_MLP, seed=5)
    return calibrate_ensemble_cv(ensemble, scaled_data, TINY_MLP, seed=6, k=3, n_bins=4)


TINY_RUN = {
    "seed": 7,
    "synthetic": {
        "n_samples": 40,
        "n_features": 3,
        "function": "linear",
        "noise": "heteroscedastic",
        "noise_level": 0.5,
    },
    "model_a": {"hidden_widths": [4], "epochs": 3, "batch_size": 16},
    "ensemble": {"n_members": 2},
    "calibration": {"n_bins": 2, "n_folds": 2},
    "augmentation": {"scale_factors": [0.01, 0.1], "sizes": [60, 80]},
    "model_b": {
        "hidden_widths": [4],
        "epochs": 3,
        "batch_size": 16,
        "scale_factor": 0.01,
    },
    "evaluation": {"n_folds": 2},
    "benchmark": {"batch_size": 32, "repeats": 3},
}


@pytest.fixture(scope="session")
def tiny_run():
    return copy.deepcopy(TINY_RUN)


@pytest.fixture
def tiny_run_config():
    return copy.deepcopy(TINY_RUN)


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "tiny.yml"
    path.write_text(yaml.safe_dump(TINY_RUN))

    yield path

    if os.path.exists(path):
        path.unlink()
