#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: test_cli.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

import json

import pandas
import pytest
import yaml

from ebdistill import __version__, load_bundle
from ebdistill.cli import ebdistill
from ebdistill.pipeline import OUTPUT_FILES


@pytest.fixture
def invoke(cli_runner, config_path, tmp_path):
    out = tmp_path / "out"

    def _invoke(*args, config=config_path):
        return cli_runner.invoke(ebdistill, ["-c", str(config), "-o", str(out), *args])

    _invoke.out = out

    return _invoke


def _ok(result):
    assert result.exit_code == 0, result.output
    return result


def test_version(cli_runner):
    result = _ok(cli_runner.invoke(ebdistill, ["--version"]))

    assert __version__ in result.output


def test_help(cli_runner):
    result = _ok(cli_runner.invoke(ebdistill, ["-h"]))

    for command in ("pipeline", "train-a", "distill", "predict", "bench", "curve"):
        assert command in result.output


def test_pipeline(invoke):
    result = _ok(invoke("pipeline"))

    assert (invoke.out / OUTPUT_FILES["bundle"]).exists()
    assert (invoke.out / OUTPUT_FILES["learning_curve"]).exists()
    assert (invoke.out / OUTPUT_FILES["stats_table"]).exists()
    assert "Wrote" in result.output


def test_log_file(invoke, tmp_path):
    log_file = tmp_path / "logs" / "run.log"

    _ok(invoke("--log-file", str(log_file), "train-a"))

    assert "train-a:" in log_file.read_text()

    with open(tmp_path / "logs" / "run.json") as fd:
        records = [json.loads(line) for line in fd]

    stages = [record for record in records if record.get("stage") == "train-a"]
    assert len(stages) == 1
    assert stages[0]["status"] == "ok"


def test_synth(invoke, tmp_path):
    output = tmp_path / "synthetic.csv"
    _ok(invoke("synth", "--output", str(output)))

    frame = pandas.read_csv(output)
    assert list(frame.columns) == ["f0", "f1", "f2", "y"]
    assert len(frame) == 40

    other = tmp_path / "other.csv"
    _ok(invoke("--seed", "3", "synth", "--output", str(other)))
    assert output.read_bytes() != other.read_bytes()


def test_step_by_step(invoke, tmp_path):
    bundle_path = invoke.out / OUTPUT_FILES["bundle"]

    _ok(invoke("train-a"))
    assert load_bundle(bundle_path).ensemble is None

    _ok(invoke("train-ensemble"))
    assert load_bundle(bundle_path).ensemble.calibrated is False

    _ok(invoke("calibrate"))
    assert load_bundle(bundle_path).ensemble.calibrated is True

    _ok(invoke("augment"))
    augmented = pandas.read_csv(invoke.out / OUTPUT_FILES["augmented"])
    assert len(augmented) == 80

    _ok(invoke("distill"))
    assert load_bundle(bundle_path).distilled is True

    _ok(invoke("evaluate"))
    assert (invoke.out / OUTPUT_FILES["learning_curve"]).exists()
    assert (invoke.out / OUTPUT_FILES["model_a_cv"]).exists()

    _ok(invoke("bench"))
    benchmark = pandas.read_csv(invoke.out / OUTPUT_FILES["benchmark"])
    assert len(benchmark) == 1

    synthetic = tmp_path / "synthetic.csv"
    _ok(invoke("synth", "--output", str(synthetic)))
    pandas.read_csv(synthetic).drop(columns=["y"]).to_csv(
        tmp_path / "features.csv",
        index=False,
    )

    output = tmp_path / "predictions.csv"
    features = str(tmp_path / "features.csv")
    _ok(invoke("predict", str(bundle_path), features, str(output)))

    predictions = pandas.read_csv(output)
    assert list(predictions.columns) == ["f0", "f1", "f2", "y_hat", "sigma_hat"]
    assert len(predictions) == 40


def test_predict_not_distilled(invoke, tmp_path):
    _ok(invoke("train-a"))

    synthetic = tmp_path / "synthetic.csv"
    _ok(invoke("synth", "--output", str(synthetic)))

    result = invoke(
        "predict",
        str(invoke.out / OUTPUT_FILES["bundle"]),
        str(synthetic),
        str(tmp_path / "predictions.csv"),
    )

    assert result.exit_code == 1
    assert not (tmp_path / "predictions.csv").exists()


def test_calibrate_without_ensemble(invoke):
    _ok(invoke("train-a"))

    assert invoke("calibrate").exit_code == 1
    assert invoke("distill").exit_code == 1


def test_missing_bundle(invoke):
    result = invoke("train-ensemble")

    assert result.exit_code == 2


def test_bad_config(invoke, tmp_path, tiny_run_config):
    tiny_run_config["augmentation"]["scale_factors"] = [0.9]

    path = tmp_path / "bad.yml"
    path.write_text(yaml.safe_dump(tiny_run_config))

    result = invoke("train-a", config=path)

    assert result.exit_code == 1
    assert not (invoke.out / OUTPUT_FILES["bundle"]).exists()


def test_curve(invoke, tmp_path):
    _ok(invoke("pipeline"))

    plots = tmp_path / "plots"
    result = _ok(
        invoke(
            "-o",
            str(plots),
            "curve",
            str(invoke.out / OUTPUT_FILES["learning_curve"]),
            "--name",
            "tiny",
        )
    )

    for key in ("curve_nrmse", "curve_rmse", "curve_sigma"):
        assert (plots / OUTPUT_FILES[key]).exists()
        assert OUTPUT_FILES[key] in result.output
