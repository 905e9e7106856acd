#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: test_configuration.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import copy
import json
import os

import pytest
from yaml import safe_load

from ebdistill import (
    AugmentationSettings,
    Configuration,
    DataConfig,
    RunConfig,
    ValidationError,
    get_config,
)
from ebdistill.configuration import DEFAULT_PATHS, read_yaml_file


BASE_CONFIG_FILE = os.path.join(os.path.dirname(__file__), "etc/test.yml")


BASE = """
model_a:
    learning_rate: 0.1

output:
    threads: 2
"""

EXTENDABLE = """
#

#!extends {base_path}

model_a:
    # test
    learning_rate: 0.03
"""


@pytest.fixture(autouse=True)
def cleanup():
    yield

    if "TEST_CONFIG_PATH" in os.environ:
        del os.environ["TEST_CONFIG_PATH"]


@pytest.fixture
def config_file(tmp_path):
    content = """
    model_a:
        learning_rate: 0.02
    """

    tmp_file = tmp_path / "test_config.yml"
    tmp_file.write_text(content)

    yield tmp_file

    tmp_file.unlink()


@pytest.fixture
def update_default_paths(config_file):
    orig_paths = DEFAULT_PATHS.copy()

    DEFAULT_PATHS[:] = [str(config_file.parent / "{name}_config")]

    yield

    DEFAULT_PATHS[:] = orig_paths


@pytest.fixture
def set_envvar(monkeypatch):
    monkeypatch.setenv("A_TEST_VARIABLE", "blah")
    monkeypatch.setenv("ANOTHER_VARIABLE", "foo")


@pytest.fixture
def extendable(tmp_path):
    base_path = tmp_path / "base.yaml"
    base_path.write_text(BASE)

    path = tmp_path / "extendable.yaml"
    path.write_text(EXTENDABLE.format(base_path=str(base_path)))

    yield path, base_path


@pytest.fixture
def defaults():
    return get_config("ebdistill", allow_user=False)


def test_configuration(config_file):
    config = Configuration()
    assert config == {}

    config = Configuration(config_file)
    assert config["model_a"]["learning_rate"] == 0.02

    config = Configuration(base_config=config_file)
    assert config["model_a"]["learning_rate"] == 0.02


def test_configuration_user(config_file):
    config = Configuration(config_file, base_config=BASE_CONFIG_FILE)
    assert config["model_a"]["learning_rate"] == 0.02
    assert config["model_a"]["epochs"] == 1


def test_configuration_envvar(set_envvar):
    config = Configuration(BASE_CONFIG_FILE)
    assert config["output"]["directory"] == "blah/runs/foo"


def test_configuration_envvar_with_fallback():
    config = Configuration(BASE_CONFIG_FILE)
    assert config["data"]["name"] == "my default value"


def test_run_config_from_test_file(set_envvar):
    config = get_config("ebdistill", user_path=BASE_CONFIG_FILE)
    run = RunConfig.from_config(config)

    assert run.seed == 3
    assert run.data.path is None
    assert run.data.name == "my default value"
    assert run.model_a.learning_rate == 0.01
    assert run.model_a.epochs == 1
    assert run.model_a.hidden_widths == (64, 64)
    assert run.ensemble.n_members == 3
    assert run.output_dir == "blah/runs/foo"


def test_configurations_bad_value():
    with pytest.raises(ValidationError):
        Configuration(1)  # type: ignore


def test_configuration_dict():
    config = Configuration(
        {"model_a": {"epochs": 4}, "seed": 11},
        base_config=BASE_CONFIG_FILE,
    )
    assert config["model_a"]["learning_rate"] == 0.01
    assert config["model_a"]["epochs"] == 4
    assert config["seed"] == 11


def test_configuration_base_dict():
    config = {"model_a": {"epochs": 1}}
    conf = Configuration(base_config=config)

    assert conf._BASE == config
    assert conf._BASE_CONFIG_FILE is None
    assert conf._CONFIG_FILE is None


def test_configuration_reload(config_file):
    config = Configuration(config_file, base_config=BASE_CONFIG_FILE)
    assert config["model_a"]["learning_rate"] == 0.02
    assert config["model_a"]["epochs"] == 1

    # Modify config_file
    with open(config_file, "w") as f:
        f.write(
            """
model_a:
    learning_rate: 0.05
"""
        )

    config.reload()
    assert config["model_a"]["learning_rate"] == 0.05
    assert config["model_a"]["epochs"] == 1


def test_configuration_reload_no_change(config_file):
    config = Configuration(config_file, base_config=safe_load(BASE))
    config.reload()

    assert config["model_a"]["learning_rate"] == 0.02
    assert config["output"]["threads"] == 2

    assert len(config) == 2
    assert len(config["model_a"]) == 1
    assert len(config["output"]) == 1


def test_get_config_etc():
    config = get_config("test", config_file=BASE_CONFIG_FILE, allow_user=False)
    assert isinstance(config, Configuration)
    assert config["model_a"]["learning_rate"] == 0.01


def test_get_config_etc_with_user(config_file):
    config = get_config("test", config_file=BASE_CONFIG_FILE, user_path=config_file)
    assert isinstance(config, Configuration)
    assert config["model_a"]["learning_rate"] == 0.02
    assert config["model_a"]["epochs"] == 1


def test_get_config_etc_with_user_str(config_file):
    config = get_config(
        "test",
        config_file=BASE_CONFIG_FILE,
        user_path=str(config_file),
    )
    assert config["model_a"]["learning_rate"] == 0.02


def test_get_config_missing_user_path(tmp_path):
    with pytest.raises(ValidationError, match="not found"):
        get_config("test", config_file=BASE_CONFIG_FILE, user_path=tmp_path / "no.yml")


def test_get_config_default_path(update_default_paths, config_file):
    config = get_config("test", config_file=BASE_CONFIG_FILE)
    assert config["model_a"]["learning_rate"] == 0.02


def test_get_config_envvar_path(config_file):
    os.environ["TEST_CONFIG_PATH"] = str(config_file)

    config = get_config("test", config_file=BASE_CONFIG_FILE)
    assert config["model_a"]["learning_rate"] == 0.02


def test_extends(extendable):
    path, __ = extendable
    data = read_yaml_file(path)

    assert data["model_a"]["learning_rate"] == 0.03
    assert data["output"]["threads"] == 2


def test_extends_file_not_found(extendable):
    path, base_path = extendable
    base_path.unlink()

    with pytest.raises(ValidationError, match="extends"):
        read_yaml_file(path)


def test_dont_extend(extendable):
    path, __ = extendable
    data = read_yaml_file(path, use_extends=False)

    assert data["model_a"]["learning_rate"] == 0.03
    assert "output" not in data


def test_extends_from_file(tmp_path):
    base_path = tmp_path / "subdir" / "base.yaml"
    (tmp_path / "subdir").mkdir()
    base_path.write_text(BASE)

    extendable_path = tmp_path / "extendable.yaml"
    extendable_relative = EXTENDABLE.format(base_path="subdir/base.yaml")
    extendable_path.write_text(extendable_relative)

    data = read_yaml_file(extendable_path)

    assert data["model_a"]["learning_rate"] == 0.03
    assert "output" in data


def test_read_empty_yaml(tmp_path):
    path = tmp_path / "base.yaml"
    path.touch()

    data = read_yaml_file(path)

    assert data == {}


def test_read_invalid_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("model_a: [unclosed\n")

    with pytest.raises(ValidationError, match="invalid YAML"):
        read_yaml_file(path)

    path.write_text("- a list\n- not a mapping\n")
    with pytest.raises(ValidationError, match="not a mapping"):
        read_yaml_file(path)


def test_read_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"ensemble": {"n_members": 4}}))

    assert read_yaml_file(path)["ensemble.n_members"] == 4


def test_configuration_copy():
    config = {"model_a": {"epochs": 1}}
    conf = Configuration(base_config=config)

    copy1 = conf.copy()
    assert isinstance(copy1, Configuration)

    copy2 = copy.copy(conf)
    assert isinstance(copy2, Configuration)
    copy2["model_a"]["epochs"] = 2
    assert conf["model_a"]["epochs"] == 1


def test_configuration_recursive_get():
    config = {"model_a": {"epochs": 1}}
    conf = Configuration(base_config=config)

    assert conf["model_a.epochs"] == 1
    assert conf["model_a.batch_size"] is None
    assert conf.get("model_a.batch_size", default=-1) == -1
    assert conf.get("model_a.epochs.a1", default=-1) == -1
    assert conf.to_dict() == config


def test_run_config_defaults(defaults):
    run = RunConfig.from_config(defaults)

    assert run.seed == 42
    assert run.data.path is None
    assert run.data.name == "synthetic"
    assert run.synthetic.function == "friedman"
    assert run.model_a.hidden_widths == (64, 64)
    assert run.model_b.hidden_widths == (64, 64)
    assert run.ensemble.n_members == 10
    assert run.calibration.n_bins == 10
    assert run.augmentation.scale_factors == (0.01, 0.1, 0.3)
    assert run.augmentation.sizes == (1000, 5000, 20000)
    assert run.distillation.scale_factor == 0.01
    assert run.distillation.n_total is None
    assert run.output_dir == "ebdistill-output"
    assert run.threads == 1


def test_run_config_derived_seeds(defaults):
    run = RunConfig.from_config(defaults)
    again = RunConfig.from_config(defaults)
    other = RunConfig.from_config(defaults, seed=43)

    assert run == again
    assert run.ensemble.seed != run.calibration.seed
    assert run.model_a.init_seed != run.model_b.init_seed
    assert run.model_b.init_seed != run.model_b.shuffle_seed

    assert other.seed == 43
    assert other.ensemble.seed != run.ensemble.seed
    assert other.model_a.init_seed != run.model_a.init_seed


def test_run_config_explicit_seed(defaults):
    defaults["ensemble"]["seed"] = 1234

    run = RunConfig.from_config(defaults)
    assert run.ensemble.seed == 1234


def test_run_config_overrides(defaults):
    run = RunConfig.from_config(defaults, output_dir="somewhere", threads=4)

    assert run.output_dir == "somewhere"
    assert run.threads == 4


def test_run_config_output_envvar(monkeypatch):
    monkeypatch.setenv("EBDISTILL_OUTPUT", "/tmp/ebdistill-test")

    run = RunConfig.from_config(get_config("ebdistill", allow_user=False))
    assert run.output_dir == "/tmp/ebdistill-test"


def test_run_config_user_file(config_path):
    run = RunConfig.from_config(get_config("ebdistill", user_path=config_path))

    assert run.seed == 7
    assert run.synthetic.n_samples == 40
    assert run.model_a.hidden_widths == (4,)
    assert run.model_a.learning_rate == 0.001
    assert run.augmentation.sizes == (60, 80)


def test_run_config_unknown_key(defaults):
    defaults["ensemble"]["members"] = 3

    with pytest.raises(ValidationError, match="section 'ensemble'"):
        RunConfig.from_config(defaults)


def test_run_config_unknown_section(defaults):
    defaults["ensembles"] = {"n_members": 3}

    with pytest.raises(ValidationError, match="ensembles"):
        RunConfig.from_config(defaults)


@pytest.mark.parametrize(
    "section,key,value",
    [
        ("augmentation", "scale_factors", [0.01, 0.6]),
        ("augmentation", "scale_factors", [0.0001]),
        ("model_b", "scale_factor", 0.7),
    ],
)
def test_run_config_scale_factor_range(defaults, section, key, value):
    defaults[section][key] = value

    with pytest.raises(ValidationError, match="0.001 to 0.5"):
        RunConfig.from_config(defaults)


@pytest.mark.parametrize(
    "section,key,value",
    [
        ("ensemble", "n_members", 1),
        ("calibration", "n_bins", 1),
        ("evaluation", "n_folds", 1),
        ("model_a", "epochs", 0),
        ("model_b", "hidden_widths", [0]),
        ("benchmark", "repeats", 2),
        ("synthetic", "function", "cubic"),
    ],
)
def test_run_config_invalid_values(defaults, section, key, value):
    defaults[section][key] = value

    with pytest.raises(ValidationError, match=f"section '{section}'"):
        RunConfig.from_config(defaults)


def test_run_config_n_max_report(defaults):
    defaults["evaluation"]["n_max_report"] = 5000
    assert RunConfig.from_config(defaults).evaluation.n_max_report == 5000

    defaults["evaluation"]["n_max_report"] = 7000
    with pytest.raises(ValidationError, match="n_max_report"):
        RunConfig.from_config(defaults)


def test_run_config_report_size(defaults):
    run = RunConfig.from_config(defaults)
    assert run.report_size(200) == 20000

    defaults["evaluation"]["n_max_report"] = 5000
    run = RunConfig.from_config(defaults)

    assert run.report_size(200) == 5000
    assert run.report_size(5000) == 5000

    with pytest.raises(ValidationError, match="n_max_report=5000"):
        run.report_size(6000)


def test_run_config_negative_seed(defaults):
    with pytest.raises(ValidationError):
        RunConfig.from_config(defaults, seed=-1)


def test_run_config_snapshot(defaults):
    snapshot = RunConfig.from_config(defaults, output_dir="anywhere").snapshot()

    assert "output_dir" not in snapshot
    assert "threads" not in snapshot
    assert snapshot["model_a"]["hidden_widths"] == [64, 64]
    assert json.loads(json.dumps(snapshot)) == snapshot


def test_data_config(tmp_path):
    with pytest.raises(ValidationError, match="does not exist"):
        DataConfig(path=str(tmp_path / "missing.csv"), target_column="y")

    path = tmp_path / "diffusion.csv"
    path.write_text("a,y\n1,2\n")

    with pytest.raises(ValidationError, match="target_column"):
        DataConfig(path=str(path))

    config = DataConfig(path=str(path), target_column="y", feature_columns=["a"])
    assert config.name == "diffusion"
    assert config.feature_columns == ("a",)


def test_augmentation_sizes_sorted():
    settings = AugmentationSettings(sizes=(500, 100, 500))

    assert settings.sizes == (100, 500)


def test_resolve_sizes():
    settings = AugmentationSettings(sizes=(100, 500, 1000))

    assert settings.resolve_sizes(100) == [100, 500, 1000]
    assert settings.resolve_sizes(50) == [50, 100, 500, 1000]

    with pytest.warns(UserWarning, match=r"\[100\]"):
        assert settings.resolve_sizes(200) == [200, 500, 1000]
