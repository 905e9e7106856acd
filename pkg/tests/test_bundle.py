#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: test_bundle.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

import io
import json
import logging
import zipfile
from dataclasses import replace

import numpy
import pytest

from ebdistill import (
    FORMAT_VERSION,
    AugmentationConfig,
    BundleError,
    ModelBundle,
    build_beta_dataset,
    fit_scaler,
    generate_augmented_features,
    load_bundle,
    save_bundle,
    train_mlp,
    train_model_b,
)


@pytest.fixture(scope="module")
def bundle(synthetic_data, scaled_data, calibrated_ensemble, tiny_mlp):
    model_a, _ = train_mlp(scaled_data.features, scaled_data.targets, tiny_mlp)

    aug = generate_augmented_features(
        scaled_data.features,
        AugmentationConfig(0.05, 2 * scaled_data.n_rows, seed=1),
    )
    beta = build_beta_dataset(aug, calibrated_ensemble, scaled_data.feature_names)

    return ModelBundle(
        alpha_scaler=fit_scaler(synthetic_data),
        model_a=model_a,
        feature_names=synthetic_data.feature_names,
        target_name=synthetic_data.target_name,
        ensemble=calibrated_ensemble,
        model_b=train_model_b(beta, tiny_mlp),
        provenance={
            "data_hash": synthetic_data.content_hash(),
            "run_config": {"seed": 1},
        },
    )


def _rewrite(path, transform):
    """Rewrites the archive at ``path``, passing each member through ``transform``."""

    with zipfile.ZipFile(path) as archive:
        members = {name: archive.read(name) for name in archive.namelist()}

    with zipfile.ZipFile(path, "w") as archive:
        for name, data in members.items():
            archive.writestr(name, transform(name, data))


def _assert_same_mlp(m1, m2):
    assert m1.config == m2.config
    assert m1.input_dim == m2.input_dim
    for w1, w2 in zip(m1.weights, m2.weights):
        numpy.testing.assert_array_equal(w1, w2)
    for b1, b2 in zip(m1.biases, m2.biases):
        numpy.testing.assert_array_equal(b1, b2)


def test_save_and_load(tmp_path, bundle):
    path = save_bundle(bundle, tmp_path / "out" / "bundle.zip")

    assert path.exists()
    assert not (tmp_path / "out" / "bundle.zip.tmp").exists()

    loaded = load_bundle(path)

    assert loaded.distilled is True
    assert loaded.format_version == FORMAT_VERSION
    assert loaded.feature_names == bundle.feature_names
    assert loaded.target_name == bundle.target_name
    assert loaded.provenance == bundle.provenance

    _assert_same_mlp(loaded.model_a, bundle.model_a)
    _assert_same_mlp(loaded.model_b.net, bundle.model_b.net)
    for m1, m2 in zip(loaded.ensemble.members, bundle.ensemble.members):
        _assert_same_mlp(m1, m2)

    assert loaded.ensemble.calibration == bundle.ensemble.calibration
    assert loaded.ensemble.member_seeds == bundle.ensemble.member_seeds
    assert loaded.model_b.sigma_floor == bundle.model_b.sigma_floor
    numpy.testing.assert_array_equal(loaded.alpha_scaler.mins, bundle.alpha_scaler.mins)
    numpy.testing.assert_array_equal(
        loaded.model_b.input_scaler.maxs,
        bundle.model_b.input_scaler.maxs,
    )


def test_save_is_deterministic(tmp_path, bundle):
    first = save_bundle(bundle, tmp_path / "first.zip").read_bytes()
    second = save_bundle(bundle, tmp_path / "second.zip").read_bytes()

    assert first == second


def test_manifest_contents(tmp_path, bundle):
    path = save_bundle(bundle, tmp_path / "bundle.zip")

    with zipfile.ZipFile(path) as archive:
        names = archive.namelist()
        manifest = json.loads(archive.read("manifest.json"))

    assert names[0] == "manifest.json"
    assert names[1:] == sorted(names[1:])
    assert "arrays/model_a.W0.npy" in names
    assert "arrays/ensemble.2.b1.npy" in names
    assert "arrays/model_b.scaler.mins.npy" in names

    assert manifest["format_version"] == FORMAT_VERSION
    assert manifest["created_by"].startswith("ebdistill ")
    assert manifest["feature_names"] == list(bundle.feature_names)
    assert manifest["ensemble"]["calibration"]["method_tag"] != "identity"
    assert len(manifest["ensemble"]["members"]) == 3
    assert len(manifest["checksum"]) == 64


def test_tampered_array(tmp_path, bundle):
    path = save_bundle(bundle, tmp_path / "bundle.zip")

    def tamper(name, data):
        if name != "arrays/model_a.b0.npy":
            return data
        buffer = io.BytesIO()
        array = numpy.load(io.BytesIO(data))
        numpy.save(buffer, array + 1.0)
        return buffer.getvalue()

    _rewrite(path, tamper)

    with pytest.raises(BundleError, match="checksum"):
        load_bundle(path)


@pytest.mark.parametrize(
    "section,key,value",
    [
        ("ensemble.calibration", "a", 1000.0),
        ("model_b", "sigma_floor", 5.0),
        ("", "target_name", "other"),
    ],
)
def test_tampered_manifest(tmp_path, bundle, section, key, value):
    path = save_bundle(bundle, tmp_path / "bundle.zip")

    def tamper(name, data):
        if name != "manifest.json":
            return data
        manifest = json.loads(data)
        target = manifest
        for part in filter(None, section.split(".")):
            target = target[part]
        target[key] = value
        return json.dumps(manifest, indent=2, sort_keys=True)

    _rewrite(path, tamper)

    with pytest.raises(BundleError, match="checksum"):
        load_bundle(path)


def test_reformatted_manifest_loads(tmp_path, bundle):
    path = save_bundle(bundle, tmp_path / "bundle.zip")

    def reformat(name, data):
        if name != "manifest.json":
            return data
        return json.dumps(json.loads(data))

    _rewrite(path, reformat)

    loaded = load_bundle(path)
    assert loaded.model_b.sigma_floor == bundle.model_b.sigma_floor


def test_newer_format(tmp_path, bundle):
    path = save_bundle(bundle, tmp_path / "bundle.zip")

    def bump(name, data):
        if name != "manifest.json":
            return data
        manifest = json.loads(data)
        manifest["format_version"] = FORMAT_VERSION + 1
        return json.dumps(manifest)

    _rewrite(path, bump)

    with pytest.raises(BundleError, match="newer than the supported"):
        load_bundle(path)


def test_missing_array(tmp_path, bundle):
    path = save_bundle(bundle, tmp_path / "bundle.zip")

    with zipfile.ZipFile(path) as archive:
        members = {name: archive.read(name) for name in archive.namelist()}

    with zipfile.ZipFile(path, "w") as archive:
        for name, data in members.items():
            if name != "arrays/model_b.W1.npy":
                archive.writestr(name, data)

    with pytest.raises(BundleError):
        load_bundle(path)


def test_not_distilled_warns(tmp_path, bundle, caplog):
    path = save_bundle(replace(bundle, model_b=None), tmp_path / "bundle.zip")

    with caplog.at_level(logging.WARNING):
        loaded = load_bundle(path)

    assert loaded.distilled is False
    assert loaded.model_b is None
    assert any("not distilled" in message for message in caplog.messages)


def test_without_ensemble(tmp_path, bundle):
    path = save_bundle(replace(bundle, ensemble=None), tmp_path / "b.zip")
    loaded = load_bundle(path)

    assert loaded.ensemble is None
    assert loaded.distilled is True


def test_missing_and_corrupted_files(tmp_path):
    with pytest.raises(BundleError, match="does not exist"):
        load_bundle(tmp_path / "missing.zip")

    path = tmp_path / "garbage.zip"
    path.write_bytes(b"not a zip file")

    with pytest.raises(BundleError, match="corrupted"):
        load_bundle(path)


def test_inconsistent_dimensions(bundle):
    with pytest.raises(BundleError, match="disagree"):
        replace(bundle, feature_names=bundle.feature_names[:-1])
