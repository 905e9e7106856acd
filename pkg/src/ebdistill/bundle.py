#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: bundle.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""Versioned, checksummed persistence of the trained models.

A bundle is a zip archive with a ``manifest.json`` and one ``.npy`` member per
parameter array. Archive members carry a fixed timestamp and are written in a
fixed order, so saving the same models twice produces identical bytes. The
manifest checksum covers every other manifest field and every array member.

"""

from __future__ import annotations

import hashlib
import io
import json
import os
import pathlib
import zipfile
from dataclasses import dataclass, field

from typing import Any, Dict, Optional, Tuple, Union

import numpy

from . import __version__, log
from .data import MinMaxScaler
from .distill import DistilledModel
from .ensemble import CalibrationParams, EnsembleModel
from .exceptions import BundleError
from .nn import MLPConfig, MLPModel


__all__ = ["FORMAT_VERSION", "ModelBundle", "save_bundle", "load_bundle"]


AnyPath = Union[str, os.PathLike]

#: The bundle format written by this version of the package.
FORMAT_VERSION = 1

MANIFEST = "manifest.json"
ZIP_DATE = (1980, 1, 1, 0, 0, 0)


@dataclass(frozen=True)
class ModelBundle:
    """The deployable models and their provenance.

    Parameters
    ----------
    alpha_scaler
        The scaler fitted on the original features.
    model_a
        The predictive network.
    feature_names
        The raw feature columns expected at prediction time.
    target_name
        The name of the predicted quantity.
    ensemble
        The calibrated ensemble, if kept.
    model_b
        The distilled error-bar network. A bundle without it is not distilled.
    provenance
        The run configuration snapshot and the hash of the training data.

    """

    alpha_scaler: MinMaxScaler
    model_a: MLPModel
    feature_names: Tuple[str, ...]
    target_name: str
    ensemble: Optional[EnsembleModel] = None
    model_b: Optional[DistilledModel] = None
    provenance: Dict[str, Any] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

        n_features = len(self.feature_names)
        dims = {
            "alpha_scaler": self.alpha_scaler.n_features,
            "model_a": self.model_a.input_dim,
        }
        if self.ensemble is not None:
            dims["ensemble"] = self.ensemble.input_dim
        if self.model_b is not None:
            dims["model_b"] = self.model_b.input_dim

        bad = {name: dim for name, dim in dims.items() if dim != n_features}
        if bad:
            raise BundleError(
                f"bundle components disagree with the {n_features} features: {bad}."
            )

    @property
    def distilled(self) -> bool:
        return self.model_b is not None


def _mlp_manifest(model: MLPModel) -> Dict[str, Any]:
    return {
        "config": model.config.to_dict(),
        "input_dim": model.input_dim,
        "trained": model.trained,
    }


def _collect_arrays(
    bundle: ModelBundle,
) -> Tuple[Dict[str, Any], Dict[str, numpy.ndarray]]:
    arrays: Dict[str, numpy.ndarray] = {}

    def add_mlp(prefix: str, model: MLPModel):
        for layer, (ww, bb) in enumerate(zip(model.weights, model.biases)):
            arrays[f"{prefix}.W{layer}"] = ww
            arrays[f"{prefix}.b{layer}"] = bb

    def add_scaler(prefix: str, scaler: MinMaxScaler):
        arrays[f"{prefix}.mins"] = scaler.mins
        arrays[f"{prefix}.maxs"] = scaler.maxs

    manifest: Dict[str, Any] = {
        "format_version": bundle.format_version,
        "created_by": f"ebdistill {__version__}",
        "feature_names": list(bundle.feature_names),
        "target_name": bundle.target_name,
        "model_a": _mlp_manifest(bundle.model_a),
        "ensemble": None,
        "model_b": None,
        "provenance": bundle.provenance,
    }

    add_scaler("alpha_scaler", bundle.alpha_scaler)
    add_mlp("model_a", bundle.model_a)

    if bundle.ensemble is not None:
        manifest["ensemble"] = {
            "calibration": bundle.ensemble.calibration.to_dict(),
            "member_seeds": list(bundle.ensemble.member_seeds),
            "members": [_mlp_manifest(mm) for mm in bundle.ensemble.members],
        }
        for index, member in enumerate(bundle.ensemble.members):
            add_mlp(f"ensemble.{index}", member)

    if bundle.model_b is not None:
        manifest["model_b"] = {
            **_mlp_manifest(bundle.model_b.net),
            "sigma_floor": bundle.model_b.sigma_floor,
        }
        add_mlp("model_b", bundle.model_b.net)
        add_scaler("model_b.scaler", bundle.model_b.input_scaler)

    return manifest, arrays


def _serialise_array(array: numpy.ndarray) -> bytes:
    buffer = io.BytesIO()
    numpy.lib.format.write_array(
        buffer,
        numpy.ascontiguousarray(array, dtype=numpy.float64),
        allow_pickle=False,
    )
    return buffer.getvalue()


def _checksum(manifest: Dict[str, Any], blobs: Dict[str, bytes]) -> str:
    digest = hashlib.sha256()

    body = {key: value for key, value in manifest.items() if key != "checksum"}
    digest.update(json.dumps(body, sort_keys=True, separators=(",", ":")).encode())

    for name in sorted(blobs):
        digest.update(name.encode())
        digest.update(blobs[name])
    return digest.hexdigest()


def _zip_info(name: str) -> zipfile.ZipInfo:
    info = zipfile.ZipInfo(name, date_time=ZIP_DATE)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    return info


def save_bundle(bundle: ModelBundle, path: AnyPath) -> pathlib.Path:
    """Writes a bundle to ``path`` atomically and returns the path."""

    path = pathlib.Path(path)
    manifest, arrays = _collect_arrays(bundle)

    blobs = {
        f"arrays/{name}.npy": _serialise_array(arr) for name, arr in arrays.items()
    }
    manifest["checksum"] = _checksum(manifest, blobs)

    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + ".tmp")

    try:
        with zipfile.ZipFile(tmp_path, "w") as archive:
            archive.writestr(
                _zip_info(MANIFEST),
                json.dumps(manifest, indent=2, sort_keys=True),
            )
            for name in sorted(blobs):
                archive.writestr(_zip_info(name), blobs[name])
        os.replace(tmp_path, path)
    except OSError as err:
        raise BundleError(f"cannot write bundle {str(path)!r}: {err}") from err
    finally:
        if tmp_path.exists():
            tmp_path.unlink()

    return path


def _load_array(blobs: Dict[str, bytes], name: str) -> numpy.ndarray:
    key = f"arrays/{name}.npy"
    if key not in blobs:
        raise BundleError(f"bundle is missing array {name!r}.")
    return numpy.lib.format.read_array(io.BytesIO(blobs[key]), allow_pickle=False)


def _load_mlp(
    section: Dict[str, Any],
    prefix: str,
    blobs: Dict[str, bytes],
) -> MLPModel:
    config = MLPConfig.from_dict(section["config"])
    n_layers = len(config.hidden_widths) + 1

    return MLPModel(
        weights=tuple(_load_array(blobs, f"{prefix}.W{ll}") for ll in range(n_layers)),
        biases=tuple(_load_array(blobs, f"{prefix}.b{ll}") for ll in range(n_layers)),
        config=config,
        input_dim=int(section["input_dim"]),
        trained=bool(section["trained"]),
    )


def _load_scaler(prefix: str, blobs: Dict[str, bytes]) -> MinMaxScaler:
    return MinMaxScaler(
        mins=_load_array(blobs, f"{prefix}.mins"),
        maxs=_load_array(blobs, f"{prefix}.maxs"),
    )


def load_bundle(path: AnyPath) -> ModelBundle:
    """Reads a bundle, checking its format version, checksum, and dimensions.

    Raises
    ------
    BundleError
        If the file cannot be read, was written by a newer format, or fails
        the integrity check.

    """

    path = pathlib.Path(path)
    if not path.exists():
        raise BundleError(f"bundle {str(path)!r} does not exist.")

    try:
        with zipfile.ZipFile(path, "r") as archive:
            manifest = json.loads(archive.read(MANIFEST))
            blobs = {
                name: archive.read(name)
                for name in archive.namelist()
                if name.startswith("arrays/")
            }
    except (zipfile.BadZipFile, KeyError, json.JSONDecodeError) as err:
        raise BundleError(f"bundle {str(path)!r} is corrupted: {err}") from err

    version = manifest.get("format_version")
    if not isinstance(version, int):
        raise BundleError("bundle has no format_version.")
    if version > FORMAT_VERSION:
        raise BundleError(
            f"bundle format {version} is newer than the supported {FORMAT_VERSION}."
        )
    if version < 1:
        raise BundleError(f"unsupported bundle format {version}.")

    if manifest.get("checksum") != _checksum(manifest, blobs):
        raise BundleError(f"bundle {str(path)!r} failed the checksum verification.")

    try:
        model_a = _load_mlp(manifest["model_a"], "model_a", blobs)
        alpha_scaler = _load_scaler("alpha_scaler", blobs)

        ensemble = None
        if manifest.get("ensemble") is not None:
            section = manifest["ensemble"]
            ensemble = EnsembleModel(
                members=tuple(
                    _load_mlp(member, f"ensemble.{index}", blobs)
                    for index, member in enumerate(section["members"])
                ),
                calibration=CalibrationParams.from_dict(section["calibration"]),
                member_seeds=tuple(section["member_seeds"]),
            )

        model_b = None
        if manifest.get("model_b") is not None:
            section = manifest["model_b"]
            model_b = DistilledModel(
                net=_load_mlp(section, "model_b", blobs),
                input_scaler=_load_scaler("model_b.scaler", blobs),
                sigma_floor=float(section["sigma_floor"]),
            )

        bundle = ModelBundle(
            alpha_scaler=alpha_scaler,
            model_a=model_a,
            feature_names=tuple(manifest["feature_names"]),
            target_name=manifest["target_name"],
            ensemble=ensemble,
            model_b=model_b,
            provenance=manifest.get("provenance", {}),
            format_version=version,
        )
    except BundleError:
        raise
    except (KeyError, TypeError, ValueError) as err:
        raise BundleError(f"bundle {str(path)!r} is inconsistent: {err}") from err

    if not bundle.distilled:
        log.warning(f"bundle {str(path)!r} is not distilled (no Model B).")

    return bundle
