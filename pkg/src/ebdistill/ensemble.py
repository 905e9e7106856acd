#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: ensemble.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

from typing import Any, Dict, List, Optional, Tuple

import numpy

from . import log
from .data import Dataset, kfold_split
from .exceptions import TrainingError, ValidationError
from .nn import MLPConfig, MLPModel, train_mlp
from .streams import StreamKey, derive_seed, make_rng
from .utils import parallel_map


__all__ = [
    "CalibrationParams",
    "EnsembleModel",
    "UncertainPrediction",
    "EnsembleOutput",
    "bootstrap_indices",
    "train_ensemble",
    "ensemble_predict",
    "fit_calibration",
    "fit_calibration_from_residuals",
    "collect_cv_residuals",
    "calibrate_ensemble_cv",
    "label_error_bars",
]


#: Default floor applied to every error bar.
SIGMA_FLOOR = 1e-8


@dataclass(frozen=True)
class CalibrationParams:
    """Affine map from raw ensemble spread to calibrated error bar.

    ``sigma_cal = max(sigma_floor, a * sigma_raw + b)``. ``method_tag`` records how
    the parameters were obtained: ``identity`` (uncalibrated), ``binned-linear``,
    or one of the fallbacks ``ratio`` and ``constant``.

    """

    a: float = 1.0
    b: float = 0.0
    sigma_floor: float = SIGMA_FLOOR
    method_tag: str = "identity"
    n_bins: int = 0

    def __post_init__(self):
        if not numpy.isfinite(self.a) or not numpy.isfinite(self.b):
            raise ValidationError("calibration parameters must be finite.")
        if not self.sigma_floor > 0:
            raise ValidationError("sigma_floor must be positive.")

    def apply(self, sigma_raw: numpy.ndarray) -> numpy.ndarray:
        """Maps raw spreads to calibrated error bars."""

        return numpy.maximum(self.sigma_floor, self.a * sigma_raw + self.b)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> CalibrationParams:
        return cls(**data)


@dataclass(frozen=True)
class UncertainPrediction:
    """Ensemble prediction for one row."""

    mean: float
    sigma_raw: float
    sigma_cal: float


@dataclass(frozen=True)
class EnsembleOutput:
    """Column-wise ensemble prediction for a batch of rows."""

    mean: numpy.ndarray
    sigma_raw: numpy.ndarray
    sigma_cal: numpy.ndarray

    def __len__(self) -> int:
        return len(self.mean)

    def rows(self) -> List[UncertainPrediction]:
        return [
            UncertainPrediction(float(mm), float(ss), float(cc))
            for mm, ss, cc in zip(self.mean, self.sigma_raw, self.sigma_cal)
        ]


@dataclass(frozen=True)
class EnsembleModel:
    """A bootstrap ensemble of networks with a calibration map."""

    members: Tuple[MLPModel, ...]
    calibration: CalibrationParams
    member_seeds: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "member_seeds", tuple(self.member_seeds))

        if len(self.members) < 2:
            raise ValidationError("an ensemble needs at least two members.")
        if len({member.input_dim for member in self.members}) != 1:
            raise ValidationError("all ensemble members must share input_dim.")
        if len(self.member_seeds) != len(self.members):
            raise ValidationError("one seed is needed per ensemble member.")

    @property
    def n_members(self) -> int:
        return len(self.members)

    @property
    def input_dim(self) -> int:
        return self.members[0].input_dim

    @property
    def calibrated(self) -> bool:
        return self.calibration.method_tag != "identity"

    @property
    def parameter_count(self) -> int:
        return sum(member.parameter_count for member in self.members)

    @property
    def macs_per_row(self) -> int:
        return sum(member.macs_per_row for member in self.members)

    def with_calibration(self, calibration: CalibrationParams) -> EnsembleModel:
        return replace(self, calibration=calibration)

    def predict(self, X: numpy.ndarray) -> EnsembleOutput:
        return _predict(self, X)


def bootstrap_indices(n: int, seed: int, size: Optional[int] = None) -> numpy.ndarray:
    """Draws ``size`` (default ``n``) indices with replacement from ``[0, n)``."""

    if n < 1:
        raise ValidationError(f"cannot bootstrap {n} rows.")

    size = n if size is None else size
    if size < 1:
        raise ValidationError(f"bootstrap size must be >= 1, got {size}.")

    return make_rng(seed, StreamKey.BOOTSTRAP).integers(0, n, size=size)


def _member_config(config: MLPConfig, seed: int, member: int) -> MLPConfig:
    return replace(
        config,
        init_seed=derive_seed(seed, member, StreamKey.INIT),
        shuffle_seed=derive_seed(seed, member, StreamKey.SHUFFLE),
    )


def train_ensemble(
    d: Dataset,
    M: int,
    config: MLPConfig,
    seed: int,
    bootstrap_fraction: float = 1.0,
    threads: int = 1,
) -> EnsembleModel:
    """Trains ``M`` networks, each on its own bootstrap resample of ``d``.

    Member ``m`` draws its resample from the substream ``(seed, m)`` and its
    initialisation and shuffling from two further substreams, so the ensemble is
    the same for any value of ``threads``. The returned ensemble is uncalibrated.

    Parameters
    ----------
    d
        The training data, with scaled features.
    M
        The number of members.
    config
        The member architecture and optimiser settings. Its seeds are replaced
        by per-member seeds.
    seed
        The ensemble seed.
    bootstrap_fraction
        Size of each resample relative to the number of rows.
    threads
        Number of members trained concurrently.

    """

    if M < 2:
        raise ValidationError(f"an ensemble needs M >= 2, got {M}.")
    if d.n_rows < 1:
        raise ValidationError("cannot train an ensemble on an empty dataset.")
    if not bootstrap_fraction > 0:
        raise ValidationError("bootstrap_fraction must be positive.")

    size = max(1, int(round(bootstrap_fraction * d.n_rows)))
    member_seeds = [derive_seed(seed, member) for member in range(M)]

    def train_member(member: int) -> MLPModel:
        indices = bootstrap_indices(d.n_rows, member_seeds[member], size=size)
        member_config = _member_config(config, seed, member)
        try:
            model, report = train_mlp(
                d.features[indices],
                d.targets[indices],
                member_config,
            )
        except Exception as err:
            raise TrainingError(f"ensemble member {member} failed: {err}") from err

        log.debug(f"ensemble member {member}: final mse={report.final_loss:.6g}")
        return model

    members = parallel_map(train_member, range(M), threads=threads)

    return EnsembleModel(
        members=tuple(members),
        calibration=CalibrationParams(),
        member_seeds=tuple(member_seeds),
    )


def _predict(e: EnsembleModel, X: numpy.ndarray) -> EnsembleOutput:
    X = numpy.asarray(X, dtype=numpy.float64)
    if X.ndim != 2 or X.shape[1] != e.input_dim:
        raise ValidationError(
            f"ensemble expects {e.input_dim} input columns, got shape {X.shape}."
        )

    # Sorted per row so that member order cannot change the result. Deviations
    # from the smallest output are exactly zero when every member agrees.
    outputs = numpy.sort(
        numpy.stack([member.predict(X) for member in e.members]),
        axis=0,
    )
    deviations = outputs - outputs[0]

    mean = outputs[0] + deviations.mean(axis=0)
    sigma_raw = deviations.std(axis=0, ddof=1)
    sigma_cal = e.calibration.apply(sigma_raw)

    return EnsembleOutput(mean=mean, sigma_raw=sigma_raw, sigma_cal=sigma_cal)


def ensemble_predict(e: EnsembleModel, X: numpy.ndarray) -> List[UncertainPrediction]:
    """Mean, sample standard deviation, and calibrated error bar for each row."""

    return _predict(e, X).rows()


def fit_calibration_from_residuals(
    residuals: numpy.ndarray,
    spreads: numpy.ndarray,
    n_bins: int = 10,
    sigma_floor: float = SIGMA_FLOOR,
) -> CalibrationParams:
    """Fits the binned linear recalibration on held-out residuals and spreads.

    Rows are sorted by spread and dealt into ``n_bins`` equal-count bins. Each bin
    gives the point (mean spread, RMS residual) and a straight line is fitted
    through the bin points by ordinary least squares.

    When the bin spreads have no variance the line is undefined; the slope then
    falls back to ``RMS(r) / mean(s)`` (``method_tag="ratio"``) or, when every
    spread is zero, to ``a=1, b=RMS(r)`` (``method_tag="constant"``).

    """

    residuals = numpy.asarray(residuals, dtype=numpy.float64)
    spreads = numpy.asarray(spreads, dtype=numpy.float64)

    if residuals.shape != spreads.shape or residuals.ndim != 1:
        raise ValidationError(
            "residuals and spreads must be 1D arrays of equal length."
        )
    if n_bins < 1:
        raise ValidationError(f"n_bins must be >= 1, got {n_bins}.")
    if len(residuals) < 2 * n_bins:
        raise ValidationError(
            f"calibration needs at least {2 * n_bins} rows, got {len(residuals)}."
        )

    order = numpy.argsort(spreads, kind="stable")
    bins = numpy.array_split(order, n_bins)

    bin_spread = numpy.array([spreads[idx].mean() for idx in bins])
    bin_rms = numpy.array([numpy.sqrt(numpy.mean(residuals[idx] ** 2)) for idx in bins])

    rms_all = float(numpy.sqrt(numpy.mean(residuals**2)))
    mean_spread = float(spreads.mean())

    if n_bins >= 2 and numpy.var(bin_spread) > 0:
        a, b = numpy.polyfit(bin_spread, bin_rms, deg=1)
        method_tag = "binned-linear"
    elif mean_spread > 0:
        a, b = rms_all / mean_spread, 0.0
        method_tag = "ratio"
    else:
        a, b = 1.0, rms_all
        method_tag = "constant"

    log.debug(f"calibration ({method_tag}): a={a:.6g}, b={b:.6g}")

    return CalibrationParams(
        a=float(a),
        b=float(b),
        sigma_floor=sigma_floor,
        method_tag=method_tag,
        n_bins=n_bins,
    )


def fit_calibration(
    e: EnsembleModel,
    X_cal: numpy.ndarray,
    y_cal: numpy.ndarray,
    n_bins: int = 10,
) -> CalibrationParams:
    """Fits the calibration of ``e`` on held-out rows ``(X_cal, y_cal)``."""

    y_cal = numpy.asarray(y_cal, dtype=numpy.float64)
    output = _predict(e, X_cal)

    if y_cal.shape != output.mean.shape:
        raise ValidationError(
            f"y_cal has shape {y_cal.shape} for {len(output)} calibration rows."
        )

    return fit_calibration_from_residuals(
        output.mean - y_cal,
        output.sigma_raw,
        n_bins=n_bins,
        sigma_floor=e.calibration.sigma_floor,
    )


def collect_cv_residuals(
    d: Dataset,
    M: int,
    config: MLPConfig,
    seed: int,
    k: int = 5,
    bootstrap_fraction: float = 1.0,
    threads: int = 1,
) -> Tuple[numpy.ndarray, numpy.ndarray]:
    """Out-of-fold residuals and raw spreads of ``M``-member ensembles.

    For each of ``k`` folds an ensemble is trained on the remaining folds and
    evaluated on the held-out one. Returns ``(residuals, spreads)`` in row order.

    """

    folds = kfold_split(d.n_rows, k, seed)
    residuals = numpy.zeros(d.n_rows)
    spreads = numpy.zeros(d.n_rows)

    def run_fold(fold: int):
        train, test = folds.split(fold)
        try:
            ensemble = train_ensemble(
                d.select_rows(train),
                M,
                config,
                derive_seed(seed, StreamKey.CALIBRATION, fold),
                bootstrap_fraction=bootstrap_fraction,
            )
        except TrainingError as err:
            raise TrainingError(f"calibration fold {fold}: {err}") from err

        output = ensemble.predict(d.features[test])
        return test, output.mean - d.targets[test], output.sigma_raw

    for test, fold_residuals, fold_spreads in parallel_map(
        run_fold,
        range(k),
        threads=threads,
    ):
        residuals[test] = fold_residuals
        spreads[test] = fold_spreads

    return residuals, spreads


def calibrate_ensemble_cv(
    e: EnsembleModel,
    d: Dataset,
    config: MLPConfig,
    seed: int,
    k: int = 5,
    n_bins: int = 10,
    bootstrap_fraction: float = 1.0,
    threads: int = 1,
) -> EnsembleModel:
    """Calibrates ``e`` on out-of-fold residuals of ensembles of the same size.

    The returned ensemble has the members of ``e`` and the fitted calibration.

    """

    residuals, spreads = collect_cv_residuals(
        d,
        e.n_members,
        config,
        seed,
        k=k,
        bootstrap_fraction=bootstrap_fraction,
        threads=threads,
    )

    calibration = fit_calibration_from_residuals(
        residuals,
        spreads,
        n_bins=n_bins,
        sigma_floor=e.calibration.sigma_floor,
    )

    return e.with_calibration(calibration)


def label_error_bars(e: EnsembleModel, X: numpy.ndarray) -> numpy.ndarray:
    """Calibrated error bars of the ensemble for each row of ``X``."""

    if not e.calibrated:
        log.warning("labelling error bars with an uncalibrated ensemble.")

    return _predict(e, X).sigma_cal
