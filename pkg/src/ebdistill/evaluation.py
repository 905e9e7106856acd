#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: evaluation.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""Metrics, cross-validation, learning curves, and the inference benchmark."""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, replace

from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy
import pandas
from threadpoolctl import threadpool_limits

from . import log
from .augment import AugmentationConfig, build_beta_dataset, generate_augmented_features
from .data import Dataset, Space, fit_scaler, kfold_split
from .distill import DistilledModel, predict_error_bar, train_model_b
from .ensemble import EnsembleModel
from .exceptions import TrainingError, ValidationError
from .nn import MLPConfig, train_mlp
from .streams import StreamKey, derive_seed, quantize_scale
from .utils import Timer, parallel_map


__all__ = [
    "Metrics",
    "CrossValidationResult",
    "LearningCurvePoint",
    "StatsRow",
    "BenchmarkResult",
    "compute_metrics",
    "cross_validate",
    "cross_validate_model_a",
    "cross_validate_model_b",
    "run_learning_curve",
    "stats_table",
    "benchmark_inference",
    "write_learning_curve_csv",
    "write_stats_table_csv",
    "write_benchmark_csv",
    "write_cross_validation_csv",
    "read_learning_curve_csv",
]


AnyPath = Union[str, os.PathLike]

#: The statistics reported for each fit, in table order.
STATISTICS = ("sigma", "mae", "r2", "nrmse", "rmse")


@dataclass(frozen=True)
class Metrics:
    """Regression statistics of a set of predictions.

    ``sigma`` is the population standard deviation of the true values and
    ``nrmse = rmse / sigma``. When ``sigma`` is zero, ``nrmse`` is ``inf`` and
    ``r2`` is undefined (``nan``).

    """

    sigma: float
    mae: float
    r2: float
    rmse: float
    nrmse: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class CrossValidationResult:
    """Pooled and per-fold out-of-fold statistics."""

    metrics: Metrics
    per_fold: Tuple[Metrics, ...]
    predictions: numpy.ndarray = field(repr=False)
    targets: numpy.ndarray = field(repr=False)


@dataclass(frozen=True)
class LearningCurvePoint:
    """Cross-validated Model B statistics at one (scale factor, size) cell."""

    scale_factor: float
    n_points: int
    metrics: Metrics
    per_fold: Tuple[Metrics, ...]
    predictions: Optional[numpy.ndarray] = field(default=None, repr=False)
    targets: Optional[numpy.ndarray] = field(default=None, repr=False)


@dataclass(frozen=True)
class StatsRow:
    """The original, max-size, and best fits of one scale factor."""

    scale_factor: float
    original: Metrics
    maximum: Metrics
    best: Metrics
    n_original: int
    n_max: int
    n_best: int

    @property
    def flagged(self) -> bool:
        """`True` if the max-size fit is not the best fit."""

        return self.n_best != self.n_max


@dataclass(frozen=True)
class BenchmarkResult:
    """Error-bar inference timing of the ensemble against the distilled model."""

    ensemble_ns_per_row: float
    distilled_ns_per_row: float
    speedup: float
    ensemble_param_count: int
    distilled_param_count: int
    batch_size: int
    repeats: int
    n_members: int

    @property
    def param_ratio(self) -> float:
        return self.ensemble_param_count / self.distilled_param_count

    def to_dict(self) -> Dict[str, Any]:
        return {**asdict(self), "param_ratio": self.param_ratio}


def compute_metrics(y_true: numpy.ndarray, y_pred: numpy.ndarray) -> Metrics:
    """Computes sigma, MAE, R², RMSE and normalised RMSE."""

    y_true = numpy.asarray(y_true, dtype=numpy.float64)
    y_pred = numpy.asarray(y_pred, dtype=numpy.float64)

    if y_true.ndim != 1 or y_true.shape != y_pred.shape:
        raise ValidationError(
            f"y_true and y_pred must be 1D of equal length, "
            f"got {y_true.shape} and {y_pred.shape}."
        )
    if len(y_true) == 0:
        raise ValidationError("cannot compute metrics on empty arrays.")
    if not (numpy.isfinite(y_true).all() and numpy.isfinite(y_pred).all()):
        raise ValidationError("cannot compute metrics on non-finite values.")

    n = len(y_true)
    error = y_pred - y_true

    sse = float(numpy.sum(error**2))
    rmse = math.sqrt(sse / n)
    mae = float(numpy.mean(numpy.abs(error)))
    sigma = float(numpy.std(y_true))

    if sigma > 0:
        nrmse = rmse / sigma
        r2 = 1.0 - sse / (n * sigma**2)
    else:
        nrmse = math.inf
        r2 = math.nan

    return Metrics(sigma=sigma, mae=mae, r2=r2, rmse=rmse, nrmse=nrmse)


FitFunction = Callable[[numpy.ndarray, numpy.ndarray, int], Any]
PredictFunction = Callable[[Any, numpy.ndarray], numpy.ndarray]


def cross_validate(
    X: numpy.ndarray,
    y: numpy.ndarray,
    fit: FitFunction,
    predict: PredictFunction,
    k: int,
    seed: int,
    threads: int = 1,
) -> CrossValidationResult:
    """Generic k-fold cross-validation with pooled out-of-fold statistics.

    Parameters
    ----------
    X, y
        The data.
    fit
        Called as ``fit(X_train, y_train, fold)``; returns a model.
    predict
        Called as ``predict(model, X_test)``.
    k
        Number of folds.
    seed
        Seed of the fold assignment.
    threads
        Number of folds run concurrently.

    """

    X = numpy.asarray(X, dtype=numpy.float64)
    y = numpy.asarray(y, dtype=numpy.float64)

    folds = kfold_split(len(y), k, seed)

    def run_fold(fold: int) -> Tuple[numpy.ndarray, numpy.ndarray]:
        train, test = folds.split(fold)
        try:
            model = fit(X[train], y[train], fold)
        except Exception as err:
            raise TrainingError(f"cross-validation fold {fold} failed: {err}") from err
        return test, predict(model, X[test])

    predictions = numpy.zeros_like(y)
    per_fold = []
    for test, fold_predictions in parallel_map(run_fold, range(k), threads=threads):
        predictions[test] = fold_predictions
        per_fold.append(compute_metrics(y[test], fold_predictions))

    predictions.setflags(write=False)

    return CrossValidationResult(
        metrics=compute_metrics(y, predictions),
        per_fold=tuple(per_fold),
        predictions=predictions,
        targets=y,
    )


def _fold_config(config: MLPConfig, seed: int, fold: int) -> MLPConfig:
    return replace(
        config,
        init_seed=derive_seed(seed, fold, StreamKey.INIT),
        shuffle_seed=derive_seed(seed, fold, StreamKey.SHUFFLE),
    )


def cross_validate_model_b(
    beta: Dataset,
    k: int = 5,
    config: MLPConfig = MLPConfig(),
    seed: int = 0,
    threads: int = 1,
) -> CrossValidationResult:
    """Cross-validates Model B on the labelled augmented dataset.

    The Model B scaler is refitted on the training folds only. Pooled statistics
    use the standard deviation of all the out-of-fold targets.

    """

    if beta.n_rows < k:
        raise ValidationError(f"cannot cross-validate {beta.n_rows} rows in {k} folds.")

    def fit(X_train, y_train, fold) -> DistilledModel:
        train = Dataset(
            features=X_train,
            targets=y_train,
            feature_names=beta.feature_names,
            target_name=beta.target_name,
            space_tag=beta.space_tag,
        )
        return train_model_b(train, _fold_config(config, seed, fold))

    return cross_validate(
        beta.features,
        beta.targets,
        fit,
        predict_error_bar,
        k=k,
        seed=seed,
        threads=threads,
    )


def cross_validate_model_a(
    d: Dataset,
    k: int = 5,
    config: MLPConfig = MLPConfig(),
    seed: int = 0,
    threads: int = 1,
) -> CrossValidationResult:
    """Cross-validates Model A on the raw dataset, scaling within each fold."""

    if d.space_tag is not Space.RAW:
        raise ValidationError("Model A cross-validation expects raw features.")

    def fit(X_train, y_train, fold):
        scaler = fit_scaler(
            Dataset(X_train, y_train, d.feature_names, d.target_name, Space.RAW)
        )
        model, _ = train_mlp(
            scaler.transform(X_train),
            y_train,
            _fold_config(config, seed, fold),
        )
        return scaler, model

    def predict(fitted, X_test):
        scaler, model = fitted
        return model.predict(scaler.transform(X_test))

    return cross_validate(
        d.features,
        d.targets,
        fit,
        predict,
        k=k,
        seed=seed,
        threads=threads,
    )


def run_learning_curve(
    beta0: numpy.ndarray,
    e: EnsembleModel,
    scale_factors: Sequence[float],
    sizes: Sequence[int],
    config: MLPConfig,
    seed: int,
    k: int = 5,
    allocation: str = "round-robin",
    feature_names: Optional[Sequence[str]] = None,
    threads: int = 1,
    callback: Optional[Callable[[LearningCurvePoint], None]] = None,
) -> List[LearningCurvePoint]:
    """Cross-validated Model B statistics over a grid of scale factors and sizes.

    For each scale factor one augmented set of ``max(sizes)`` rows is generated
    and labelled; each size uses its prefix, so smaller sets are nested in larger
    ones. Every cell derives its seeds from ``(seed, scale_factor, size)``.

    Parameters
    ----------
    beta0
        The scaled original features.
    e
        The calibrated ensemble used to label the augmented rows.
    scale_factors
        The hypercube half-widths.
    sizes
        Ascending total sizes, each at least the number of original rows.
    config
        The Model B configuration.
    seed
        The base seed.
    k
        Number of cross-validation folds.
    allocation
        Allocation mode passed to `.AugmentationConfig`.
    feature_names
        Labels of the features.
    threads
        Number of cells evaluated concurrently.
    callback
        Called with each point as soon as it is computed.

    """

    beta0 = numpy.asarray(beta0, dtype=numpy.float64)
    n_original = beta0.shape[0]
    sizes = [int(size) for size in sizes]

    if len(sizes) == 0 or len(scale_factors) == 0:
        raise ValidationError(
            "learning curves need at least one size and scale factor."
        )
    if sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise ValidationError(f"sizes must be strictly ascending, got {sizes}.")
    if sizes[0] < n_original:
        raise ValidationError(
            f"sizes must be >= the {n_original} original rows, got {sizes[0]}."
        )

    betas: Dict[float, Dataset] = {}
    for scale_factor in scale_factors:
        aug = generate_augmented_features(
            beta0,
            AugmentationConfig(
                scale_factor=scale_factor,
                n_total=sizes[-1],
                seed=derive_seed(seed, StreamKey.AUGMENT, quantize_scale(scale_factor)),
                allocation=allocation,  # type: ignore[arg-type]
            ),
            threads=threads,
        )
        betas[scale_factor] = build_beta_dataset(aug, e, feature_names=feature_names)

    def run_cell(cell: Tuple[float, int]) -> LearningCurvePoint:
        scale_factor, size = cell
        beta = betas[scale_factor].select_rows(numpy.arange(size))

        result = cross_validate_model_b(
            beta,
            k=k,
            config=config,
            seed=derive_seed(
                seed,
                StreamKey.EVALUATION,
                quantize_scale(scale_factor),
                size,
            ),
        )

        point = LearningCurvePoint(
            scale_factor=scale_factor,
            n_points=size,
            metrics=result.metrics,
            per_fold=result.per_fold,
            predictions=result.predictions,
            targets=result.targets,
        )

        log.info(
            f"learning curve s={scale_factor:g} n={size}: "
            f"nrmse={point.metrics.nrmse:.4g} sigma={point.metrics.sigma:.4g}"
        )

        if callback:
            callback(point)

        return point

    cells = [(scale_factor, size) for scale_factor in scale_factors for size in sizes]

    return parallel_map(run_cell, cells, threads=threads)


def _point_at(points: Sequence[LearningCurvePoint], size: int) -> LearningCurvePoint:
    for point in points:
        if point.n_points == size:
            return point

    raise ValidationError(
        f"no learning-curve point with n={size} for s={points[0].scale_factor}."
    )


def stats_table(
    points: Sequence[LearningCurvePoint],
    n_max_report: int,
    n_original: int,
) -> List[StatsRow]:
    """Summarises a learning curve per scale factor.

    For each scale factor, reports the fit on the ``n_original`` original
    points, at ``n_max_report``, and the fit with the lowest ``nrmse`` over all
    sizes. Ties go to the larger size.

    """

    by_scale: Dict[float, List[LearningCurvePoint]] = {}
    for point in points:
        by_scale.setdefault(point.scale_factor, []).append(point)

    rows = []
    for scale_factor, scale_points in by_scale.items():
        scale_points = sorted(scale_points, key=lambda pp: pp.n_points)

        original = _point_at(scale_points, n_original)
        maximum = _point_at(scale_points, n_max_report)

        best = min(scale_points, key=lambda pp: (pp.metrics.nrmse, -pp.n_points))

        rows.append(
            StatsRow(
                scale_factor=scale_factor,
                original=original.metrics,
                maximum=maximum.metrics,
                best=best.metrics,
                n_original=original.n_points,
                n_max=n_max_report,
                n_best=best.n_points,
            )
        )

    return rows


def benchmark_inference(
    e: EnsembleModel,
    b: DistilledModel,
    batch: numpy.ndarray,
    repeats: int = 5,
) -> BenchmarkResult:
    """Times error-bar prediction through the ensemble and through Model B.

    Both paths are warmed up once, then run ``repeats`` times on the whole batch
    with BLAS limited to one thread. Reports the median time per row.

    """

    batch = numpy.asarray(batch, dtype=numpy.float64)

    if repeats < 3:
        raise ValidationError(f"repeats must be >= 3, got {repeats}.")
    if batch.ndim != 2 or batch.shape[0] < 1:
        raise ValidationError("the benchmark batch must be a non-empty 2D array.")

    def ensemble_path():
        return e.predict(batch).sigma_cal

    def distilled_path():
        return predict_error_bar(b, batch)

    def time_path(path) -> float:
        path()
        timings = []
        for _ in range(repeats):
            with Timer() as timer:
                path()
            timings.append(timer.elapsed_ns)
        return float(numpy.median(timings)) / batch.shape[0]

    with threadpool_limits(limits=1):
        ensemble_ns = time_path(ensemble_path)
        distilled_ns = time_path(distilled_path)

    return BenchmarkResult(
        ensemble_ns_per_row=ensemble_ns,
        distilled_ns_per_row=distilled_ns,
        speedup=ensemble_ns / distilled_ns,
        ensemble_param_count=e.parameter_count,
        distilled_param_count=b.parameter_count,
        batch_size=batch.shape[0],
        repeats=repeats,
        n_members=e.n_members,
    )


def write_learning_curve_csv(
    points: Sequence[LearningCurvePoint],
    path: AnyPath,
    dataset_name: str = "dataset",
):
    """Writes one row per learning-curve point, with per-fold ``nrmse`` columns."""

    records = []
    for point in points:
        record: Dict[str, Any] = {
            "dataset_name": dataset_name,
            "scale_factor": point.scale_factor,
            "n_points": point.n_points,
        }
        record.update(
            {
                name: getattr(point.metrics, name)
                for name in Metrics.__dataclass_fields__
            }
        )
        for fold, metrics in enumerate(point.per_fold):
            record[f"fold_{fold}_nrmse"] = metrics.nrmse
        records.append(record)

    columns = ["dataset_name", "scale_factor", "n_points"]
    columns += ["sigma", "mae", "r2", "rmse", "nrmse"]
    n_folds = max((len(point.per_fold) for point in points), default=0)
    columns += [f"fold_{fold}_nrmse" for fold in range(n_folds)]

    pandas.DataFrame.from_records(records, columns=columns).to_csv(
        path,
        index=False,
        encoding="utf-8",
    )


def _format_value(value: float) -> str:
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf"
    return format(value, ".4g")


def write_stats_table_csv(
    rows: Sequence[StatsRow],
    path: AnyPath,
    dataset_name: str = "dataset",
):
    """Writes the statistics table.

    Each statistic cell holds ``original/max/best``. The best value carries a
    ``*`` when the max-size fit is not the best one, which the ``flag`` column
    also records.

    """

    records = []
    for row in rows:
        record: Dict[str, Any] = {
            "dataset_name": dataset_name,
            "scale_factor": row.scale_factor,
        }
        for name in STATISTICS:
            values = [getattr(mm, name) for mm in (row.original, row.maximum, row.best)]
            cells = [_format_value(value) for value in values]
            if row.flagged:
                cells[-1] += "*"
            record[name] = "/".join(cells)
        record.update(
            {
                "n_original": row.n_original,
                "n_max": row.n_max,
                "n_best": row.n_best,
                "flag": "*" if row.flagged else "",
            }
        )
        records.append(record)

    columns = ["dataset_name", "scale_factor", *STATISTICS]
    columns += ["n_original", "n_max", "n_best", "flag"]

    pandas.DataFrame.from_records(records, columns=columns).to_csv(
        path,
        index=False,
        encoding="utf-8",
    )


def write_benchmark_csv(result: BenchmarkResult, path: AnyPath):
    """Writes a one-row benchmark report."""

    pandas.DataFrame([result.to_dict()]).to_csv(path, index=False, encoding="utf-8")


def read_learning_curve_csv(path: AnyPath) -> List[LearningCurvePoint]:
    """Reads the points written by `.write_learning_curve_csv`.

    Out-of-fold predictions are not stored, so the points carry only the pooled
    and per-fold statistics (per-fold values other than ``nrmse`` are `nan`).

    """

    try:
        frame = pandas.read_csv(path, encoding="utf-8")
    except (OSError, pandas.errors.ParserError, pandas.errors.EmptyDataError) as err:
        raise ValidationError(
            f"cannot read learning curve {str(path)!r}: {err}"
        ) from err

    required = ["scale_factor", "n_points", "sigma", "mae", "r2", "rmse", "nrmse"]
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise ValidationError(f"learning curve {str(path)!r} lacks columns {missing}.")

    fold_columns = sorted(
        (column for column in frame.columns if column.startswith("fold_")),
        key=lambda column: int(column.split("_")[1]),
    )

    points = []
    for record in frame.to_dict(orient="records"):
        per_fold = tuple(
            Metrics(
                sigma=math.nan,
                mae=math.nan,
                r2=math.nan,
                rmse=math.nan,
                nrmse=float(record[column]),
            )
            for column in fold_columns
            if not pandas.isna(record[column])
        )
        points.append(
            LearningCurvePoint(
                scale_factor=float(record["scale_factor"]),
                n_points=int(record["n_points"]),
                metrics=Metrics(**{name: float(record[name]) for name in required[2:]}),
                per_fold=per_fold,
            )
        )

    return points


def write_cross_validation_csv(
    result: CrossValidationResult,
    path: AnyPath,
    dataset_name: str = "dataset",
    model_name: str = "model_a",
):
    """Writes the pooled statistics (``fold = all``) and one row per fold."""

    records = [
        {"dataset_name": dataset_name, "model": model_name, "fold": "all"}
        | result.metrics.to_dict()
    ]
    for fold, metrics in enumerate(result.per_fold):
        records.append(
            {"dataset_name": dataset_name, "model": model_name, "fold": str(fold)}
            | metrics.to_dict()
        )

    pandas.DataFrame.from_records(records).to_csv(path, index=False, encoding="utf-8")
