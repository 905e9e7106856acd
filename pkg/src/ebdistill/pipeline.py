#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: pipeline.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""The end-to-end workflow and its individually runnable stages.

``ingest -> scale -> train A -> train and calibrate the ensemble -> augment ->
label -> train B -> evaluate -> write``. Each stage runs inside
`.PipelineLogger.stage`, which logs a one-line summary and turns failures into
a `.StageError` that names the stage.

"""

from __future__ import annotations

import os
import pathlib
from dataclasses import dataclass, field

from typing import Dict, List, Optional, Tuple, Union

import pandas

from . import log
from .augment import (
    AugmentationConfig,
    AugmentedSet,
    build_beta_dataset,
    generate_augmented_features,
)
from .bundle import ModelBundle, load_bundle, save_bundle
from .configuration import RunConfig
from .data import (
    Dataset,
    MinMaxScaler,
    apply_scaler,
    fit_scaler,
    load_dataset_csv,
    load_features_csv,
)
from .distill import DistilledModel, predict_combined_arrays, train_model_b
from .ensemble import EnsembleModel, calibrate_ensemble_cv, train_ensemble
from .evaluation import (
    BenchmarkResult,
    CrossValidationResult,
    LearningCurvePoint,
    StatsRow,
    benchmark_inference,
    cross_validate_model_a,
    run_learning_curve,
    stats_table,
    write_cross_validation_csv,
    write_learning_curve_csv,
    write_stats_table_csv,
)
from .exceptions import ValidationError
from .nn import MLPModel, train_mlp
from .plotting import emit_curve_plot, emit_parity_plot
from .streams import StreamKey, derive_seed, make_rng, quantize_scale
from .synth import generate_synthetic


__all__ = [
    "OUTPUT_FILES",
    "PipelineResult",
    "load_data",
    "scale_data",
    "stage_train_a",
    "stage_train_ensemble",
    "stage_calibrate",
    "stage_augment",
    "stage_train_b",
    "stage_evaluate",
    "stage_benchmark",
    "make_bundle",
    "check_bundle_data",
    "write_curve_plots",
    "write_reports",
    "run_pipeline",
    "predict_csv",
]


AnyPath = Union[str, os.PathLike]

#: Names of the files written to the output directory.
OUTPUT_FILES = {
    "bundle": "bundle.zip",
    "learning_curve": "learning_curve.csv",
    "stats_table": "stats_table.csv",
    "model_a_cv": "model_a_cv.csv",
    "augmented": "augmented.csv",
    "benchmark": "benchmark.csv",
    "curve_nrmse": "learning_curve_nrmse.svg",
    "curve_rmse": "learning_curve_rmse.svg",
    "curve_sigma": "learning_curve_sigma.svg",
    "parity": "parity.svg",
}


@dataclass
class EvaluationReport:
    """Learning-curve and cross-validation results of a run."""

    points: List[LearningCurvePoint] = field(default_factory=list)
    stats: List[StatsRow] = field(default_factory=list)
    model_a_cv: Optional[CrossValidationResult] = None


@dataclass
class PipelineResult:
    """Everything produced by `.run_pipeline`."""

    bundle: ModelBundle
    evaluation: EvaluationReport
    files: Dict[str, pathlib.Path]


def load_data(run: RunConfig) -> Dataset:
    """Reads the configured CSV or generates the synthetic dataset."""

    if run.data.path is not None:
        assert run.data.target_column is not None
        return load_dataset_csv(
            run.data.path,
            run.data.target_column,
            feature_columns=run.data.feature_columns,
        )

    return generate_synthetic(run.synthetic)


def scale_data(data: Dataset) -> Tuple[MinMaxScaler, Dataset]:
    """Fits the original-data scaler and returns it with the scaled data."""

    s_alpha = fit_scaler(data)
    return s_alpha, apply_scaler(s_alpha, data)


def stage_train_a(run: RunConfig, beta0: Dataset) -> MLPModel:
    with log.stage("train-a") as summary:
        model_a, report = train_mlp(beta0.features, beta0.targets, run.model_a)
        summary(
            f"{model_a.parameter_count} parameters, "
            f"final loss {report.final_loss:.4g} "
            f"after {len(report.epoch_losses)} epochs"
        )

    return model_a


def stage_train_ensemble(run: RunConfig, beta0: Dataset) -> EnsembleModel:
    with log.stage("train-ensemble") as summary:
        ensemble = train_ensemble(
            beta0,
            run.ensemble.n_members,
            run.model_a,
            run.ensemble.seed,
            bootstrap_fraction=run.ensemble.bootstrap_fraction,
            threads=run.threads,
        )
        summary(f"{ensemble.n_members} members, {ensemble.parameter_count} parameters")

    return ensemble


def stage_calibrate(run: RunConfig, ensemble: EnsembleModel, beta0: Dataset):
    with log.stage("calibrate") as summary:
        ensemble = calibrate_ensemble_cv(
            ensemble,
            beta0,
            run.model_a,
            run.calibration.seed,
            k=run.calibration.n_folds,
            n_bins=run.calibration.n_bins,
            bootstrap_fraction=run.ensemble.bootstrap_fraction,
            threads=run.threads,
        )
        calibration = ensemble.calibration
        summary(
            f"a={calibration.a:.4g} b={calibration.b:.4g} ({calibration.method_tag})"
        )

    return ensemble


def _augmentation_seed(run: RunConfig, scale_factor: float) -> int:
    # Same stream as the learning curve, so the deployed set is one of its prefixes.
    return derive_seed(
        run.augmentation.seed,
        StreamKey.AUGMENT,
        quantize_scale(scale_factor),
    )


def stage_augment(
    run: RunConfig,
    ensemble: EnsembleModel,
    beta0: Dataset,
) -> Tuple[AugmentedSet, Dataset]:
    """Generates and labels the training set of the deployed Model B."""

    n_total = run.distillation.n_total or max(
        run.augmentation.resolve_sizes(beta0.n_rows)
    )
    if n_total < beta0.n_rows:
        raise ValidationError(
            f"model_b.n_total={n_total} is smaller than "
            f"the {beta0.n_rows} original rows."
        )

    with log.stage("augment") as summary:
        aug = generate_augmented_features(
            beta0.features,
            AugmentationConfig(
                scale_factor=run.distillation.scale_factor,
                n_total=n_total,
                seed=_augmentation_seed(run, run.distillation.scale_factor),
                allocation=run.augmentation.allocation,
            ),
            threads=run.threads,
        )
        summary(
            f"{aug.n_rows} rows ({aug.n_rows - aug.n_original} generated) "
            f"at s={run.distillation.scale_factor:g}"
        )

    with log.stage("label") as summary:
        beta = build_beta_dataset(aug, ensemble, feature_names=beta0.feature_names)
        summary(
            f"error bars in [{beta.targets.min():.4g}, {beta.targets.max():.4g}], "
            f"mean {beta.targets.mean():.4g}"
        )

    return aug, beta


def stage_train_b(run: RunConfig, ensemble: EnsembleModel, beta: Dataset):
    with log.stage("train-b") as summary:
        model_b = train_model_b(
            beta,
            run.model_b,
            sigma_floor=ensemble.calibration.sigma_floor,
        )
        summary(f"{model_b.parameter_count} parameters on {beta.n_rows} rows")

    return model_b


def stage_evaluate(
    run: RunConfig,
    data: Dataset,
    beta0: Dataset,
    ensemble: EnsembleModel,
) -> EvaluationReport:
    """Cross-validates Model A and computes the Model B learning curve."""

    report = EvaluationReport()
    if run.evaluation.learning_curve:
        n_max_report = run.report_size(beta0.n_rows)

    if run.evaluation.cross_validate_model_a:
        with log.stage("evaluate-a") as summary:
            report.model_a_cv = cross_validate_model_a(
                data,
                k=run.evaluation.n_folds,
                config=run.model_a,
                seed=run.evaluation.seed,
                threads=run.threads,
            )
            metrics = report.model_a_cv.metrics
            summary(f"nrmse={metrics.nrmse:.4g} r2={metrics.r2:.4g}")

    if run.evaluation.learning_curve:
        with log.stage("learning-curve") as summary:
            sizes = run.augmentation.resolve_sizes(beta0.n_rows)
            report.points = run_learning_curve(
                beta0.features,
                ensemble,
                run.augmentation.scale_factors,
                sizes,
                run.model_b,
                run.augmentation.seed,
                k=run.evaluation.n_folds,
                allocation=run.augmentation.allocation,
                feature_names=beta0.feature_names,
                threads=run.threads,
            )
            report.stats = stats_table(report.points, n_max_report, beta0.n_rows)
            summary(
                f"{len(report.points)} points, "
                f"{sum(row.flagged for row in report.stats)} flagged scale factors"
            )

    return report


def stage_benchmark(run: RunConfig, bundle: ModelBundle) -> BenchmarkResult:
    """Times the ensemble against Model B on random rows of the scaled space."""

    if bundle.ensemble is None or bundle.model_b is None:
        raise ValidationError(
            "benchmarking needs a bundle with an ensemble and Model B."
        )

    rng = make_rng(run.seed, StreamKey.EVALUATION)
    batch = rng.random((run.benchmark.batch_size, bundle.model_a.input_dim))

    with log.stage("bench") as summary:
        result = benchmark_inference(
            bundle.ensemble,
            bundle.model_b,
            batch,
            repeats=run.benchmark.repeats,
        )
        summary(
            f"speedup {result.speedup:.1f}x, "
            f"parameter ratio {result.param_ratio:.1f}"
        )

    return result


def make_bundle(
    run: RunConfig,
    data: Dataset,
    s_alpha: MinMaxScaler,
    model_a: MLPModel,
    ensemble: Optional[EnsembleModel] = None,
    model_b: Optional[DistilledModel] = None,
) -> ModelBundle:
    return ModelBundle(
        alpha_scaler=s_alpha,
        model_a=model_a,
        feature_names=data.feature_names,
        target_name=data.target_name,
        ensemble=ensemble,
        model_b=model_b,
        provenance={"run_config": run.snapshot(), "data_hash": data.content_hash()},
    )


def check_bundle_data(bundle: ModelBundle, data: Dataset):
    """Raises if ``data`` is not the dataset the bundle was trained on."""

    data_hash = bundle.provenance.get("data_hash")
    if data_hash is not None and data_hash != data.content_hash():
        raise ValidationError(
            "the configured dataset differs from the one the bundle was trained on."
        )
    if tuple(bundle.feature_names) != tuple(data.feature_names):
        raise ValidationError(
            f"bundle features {list(bundle.feature_names)} do not match "
            f"the dataset features {list(data.feature_names)}."
        )


def write_curve_plots(
    points: List[LearningCurvePoint],
    out_dir: pathlib.Path,
    dataset_name: str,
) -> Dict[str, pathlib.Path]:
    """Writes the nrmse, RMSE, and sigma learning-curve plots."""

    files = {}
    for metric in ("nrmse", "rmse", "sigma"):
        key = f"curve_{metric}"
        files[key] = out_dir / OUTPUT_FILES[key]
        emit_curve_plot(
            points,
            files[key],
            metric=metric,  # type: ignore[arg-type]
            title=dataset_name,
        )

    return files


def write_reports(
    run: RunConfig,
    report: EvaluationReport,
    out_dir: pathlib.Path,
) -> Dict[str, pathlib.Path]:
    """Writes the CSV reports and plots of an evaluation to ``out_dir``."""

    dataset_name = str(run.data.name)
    files: Dict[str, pathlib.Path] = {}

    if report.model_a_cv is not None:
        files["model_a_cv"] = out_dir / OUTPUT_FILES["model_a_cv"]
        write_cross_validation_csv(report.model_a_cv, files["model_a_cv"], dataset_name)

    if report.points:
        files["learning_curve"] = out_dir / OUTPUT_FILES["learning_curve"]
        write_learning_curve_csv(report.points, files["learning_curve"], dataset_name)

        files["stats_table"] = out_dir / OUTPUT_FILES["stats_table"]
        write_stats_table_csv(report.stats, files["stats_table"], dataset_name)

        files.update(write_curve_plots(report.points, out_dir, dataset_name))

        deployed = [
            point
            for point in report.points
            if point.scale_factor == run.distillation.scale_factor
        ]
        if deployed:
            largest = max(deployed, key=lambda point: point.n_points)
            assert largest.targets is not None and largest.predictions is not None
            files["parity"] = out_dir / OUTPUT_FILES["parity"]
            emit_parity_plot(
                largest.targets,
                largest.predictions,
                files["parity"],
                title=f"s = {largest.scale_factor:g}, n = {largest.n_points}",
            )

    return files


def run_pipeline(run: RunConfig) -> PipelineResult:
    """Runs the whole workflow and writes the bundle and the reports.

    Two runs with the same configuration write byte-identical bundles, CSV
    files, and plots, whatever the number of threads.

    """

    out_dir = pathlib.Path(run.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with log.stage("ingest") as summary:
        data = load_data(run)
        if run.evaluation.learning_curve:
            run.report_size(data.n_rows)
        summary(f"{data.n_rows} rows, {data.n_features} features ({run.data.name})")

    with log.stage("scale") as summary:
        s_alpha, beta0 = scale_data(data)
        summary(f"{len(s_alpha.degenerate_cols)} constant columns")

    model_a = stage_train_a(run, beta0)
    ensemble = stage_train_ensemble(run, beta0)
    ensemble = stage_calibrate(run, ensemble, beta0)
    _, beta = stage_augment(run, ensemble, beta0)
    model_b = stage_train_b(run, ensemble, beta)

    report = stage_evaluate(run, data, beta0, ensemble)

    with log.stage("write") as summary:
        bundle = make_bundle(run, data, s_alpha, model_a, ensemble, model_b)
        files = {"bundle": save_bundle(bundle, out_dir / OUTPUT_FILES["bundle"])}
        files.update(write_reports(run, report, out_dir))
        summary(f"{len(files)} files in {str(out_dir)!r}")

    return PipelineResult(bundle=bundle, evaluation=report, files=files)


def predict_csv(
    bundle_path: AnyPath,
    input_csv: AnyPath,
    output_csv: AnyPath,
) -> pandas.DataFrame:
    """Predicts values and error bars for the rows of a CSV file.

    Only Model A and Model B are evaluated; an ensemble stored in the bundle is
    ignored. The output has the input columns, ``y_hat``, and ``sigma_hat``.

    """

    bundle = load_bundle(bundle_path)
    if bundle.model_b is None:
        raise ValidationError(
            "the bundle is not distilled; run the distill stage first."
        )

    X_raw, _ = load_features_csv(input_csv, bundle.feature_names)

    output = predict_combined_arrays(
        bundle.model_a,
        bundle.model_b,
        bundle.alpha_scaler,
        X_raw,
    )

    frame = pandas.DataFrame(X_raw, columns=list(bundle.feature_names))
    frame["y_hat"] = output.value
    frame["sigma_hat"] = output.error_bar

    pathlib.Path(output_csv).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(output_csv, index=False, encoding="utf-8", float_format="%.17g")

    log.info(f"wrote {len(frame)} predictions to {str(output_csv)!r}.")

    return frame
