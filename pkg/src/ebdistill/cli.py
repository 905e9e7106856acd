#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: cli.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

import logging
import pathlib
from dataclasses import dataclass

from typing import Optional, Tuple

import click

from . import NAME, __version__, log
from .augment import export_augmented_csv
from .bundle import ModelBundle, load_bundle, save_bundle
from .configuration import RunConfig, get_config
from .data import Dataset, apply_scaler
from .evaluation import read_learning_curve_csv, write_benchmark_csv
from .exceptions import EBDistillError, ValidationError
from .pipeline import (
    OUTPUT_FILES,
    check_bundle_data,
    load_data,
    make_bundle,
    predict_csv,
    run_pipeline,
    scale_data,
    stage_augment,
    stage_benchmark,
    stage_calibrate,
    stage_evaluate,
    stage_train_a,
    stage_train_b,
    stage_train_ensemble,
    write_curve_plots,
    write_reports,
)
from .synth import generate_synthetic


__all__ = ["ebdistill", "main", "PipelineGroup"]


class PipelineGroup(click.Group):
    """A click group that turns package errors into exit codes.

    Validation errors exit with code 1; training, bundle and other runtime
    failures exit with code 2.

    """

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except EBDistillError as err:
            log.error(str(err))
            ctx.exit(err.exit_code)


@dataclass
class CLIState:
    config_path: Optional[str]
    out: Optional[str]
    threads: Optional[int]
    seed: Optional[int]

    def run_config(self) -> RunConfig:
        configuration = get_config(NAME, user_path=self.config_path)
        return RunConfig.from_config(
            configuration,
            seed=self.seed,
            output_dir=self.out,
            threads=self.threads,
        )

    def out_dir(self, run: RunConfig) -> pathlib.Path:
        path = pathlib.Path(run.output_dir)
        path.mkdir(parents=True, exist_ok=True)
        return path


pass_state = click.make_pass_decorator(CLIState)

bundle_option = click.option(
    "--bundle",
    "bundle_path",
    type=click.Path(dir_okay=False),
    help="Input bundle. Defaults to bundle.zip in the output directory.",
)


def _input_bundle(
    state: CLIState,
    bundle_path: Optional[str],
) -> Tuple[RunConfig, ModelBundle, Dataset, Dataset]:
    """Loads the run configuration, a bundle, and the dataset it was trained on."""

    run = state.run_config()
    path = bundle_path or state.out_dir(run) / OUTPUT_FILES["bundle"]

    bundle = load_bundle(path)
    data = load_data(run)
    check_bundle_data(bundle, data)

    return run, bundle, data, apply_scaler(bundle.alpha_scaler, data)


def _save(state: CLIState, run: RunConfig, bundle: ModelBundle):
    path = save_bundle(bundle, state.out_dir(run) / OUTPUT_FILES["bundle"])
    click.echo(f"Bundle written to {path}")


@click.group(
    cls=PipelineGroup,
    context_settings={"help_option_names": ["-h", "--help"]},
)
@click.version_option(__version__, prog_name=NAME)
@click.option(
    "-c",
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    help="YAML or JSON configuration merged over the packaged defaults.",
)
@click.option("-o", "--out", type=click.Path(file_okay=False), help="Output directory.")
@click.option("--threads", type=click.IntRange(min=1), help="Worker threads.")
@click.option("--seed", type=click.IntRange(min=0), help="Overrides the config seed.")
@click.option(
    "--log-file",
    type=click.Path(dir_okay=False),
    help="Also log to this file, with a JSON-lines copy next to it.",
)
@click.option("-v", "--verbose", is_flag=True, help="Debug output.")
@click.pass_context
def ebdistill(
    ctx: click.Context,
    config_path: Optional[str],
    out: Optional[str],
    threads: Optional[int],
    seed: Optional[int],
    log_file: Optional[str],
    verbose: bool,
):
    """Distils ensemble error bars into a single fast model."""

    if verbose:
        log.set_level(logging.DEBUG)

    if log_file:
        if pathlib.Path(log_file).suffix == ".json":
            log.start_file_logger(log_file, as_json=True)
        else:
            log.start_file_logger(log_file, with_json=True)
        ctx.call_on_close(log.stop_file_logger)

    ctx.obj = CLIState(config_path=config_path, out=out, threads=threads, seed=seed)


@ebdistill.command()
@pass_state
def pipeline(state: CLIState):
    """Runs every stage and writes the bundle and the reports."""

    result = run_pipeline(state.run_config())

    for path in result.files.values():
        click.echo(f"Wrote {path}")


@ebdistill.command()
@click.option("--output", type=click.Path(dir_okay=False), help="CSV file to write.")
@pass_state
def synth(state: CLIState, output: Optional[str]):
    """Writes the configured synthetic dataset to a CSV file."""

    run = state.run_config()
    path = pathlib.Path(output) if output else state.out_dir(run) / "synthetic.csv"

    data = generate_synthetic(run.synthetic)
    data.to_csv(path)

    click.echo(f"Wrote {data.n_rows} rows to {path}")


@ebdistill.command(name="train-a")
@pass_state
def train_a(state: CLIState):
    """Trains Model A and starts a new bundle."""

    run = state.run_config()
    data = load_data(run)
    s_alpha, beta0 = scale_data(data)

    model_a = stage_train_a(run, beta0)

    _save(state, run, make_bundle(run, data, s_alpha, model_a))


@ebdistill.command(name="train-ensemble")
@bundle_option
@pass_state
def train_ensemble(state: CLIState, bundle_path: Optional[str]):
    """Trains the bootstrap ensemble (uncalibrated) into an existing bundle."""

    run, bundle, data, beta0 = _input_bundle(state, bundle_path)
    ensemble = stage_train_ensemble(run, beta0)

    _save(
        state,
        run,
        make_bundle(run, data, bundle.alpha_scaler, bundle.model_a, ensemble),
    )


@ebdistill.command()
@bundle_option
@pass_state
def calibrate(state: CLIState, bundle_path: Optional[str]):
    """Calibrates the bundle's ensemble on cross-validated residuals."""

    run, bundle, data, beta0 = _input_bundle(state, bundle_path)
    if bundle.ensemble is None:
        raise ValidationError("the bundle has no ensemble; run train-ensemble first.")

    ensemble = stage_calibrate(run, bundle.ensemble, beta0)

    _save(
        state,
        run,
        make_bundle(run, data, bundle.alpha_scaler, bundle.model_a, ensemble),
    )


def _calibrated_ensemble(bundle: ModelBundle):
    if bundle.ensemble is None:
        raise ValidationError("the bundle has no ensemble; run train-ensemble first.")
    if not bundle.ensemble.calibrated:
        raise ValidationError("the bundle's ensemble is not calibrated; run calibrate.")

    return bundle.ensemble


@ebdistill.command()
@bundle_option
@pass_state
def augment(state: CLIState, bundle_path: Optional[str]):
    """Writes the augmented features labelled with calibrated error bars."""

    run, bundle, _, beta0 = _input_bundle(state, bundle_path)
    ensemble = _calibrated_ensemble(bundle)

    aug, beta = stage_augment(run, ensemble, beta0)

    path = state.out_dir(run) / OUTPUT_FILES["augmented"]
    export_augmented_csv(aug, beta, path)
    click.echo(f"Wrote {aug.n_rows} rows to {path}")


@ebdistill.command()
@bundle_option
@pass_state
def distill(state: CLIState, bundle_path: Optional[str]):
    """Trains Model B on the augmented data and adds it to the bundle."""

    run, bundle, data, beta0 = _input_bundle(state, bundle_path)
    ensemble = _calibrated_ensemble(bundle)

    _, beta = stage_augment(run, ensemble, beta0)
    model_b = stage_train_b(run, ensemble, beta)

    _save(
        state,
        run,
        make_bundle(run, data, bundle.alpha_scaler, bundle.model_a, ensemble, model_b),
    )


@ebdistill.command()
@bundle_option
@pass_state
def evaluate(state: CLIState, bundle_path: Optional[str]):
    """Cross-validates Model A and computes the Model B learning curve."""

    run, bundle, data, beta0 = _input_bundle(state, bundle_path)
    ensemble = _calibrated_ensemble(bundle)

    report = stage_evaluate(run, data, beta0, ensemble)

    for path in write_reports(run, report, state.out_dir(run)).values():
        click.echo(f"Wrote {path}")


@ebdistill.command()
@click.argument("learning_curve", type=click.Path(exists=True, dir_okay=False))
@click.option("--name", default=None, help="Title of the plots.")
@pass_state
def curve(state: CLIState, learning_curve: str, name: Optional[str]):
    """Plots a learning-curve CSV file."""

    points = read_learning_curve_csv(learning_curve)

    out_dir = pathlib.Path(state.out or pathlib.Path(learning_curve).parent)
    out_dir.mkdir(parents=True, exist_ok=True)

    title = name or pathlib.Path(learning_curve).stem
    for path in write_curve_plots(points, out_dir, title).values():
        click.echo(f"Wrote {path}")


@ebdistill.command()
@bundle_option
@pass_state
def bench(state: CLIState, bundle_path: Optional[str]):
    """Times error-bar inference of the ensemble against Model B."""

    run = state.run_config()
    bundle = load_bundle(bundle_path or state.out_dir(run) / OUTPUT_FILES["bundle"])

    result = stage_benchmark(run, bundle)

    path = state.out_dir(run) / OUTPUT_FILES["benchmark"]
    write_benchmark_csv(result, path)

    click.echo(
        f"Ensemble {result.ensemble_ns_per_row:.0f} ns/row, "
        f"Model B {result.distilled_ns_per_row:.0f} ns/row, "
        f"speedup {result.speedup:.1f}x"
    )


@ebdistill.command()
@click.argument("bundle_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("input_csv", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_csv", type=click.Path(dir_okay=False))
def predict(bundle_path: str, input_csv: str, output_csv: str):
    """Predicts values and error bars with Model A and Model B only."""

    frame = predict_csv(bundle_path, input_csv, output_csv)
    click.echo(f"Wrote {len(frame)} predictions to {output_csv}")


def main():
    ebdistill()


if __name__ == "__main__":
    main()
