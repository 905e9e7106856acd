#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: plotting.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""SVG plots of learning curves and out-of-fold predictions.

Figures are created without ``pyplot`` and saved with a fixed SVG hash salt and
no date, so the same input always produces the same bytes.

"""

from __future__ import annotations

import os
import pathlib

from typing import Dict, List, Literal, Sequence, Union

import matplotlib
import numpy
from matplotlib.figure import Figure

from .evaluation import LearningCurvePoint
from .exceptions import ValidationError


__all__ = ["emit_curve_plot", "emit_parity_plot", "NRMSE_GUIDE"]


AnyPath = Union[str, os.PathLike]
CurveMetric = Literal["nrmse", "rmse", "sigma"]

#: Normalised CV-RMSE below which the error-bar model is considered useful.
NRMSE_GUIDE = 0.2

LABELS = {
    "nrmse": "Normalised CV-RMSE (RMSE / sigma)",
    "rmse": "CV-RMSE",
    "sigma": "Sigma of the labelled error bars",
}


def _save(figure: Figure, path: AnyPath) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with matplotlib.rc_context({"svg.hashsalt": "ebdistill", "svg.fonttype": "path"}):
        figure.savefig(path, format="svg", metadata={"Date": None})

    return path


def emit_curve_plot(
    points: Sequence[LearningCurvePoint],
    path: AnyPath,
    metric: CurveMetric = "nrmse",
    title: str | None = None,
) -> Figure:
    """Plots a learning-curve statistic against the number of points.

    One series per scale factor, with a logarithmic x axis. The ``nrmse`` plot
    also draws a dashed guide at `NRMSE_GUIDE`.

    Parameters
    ----------
    points
        The learning-curve points.
    path
        Where to write the SVG file.
    metric
        The statistic on the y axis.
    title
        Optional title of the axes.

    Returns
    -------
    figure
        The `~matplotlib.figure.Figure`, already saved.

    """

    if len(points) == 0:
        raise ValidationError("cannot plot an empty learning curve.")
    if metric not in LABELS:
        raise ValidationError(f"unknown metric {metric!r}.")

    series: Dict[float, List[LearningCurvePoint]] = {}
    for point in points:
        series.setdefault(point.scale_factor, []).append(point)

    figure = Figure(figsize=(6.0, 4.5))
    ax = figure.add_subplot()

    for scale_factor in sorted(series):
        scale_points = sorted(series[scale_factor], key=lambda pp: pp.n_points)
        ax.plot(
            [pp.n_points for pp in scale_points],
            [getattr(pp.metrics, metric) for pp in scale_points],
            marker="o",
            label=f"s = {scale_factor:g}",
        )

    if metric == "nrmse":
        ax.axhline(y=NRMSE_GUIDE, color="0.4", linestyle="--", lw=1, label="_guide")

    ax.set_xscale("log")
    ax.set_xlabel("Number of points")
    ax.set_ylabel(LABELS[metric])
    if title:
        ax.set_title(title)
    ax.legend(title="Scale factor")
    ax.grid(True, which="both", alpha=0.3)

    figure.tight_layout()
    _save(figure, path)

    return figure


def emit_parity_plot(
    targets: numpy.ndarray,
    predictions: numpy.ndarray,
    path: AnyPath,
    title: str | None = None,
) -> Figure:
    """Plots out-of-fold predicted error bars against their ensemble labels."""

    targets = numpy.asarray(targets, dtype=numpy.float64)
    predictions = numpy.asarray(predictions, dtype=numpy.float64)

    if targets.size == 0 or targets.shape != predictions.shape:
        raise ValidationError("parity plots need non-empty arrays of equal shape.")

    figure = Figure(figsize=(5.0, 5.0))
    ax = figure.add_subplot()

    ax.scatter(targets, predictions, s=4, alpha=0.4)

    low = float(min(targets.min(), predictions.min()))
    high = float(max(targets.max(), predictions.max()))
    ax.plot([low, high], [low, high], color="r", linestyle="--", lw=1)

    ax.set_xlabel("Ensemble error bar")
    ax.set_ylabel("Model B error bar (out of fold)")
    if title:
        ax.set_title(title)
    ax.set_aspect("equal", adjustable="datalim")

    figure.tight_layout()
    _save(figure, path)

    return figure
