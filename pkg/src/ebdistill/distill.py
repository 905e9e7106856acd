#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: distill.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

from dataclasses import dataclass

from typing import List

import numpy

from .data import Dataset, MinMaxScaler, fit_scaler
from .ensemble import SIGMA_FLOOR
from .exceptions import ValidationError
from .nn import MLPConfig, MLPModel, train_mlp


__all__ = [
    "DistilledModel",
    "CombinedPrediction",
    "CombinedOutput",
    "train_model_b",
    "predict_error_bar",
    "predict_combined",
    "predict_combined_arrays",
]


@dataclass(frozen=True)
class DistilledModel:
    """A single network that predicts the ensemble's calibrated error bars.

    ``input_scaler`` is fitted on the augmented features and is applied on top
    of the scaling of the original data.

    """

    net: MLPModel
    input_scaler: MinMaxScaler
    sigma_floor: float = SIGMA_FLOOR

    def __post_init__(self):
        if not self.sigma_floor > 0:
            raise ValidationError("sigma_floor must be positive.")
        if self.input_scaler.n_features != self.net.input_dim:
            raise ValidationError("input scaler and network disagree on input_dim.")

    @property
    def input_dim(self) -> int:
        return self.net.input_dim

    @property
    def parameter_count(self) -> int:
        return self.net.parameter_count

    @property
    def macs_per_row(self) -> int:
        return self.net.macs_per_row


@dataclass(frozen=True)
class CombinedPrediction:
    """A prediction and its error bar, in target units."""

    value: float
    error_bar: float


@dataclass(frozen=True)
class CombinedOutput:
    """Column-wise predictions and error bars for a batch of rows."""

    value: numpy.ndarray
    error_bar: numpy.ndarray

    def __len__(self) -> int:
        return len(self.value)

    def rows(self) -> List[CombinedPrediction]:
        return [
            CombinedPrediction(float(vv), float(ee))
            for vv, ee in zip(self.value, self.error_bar)
        ]


def train_model_b(
    beta: Dataset,
    config: MLPConfig,
    sigma_floor: float = SIGMA_FLOOR,
) -> DistilledModel:
    """Fits the error-bar network on the labelled augmented data.

    A new min-max scaler is fitted on ``beta.features``; the network is trained
    on the rescaled features and the error bars in target units.

    """

    if beta.n_rows < 1:
        raise ValidationError("cannot train Model B on an empty dataset.")
    if numpy.any(beta.targets < 0):
        raise ValidationError("error-bar targets must be non-negative.")

    scaler = fit_scaler(beta)
    net, _ = train_mlp(scaler.transform(beta.features), beta.targets, config)

    return DistilledModel(net=net, input_scaler=scaler, sigma_floor=sigma_floor)


def predict_error_bar(b: DistilledModel, X: numpy.ndarray) -> numpy.ndarray:
    """Error bars for rows already in the scaled space of the original data."""

    X = numpy.asarray(X, dtype=numpy.float64)
    if X.ndim != 2 or X.shape[1] != b.input_dim:
        raise ValidationError(
            f"Model B expects {b.input_dim} input columns, got shape {X.shape}."
        )

    raw = b.net.predict(b.input_scaler.transform(X))
    return numpy.maximum(raw, b.sigma_floor)


def predict_combined_arrays(
    a: MLPModel,
    b: DistilledModel,
    s_alpha: MinMaxScaler,
    X_raw: numpy.ndarray,
) -> CombinedOutput:
    """Like `.predict_combined` but returns whole columns."""

    if not (a.input_dim == b.input_dim == s_alpha.n_features):
        raise ValidationError(
            "Model A, Model B and the scaler disagree on the number of features."
        )

    X_scaled = s_alpha.transform(X_raw)

    return CombinedOutput(
        value=a.predict(X_scaled),
        error_bar=predict_error_bar(b, X_scaled),
    )


def predict_combined(
    a: MLPModel,
    b: DistilledModel,
    s_alpha: MinMaxScaler,
    X_raw: numpy.ndarray,
) -> List[CombinedPrediction]:
    """Predictions from Model A with error bars from Model B.

    One forward pass of each network per batch; the ensemble is never used.

    """

    return predict_combined_arrays(a, b, s_alpha, X_raw).rows()
