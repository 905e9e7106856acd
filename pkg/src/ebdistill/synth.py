#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: synth.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

from dataclasses import asdict, dataclass

from typing import Any, Callable, Dict, Literal

import numpy

from .data import Dataset, Space
from .exceptions import ValidationError
from .streams import StreamKey, make_rng


__all__ = ["SyntheticSpec", "generate_synthetic", "FUNCTIONS"]


FunctionTag = Literal["friedman", "linear", "sine-mix"]
NoiseProfile = Literal["homoscedastic", "heteroscedastic"]


def _friedman(X: numpy.ndarray) -> numpy.ndarray:
    return (
        10.0 * numpy.sin(numpy.pi * X[:, 0] * X[:, 1])
        + 20.0 * (X[:, 2] - 0.5) ** 2
        + 10.0 * X[:, 3]
        + 5.0 * X[:, 4]
    )


def _linear(X: numpy.ndarray) -> numpy.ndarray:
    return X.sum(axis=1)


def _sine_mix(X: numpy.ndarray) -> numpy.ndarray:
    return numpy.sin(2.0 * numpy.pi * X[:, 0]) + 0.5 * numpy.cos(
        3.0 * numpy.pi * X[:, 1]
    )


#: Target functions and the number of leading features each one uses.
FUNCTIONS: Dict[str, tuple[Callable[[numpy.ndarray], numpy.ndarray], int]] = {
    "friedman": (_friedman, 5),
    "linear": (_linear, 1),
    "sine-mix": (_sine_mix, 2),
}


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic regression dataset.

    With ``noise="heteroscedastic"`` the noise standard deviation is
    ``noise_level * (0.1 + x_0)``, growing linearly along the first feature.

    """

    n_samples: int = 200
    n_features: int = 10
    function: FunctionTag = "friedman"
    noise: NoiseProfile = "heteroscedastic"
    noise_level: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.function not in FUNCTIONS:
            raise ValidationError(
                f"unknown function {self.function!r}; choose from {sorted(FUNCTIONS)}."
            )
        if self.noise not in ("homoscedastic", "heteroscedastic"):
            raise ValidationError(f"unknown noise profile {self.noise!r}.")
        if self.n_samples < 1:
            raise ValidationError("n_samples must be >= 1.")

        _, n_active = FUNCTIONS[self.function]
        if self.n_features < n_active:
            raise ValidationError(
                f"function {self.function!r} needs at least {n_active} features."
            )
        if self.noise_level < 0:
            raise ValidationError("noise_level must be non-negative.")
        if self.seed < 0:
            raise ValidationError("seed must be non-negative.")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Draws features uniformly in the unit hypercube and noisy targets."""

    function, _ = FUNCTIONS[spec.function]

    X = make_rng(spec.seed, StreamKey.SYNTH_FEATURES).random(
        (spec.n_samples, spec.n_features)
    )
    z = make_rng(spec.seed, StreamKey.SYNTH_NOISE).standard_normal(spec.n_samples)

    if spec.noise == "heteroscedastic":
        scale = spec.noise_level * (0.1 + X[:, 0])
    else:
        scale = numpy.full(spec.n_samples, spec.noise_level)

    return Dataset(
        features=X,
        targets=function(X) + scale * z,
        feature_names=tuple(f"f{ii}" for ii in range(spec.n_features)),
        target_name="y",
        space_tag=Space.RAW,
    )
