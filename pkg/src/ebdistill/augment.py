#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: augment.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""Synthetic features sampled in clamped hypercubes around the scaled data.

Generated rows are produced in fixed-size chunks. Chunk ``c`` draws from the
substream ``(seed, c)``, so the rows of a smaller set are always a prefix of the
rows of a larger set with the same seed, and chunks can be generated on any
number of threads with identical output.

"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

from typing import Literal, Sequence, Union

import numpy
import pandas

from .data import Dataset, Space
from .ensemble import EnsembleModel, label_error_bars
from .exceptions import ValidationError
from .streams import StreamKey, make_rng
from .utils import parallel_map


__all__ = [
    "AugmentationConfig",
    "AugmentedSet",
    "generate_augmented_features",
    "build_beta_dataset",
    "export_augmented_csv",
]


AllocationMode = Literal["round-robin", "random"]

#: Rows generated per random substream.
CHUNK_SIZE = 4096

#: Largest scale factor accepted.
MAX_SCALE_FACTOR = 0.5


@dataclass(frozen=True)
class AugmentationConfig:
    """Parameters of the hypercube sampling.

    Parameters
    ----------
    scale_factor
        Half-width ``s`` of the hypercube, in ``[0, 0.5]``.
    n_total
        Total number of rows, including the original ones.
    seed
        Seed of the sampling streams.
    allocation
        How generated rows are assigned to original rows: ``round-robin`` cycles
        through the original rows in order, ``random`` draws them uniformly.

    """

    scale_factor: float
    n_total: int
    seed: int = 0
    allocation: AllocationMode = "round-robin"

    def __post_init__(self):
        if not 0.0 <= self.scale_factor <= MAX_SCALE_FACTOR:
            raise ValidationError(
                f"scale factor {self.scale_factor} is outside the supported range "
                "(0.001 to 0.5; 0 is accepted for testing)."
            )
        if self.n_total < 1:
            raise ValidationError(f"n_total must be >= 1, got {self.n_total}.")
        if self.allocation not in ("round-robin", "random"):
            raise ValidationError(f"invalid allocation mode {self.allocation!r}.")
        if self.seed < 0:
            raise ValidationError("seed must be non-negative.")


@dataclass(frozen=True)
class AugmentedSet:
    """Original rows followed by the generated rows."""

    X_beta: numpy.ndarray = field(repr=False)
    origin_row: numpy.ndarray = field(repr=False)
    is_original: numpy.ndarray = field(repr=False)

    def __post_init__(self):
        for name, dtype in [
            ("X_beta", numpy.float64),
            ("origin_row", numpy.int64),
            ("is_original", numpy.bool_),
        ]:
            array = numpy.array(getattr(self, name), dtype=dtype, copy=True)
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def n_rows(self) -> int:
        return self.X_beta.shape[0]

    @property
    def n_original(self) -> int:
        return int(self.is_original.sum())

    def truncate(self, n: int) -> AugmentedSet:
        """Returns the first ``n`` rows, which must include all original rows."""

        if n < self.n_original or n > self.n_rows:
            raise ValidationError(
                f"cannot truncate {self.n_rows} rows "
                f"({self.n_original} original) to {n}."
            )

        return replace(
            self,
            X_beta=self.X_beta[:n],
            origin_row=self.origin_row[:n],
            is_original=self.is_original[:n],
        )


def _generate_chunk(
    X_beta0: numpy.ndarray,
    cfg: AugmentationConfig,
    chunk: int,
    n_new: int,
) -> tuple[numpy.ndarray, numpy.ndarray]:
    n_original, n_features = X_beta0.shape

    first = chunk * CHUNK_SIZE
    n_rows = min(CHUNK_SIZE, n_new - first)

    if cfg.allocation == "round-robin":
        origin = (first + numpy.arange(n_rows)) % n_original
    else:
        allocate = make_rng(cfg.seed, StreamKey.ALLOCATE, chunk)
        origin = allocate.integers(0, n_original, size=n_rows)

    rng = make_rng(cfg.seed, StreamKey.AUGMENT, chunk)
    scale = cfg.scale_factor
    offsets = rng.uniform(-scale, scale, size=(n_rows, n_features))

    if cfg.scale_factor == 0:
        rows = X_beta0[origin].copy()
    else:
        rows = numpy.clip(X_beta0[origin] + offsets, 0.0, 1.0)

    return rows, origin


def generate_augmented_features(
    X_beta0: numpy.ndarray,
    cfg: AugmentationConfig,
    threads: int = 1,
) -> AugmentedSet:
    """Samples ``cfg.n_total - n_original`` rows around the scaled points ``X_beta0``.

    Each generated component is drawn uniformly from ``[x_j - s, x_j + s]`` around
    the component of its origin row and clamped to ``[0, 1]``. The output starts
    with the original rows, unchanged.

    """

    X_beta0 = numpy.asarray(X_beta0, dtype=numpy.float64)

    if X_beta0.ndim != 2 or X_beta0.shape[0] < 1:
        raise ValidationError("X_beta0 must be a non-empty 2D array.")
    if numpy.any(X_beta0 < 0.0) or numpy.any(X_beta0 > 1.0):
        raise ValidationError("augmentation seed points must lie in [0, 1].")

    n_original = X_beta0.shape[0]
    if cfg.n_total < n_original:
        raise ValidationError(
            f"n_total={cfg.n_total} is smaller than the {n_original} original rows."
        )

    n_new = cfg.n_total - n_original
    n_chunks = -(-n_new // CHUNK_SIZE)

    chunks = parallel_map(
        lambda chunk: _generate_chunk(X_beta0, cfg, chunk, n_new),
        range(n_chunks),
        threads=threads,
    )

    X_beta = numpy.vstack([X_beta0, *(rows for rows, _ in chunks)])
    origin_row = numpy.concatenate(
        [numpy.arange(n_original), *(origin for _, origin in chunks)]
    )
    is_original = numpy.arange(cfg.n_total) < n_original

    return AugmentedSet(X_beta=X_beta, origin_row=origin_row, is_original=is_original)


def build_beta_dataset(
    aug: AugmentedSet,
    e: EnsembleModel,
    feature_names: Sequence[str] | None = None,
) -> Dataset:
    """Labels the augmented features with the ensemble's calibrated error bars."""

    if aug.X_beta.shape[1] != e.input_dim:
        raise ValidationError(
            f"augmented features have {aug.X_beta.shape[1]} columns, "
            f"the ensemble expects {e.input_dim}."
        )

    if feature_names is None:
        feature_names = [f"x{ii}" for ii in range(e.input_dim)]

    return Dataset(
        features=aug.X_beta,
        targets=label_error_bars(e, aug.X_beta),
        feature_names=tuple(feature_names),
        target_name="sigma_A",
        space_tag=Space.SCALED,
    )


def export_augmented_csv(
    aug: AugmentedSet,
    beta: Dataset,
    path: Union[str, os.PathLike],
):
    """Writes feature columns, ``origin_row``, ``is_original`` and ``sigma_A``."""

    if beta.n_rows != aug.n_rows:
        raise ValidationError("augmented set and labelled dataset differ in length.")

    frame = pandas.DataFrame(aug.X_beta, columns=list(beta.feature_names))
    frame["origin_row"] = aug.origin_row
    frame["is_original"] = aug.is_original.astype(int)
    frame[beta.target_name] = beta.targets

    frame.to_csv(path, index=False, encoding="utf-8")
