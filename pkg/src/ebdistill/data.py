#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: data.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

import enum
import os
import pathlib
from dataclasses import dataclass, field, replace

from typing import FrozenSet, Optional, Sequence, Tuple, Union

import numpy
import pandas

from .exceptions import ValidationError
from .streams import StreamKey, make_rng
from .utils import hash_arrays


__all__ = [
    "Space",
    "Dataset",
    "MinMaxScaler",
    "FoldAssignment",
    "load_dataset_csv",
    "load_features_csv",
    "fit_scaler",
    "apply_scaler",
    "invert_scaler",
    "kfold_split",
]


AnyPath = Union[str, os.PathLike]

#: Slack allowed on the [0, 1] range of scaled features.
RANGE_TOLERANCE = 1e-12


def _frozen_array(value, ndim: int, name: str) -> numpy.ndarray:
    array = numpy.array(value, dtype=numpy.float64, copy=True)
    if array.ndim != ndim:
        raise ValidationError(
            f"{name} must have {ndim} dimension(s), got {array.ndim}."
        )
    array.setflags(write=False)
    return array


class Space(str, enum.Enum):
    """The space in which the features of a `.Dataset` live."""

    RAW = "raw"
    SCALED = "scaled"


@dataclass(frozen=True)
class Dataset:
    """A feature matrix, its target vector, and their labels.

    Parameters
    ----------
    features
        A ``(n_rows, n_features)`` array.
    targets
        A ``(n_rows,)`` array.
    feature_names
        The labels of the feature columns.
    target_name
        The label of the target column.
    space_tag
        Whether the features are raw or min-max scaled. Scaled features must lie
        in ``[0, 1]``.

    """

    features: numpy.ndarray
    targets: numpy.ndarray
    feature_names: Tuple[str, ...]
    target_name: str
    space_tag: Space = Space.RAW

    def __post_init__(self):
        features = _frozen_array(self.features, 2, "features")
        targets = _frozen_array(self.targets, 1, "targets")

        object.__setattr__(self, "features", features)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "space_tag", Space(self.space_tag))

        if features.shape[0] != targets.shape[0]:
            raise ValidationError(
                f"features have {features.shape[0]} rows but "
                f"targets have {targets.shape[0]}."
            )

        if len(self.feature_names) != features.shape[1]:
            raise ValidationError(
                f"{len(self.feature_names)} feature names for "
                f"{features.shape[1]} feature columns."
            )

        if not numpy.all(numpy.isfinite(features)):
            row, col = numpy.argwhere(~numpy.isfinite(features))[0]
            raise ValidationError(
                f"non-finite feature at row {row}, column {self.feature_names[col]!r}."
            )

        if not numpy.all(numpy.isfinite(targets)):
            row = int(numpy.argwhere(~numpy.isfinite(targets))[0][0])
            raise ValidationError(
                f"non-finite target at row {row}, column {self.target_name!r}."
            )

        if self.space_tag is Space.SCALED and features.size > 0:
            bad = (features < -RANGE_TOLERANCE) | (features > 1 + RANGE_TOLERANCE)
            if numpy.any(bad):
                row, col = numpy.argwhere(bad)[0]
                raise ValidationError(
                    f"scaled feature {self.feature_names[col]!r} at row {row} "
                    f"is outside [0, 1]: {features[row, col]!r}."
                )

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def select_rows(self, indices: Sequence[int] | numpy.ndarray) -> Dataset:
        """Returns a new dataset with the rows at ``indices``, in that order."""

        indices = numpy.asarray(indices, dtype=numpy.intp)
        return replace(
            self,
            features=self.features[indices],
            targets=self.targets[indices],
        )

    def content_hash(self) -> str:
        """SHA-256 digest of the features and targets."""

        return hash_arrays(self.features, self.targets)

    def to_frame(self) -> pandas.DataFrame:
        """Returns the dataset as a data frame with the target as the last column."""

        frame = pandas.DataFrame(self.features, columns=list(self.feature_names))
        frame[self.target_name] = self.targets
        return frame

    def to_csv(self, path: AnyPath):
        """Writes the dataset to ``path`` using the ingestion CSV schema."""

        self.to_frame().to_csv(path, index=False, encoding="utf-8")


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-column min-max scaling to ``[0, 1]``.

    Degenerate (constant) columns map to 0 and restore the constant on inversion.
    Values outside the fitted range are passed through the affine map unchanged.

    """

    mins: numpy.ndarray
    maxs: numpy.ndarray
    degenerate_cols: FrozenSet[int] = field(default=frozenset())

    def __post_init__(self):
        mins = _frozen_array(self.mins, 1, "mins")
        maxs = _frozen_array(self.maxs, 1, "maxs")

        if mins.shape != maxs.shape:
            raise ValidationError("mins and maxs must have the same length.")
        if numpy.any(mins > maxs):
            raise ValidationError("every minimum must be <= its maximum.")

        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)
        object.__setattr__(
            self,
            "degenerate_cols",
            frozenset(int(col) for col in numpy.flatnonzero(mins == maxs)),
        )

    @property
    def n_features(self) -> int:
        return self.mins.shape[0]

    def _check(self, X: numpy.ndarray) -> numpy.ndarray:
        X = numpy.asarray(X, dtype=numpy.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValidationError(
                f"scaler was fitted on {self.n_features} columns, "
                f"got an array of shape {X.shape}."
            )
        return X

    def _degenerate_mask(self) -> numpy.ndarray:
        return self.mins == self.maxs

    def transform(self, X: numpy.ndarray) -> numpy.ndarray:
        """Scales an array. Out-of-range values are not clamped."""

        X = self._check(X)
        degenerate = self._degenerate_mask()
        span = numpy.where(degenerate, 1.0, self.maxs - self.mins)

        scaled = (X - self.mins) / span
        scaled[:, degenerate] = 0.0
        return scaled

    def inverse_transform(self, X: numpy.ndarray) -> numpy.ndarray:
        """Maps a scaled array back to raw units."""

        X = self._check(X)
        degenerate = self._degenerate_mask()

        raw = self.mins + X * (self.maxs - self.mins)
        raw[:, degenerate] = self.mins[degenerate]
        return raw


@dataclass(frozen=True)
class FoldAssignment:
    """Assignment of each row to one of ``k`` folds."""

    fold_of_row: numpy.ndarray
    k: int

    def __post_init__(self):
        fold_of_row = numpy.array(self.fold_of_row, dtype=numpy.int64, copy=True)
        fold_of_row.setflags(write=False)
        object.__setattr__(self, "fold_of_row", fold_of_row)

    @property
    def sizes(self) -> numpy.ndarray:
        return numpy.bincount(self.fold_of_row, minlength=self.k)

    def split(self, fold: int) -> Tuple[numpy.ndarray, numpy.ndarray]:
        """Returns the ``(train, test)`` row indices for a fold."""

        test = numpy.flatnonzero(self.fold_of_row == fold)
        train = numpy.flatnonzero(self.fold_of_row != fold)
        return train, test


def _read_csv_frame(path: pathlib.Path) -> pandas.DataFrame:
    if not path.exists():
        raise ValidationError(f"CSV file {str(path)!r} does not exist.")

    try:
        return pandas.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
            skipinitialspace=True,
        )
    except (pandas.errors.ParserError, pandas.errors.EmptyDataError) as err:
        raise ValidationError(f"cannot parse {str(path)!r}: {err}") from err


def _numeric_column(
    frame: pandas.DataFrame,
    column: str,
    path: pathlib.Path,
) -> numpy.ndarray:
    values = pandas.to_numeric(frame[column], errors="coerce").to_numpy(
        dtype=numpy.float64
    )

    bad = numpy.flatnonzero(~numpy.isfinite(values))
    if len(bad) > 0:
        row = int(bad[0])
        raise ValidationError(
            f"{path}: cell at row {row} (line {row + 2}), column {column!r} "
            f"is not a finite number: {frame[column].iloc[row]!r}."
        )

    return values


def load_dataset_csv(
    path: AnyPath,
    target_column: str,
    feature_columns: Optional[Sequence[str]] = None,
) -> Dataset:
    """Reads a dataset from a CSV file with a header row.

    Parameters
    ----------
    path
        The path to the CSV file (UTF-8, ``.`` as decimal separator).
    target_column
        The name of the target column.
    feature_columns
        The feature columns, in order. If `None`, all the columns other than the
        target are used, in file order.

    Returns
    -------
    dataset
        A `.Dataset` in raw space with the rows in file order.

    Raises
    ------
    ValidationError
        If the file or a column is missing, or a cell is not a finite number.

    """

    path = pathlib.Path(path)
    frame = _read_csv_frame(path)

    columns = list(frame.columns)
    if target_column not in columns:
        raise ValidationError(f"target column {target_column!r} not found in {path}.")

    if feature_columns is None:
        feature_columns = [col for col in columns if col != target_column]
    else:
        feature_columns = list(feature_columns)
        missing = [col for col in feature_columns if col not in columns]
        if missing:
            raise ValidationError(f"feature columns {missing} not found in {path}.")

    if len(feature_columns) == 0:
        raise ValidationError(f"no feature columns in {path}.")

    numeric = {
        column: _numeric_column(frame, column, path)
        for column in [*feature_columns, target_column]
    }

    features = numpy.column_stack([numeric[col] for col in feature_columns])
    if features.size == 0:
        features = features.reshape(len(frame), len(feature_columns))

    return Dataset(
        features=features,
        targets=numeric[target_column],
        feature_names=tuple(feature_columns),
        target_name=target_column,
        space_tag=Space.RAW,
    )


def load_features_csv(
    path: AnyPath,
    feature_names: Sequence[str],
) -> Tuple[numpy.ndarray, pandas.DataFrame]:
    """Reads raw feature rows whose header must match ``feature_names``.

    Columns may come in any order but the set must match exactly. Returns the
    features in ``feature_names`` order and the parsed frame.

    Raises
    ------
    ValidationError
        If columns are missing or unexpected (both are named), or a cell is not
        a finite number.

    """

    path = pathlib.Path(path)
    frame = _read_csv_frame(path)

    columns = list(frame.columns)
    missing = [col for col in feature_names if col not in columns]
    extra = [col for col in columns if col not in feature_names]
    if missing or extra:
        raise ValidationError(
            f"{path}: columns do not match the model features "
            f"(missing: {missing}, extra: {extra})."
        )

    features = numpy.column_stack(
        [_numeric_column(frame, column, path) for column in feature_names]
    )

    return features.reshape(len(frame), len(feature_names)), frame


def fit_scaler(d: Dataset) -> MinMaxScaler:
    """Fits a `.MinMaxScaler` to the column-wise extrema of a dataset."""

    if d.n_rows < 1:
        raise ValidationError("cannot fit a scaler on an empty dataset.")

    return MinMaxScaler(
        mins=d.features.min(axis=0),
        maxs=d.features.max(axis=0),
    )


def apply_scaler(s: MinMaxScaler, d: Dataset) -> Dataset:
    """Scales the features of a dataset. Targets are left unchanged.

    The result is tagged as scaled, so every value must fall within the fitted
    range; use `.MinMaxScaler.transform` on bare arrays to pass out-of-range
    values through.

    """

    if d.n_features != s.n_features:
        raise ValidationError(
            f"dataset has {d.n_features} columns, scaler has {s.n_features}."
        )

    return replace(d, features=s.transform(d.features), space_tag=Space.SCALED)


def invert_scaler(s: MinMaxScaler, d: Dataset) -> Dataset:
    """Maps a scaled dataset back to raw units."""

    if d.n_features != s.n_features:
        raise ValidationError(
            f"dataset has {d.n_features} columns, scaler has {s.n_features}."
        )

    return replace(d, features=s.inverse_transform(d.features), space_tag=Space.RAW)


def kfold_split(n_rows: int, k: int, seed: int) -> FoldAssignment:
    """Deals shuffled rows into ``k`` folds of near-equal size.

    Rows are permuted with the seeded fold stream and the i-th row of the
    permutation goes to fold ``i % k``, so fold sizes differ by at most one.

    """

    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}.")
    if n_rows < k:
        raise ValidationError(f"cannot split {n_rows} rows into {k} folds.")

    permutation = make_rng(seed, StreamKey.FOLDS).permutation(n_rows)

    fold_of_row = numpy.empty(n_rows, dtype=numpy.int64)
    fold_of_row[permutation] = numpy.arange(n_rows) % k

    return FoldAssignment(fold_of_row=fold_of_row, k=k)
