#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: streams.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""Named, counter-based random streams.

Every consumer of randomness asks for a generator keyed by a base seed and a
tuple of integer keys, for example ``make_rng(seed, member, BOOTSTRAP)``. The
generators are Philox instances seeded through `numpy.random.SeedSequence`,
so two different key tuples never share a stream and the result of a job does
not depend on which thread runs it or in which order.

"""

from __future__ import annotations

import numpy


__all__ = ["derive_seed", "make_rng", "quantize_scale", "StreamKey"]


class StreamKey:
    """Integer tags that name the substreams used across the package."""

    BOOTSTRAP = 0
    INIT = 1
    SHUFFLE = 2
    AUGMENT = 3
    ALLOCATE = 4
    FOLDS = 5
    SYNTH_FEATURES = 6
    SYNTH_NOISE = 7
    MODEL_A = 8
    ENSEMBLE = 9
    CALIBRATION = 10
    MODEL_B = 11
    EVALUATION = 12
    SYNTHETIC = 13


def _entropy(seed: int, keys: tuple[int, ...]) -> list[int]:
    values = [int(seed), *(int(key) for key in keys)]
    if any(value < 0 for value in values):
        raise ValueError(f"seeds and stream keys must be non-negative, got {values}.")
    return values


def make_rng(seed: int, *keys: int) -> numpy.random.Generator:
    """Returns a Philox generator for the substream ``(seed, *keys)``."""

    sequence = numpy.random.SeedSequence(_entropy(seed, keys))
    return numpy.random.Generator(numpy.random.Philox(sequence))


def derive_seed(seed: int, *keys: int) -> int:
    """Derives a 32-bit integer seed for the substream ``(seed, *keys)``."""

    sequence = numpy.random.SeedSequence(_entropy(seed, keys))
    return int(sequence.generate_state(1, dtype=numpy.uint32)[0])


def quantize_scale(scale_factor: float) -> int:
    """Maps a scale factor to a stable integer key (resolution 1e-9)."""

    return int(round(float(scale_factor) * 1e9))
