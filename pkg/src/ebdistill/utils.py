#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: utils.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

import concurrent.futures
import hashlib
import time

from typing import Callable, Iterable, List, TypeVar

import numpy


__all__ = ["Timer", "parallel_map", "hash_arrays"]


T = TypeVar("T")
R = TypeVar("R")


class Timer:
    """Convenience context manager to time events on a monotonic clock."""

    def __enter__(self):
        self.start = time.perf_counter_ns()
        self.end = None
        return self

    def __exit__(self, *args):
        self.end = time.perf_counter_ns()
        self.interval_ns = self.end - self.start

    @property
    def elapsed_ns(self) -> int:
        if self.end:
            return self.interval_ns

        return time.perf_counter_ns() - self.start

    @property
    def elapsed(self) -> float:
        """Elapsed time in seconds."""

        return self.elapsed_ns / 1e9


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """Maps ``fn`` over ``items``, optionally on a pool of threads.

    Results are returned in the order of ``items`` regardless of scheduling. The
    first exception raised by a job is propagated once all jobs have finished.

    """

    items = list(items)

    if threads < 1:
        raise ValueError("threads must be >= 1.")

    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]

    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, item) for item in items]
        concurrent.futures.wait(futures)

    return [future.result() for future in futures]


def hash_arrays(*arrays: numpy.ndarray) -> str:
    """Returns the SHA-256 digest of the arrays' shapes, dtypes, and bytes."""

    digest = hashlib.sha256()
    for array in arrays:
        array = numpy.ascontiguousarray(array)
        digest.update(str(array.dtype).encode())
        digest.update(repr(array.shape).encode())
        digest.update(array.tobytes())

    return digest.hexdigest()
