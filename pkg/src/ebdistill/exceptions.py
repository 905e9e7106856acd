#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: exceptions.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations


__all__ = [
    "EBDistillError",
    "ValidationError",
    "TrainingError",
    "BundleError",
    "StageError",
]


class EBDistillError(Exception):
    """Base class for all the errors raised by ``ebdistill``."""

    #: Process exit code used by the command line interface.
    exit_code: int = 2


class ValidationError(EBDistillError, ValueError):
    """Invalid input data, configuration, or schema."""

    exit_code = 1


class TrainingError(EBDistillError, RuntimeError):
    """A model failed to train (non-finite loss, failed member or fold)."""


class BundleError(EBDistillError):
    """A model bundle cannot be written or read back."""


class StageError(EBDistillError):
    """A pipeline stage failed.

    Parameters
    ----------
    stage
        The name of the stage that failed.
    cause
        The original exception.

    """

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause

        super().__init__(f"stage {stage!r} failed: {cause}")

    @property
    def exit_code(self) -> int:  # type: ignore[override]
        return getattr(self.cause, "exit_code", 2)
