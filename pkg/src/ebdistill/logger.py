#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: logger.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

import contextlib
import copy
import datetime
import logging
import os
import re
import sys
import traceback
import warnings

from typing import Any, Dict, Iterator, List, Optional, Union, cast

from pygments import highlight
from pygments.formatters import TerminalFormatter
from pygments.lexers import get_lexer_by_name
from pythonjsonlogger.json import JsonFormatter
from rich.console import Console
from rich.logging import RichHandler
from rich.text import Text
from rich.theme import Theme

from .exceptions import StageError
from .utils import Timer


__all__ = ["get_logger", "PipelineLogger", "StageSummary"]


WARNING_RE = re.compile(r"^(.*?):\s*?(\w*?Warning): (.*)")

#: Extra record attributes copied into the JSON log.
JSON_EXTRAS = ("stage", "elapsed", "status")


def get_exception_formatted(tp, value, tb):
    """Adds colours to tracebacks."""

    tbtext = "".join(traceback.format_exception(tp, value, tb))
    lexer = get_lexer_by_name("pytb", stripall=True)
    formatter = TerminalFormatter()
    return highlight(tbtext, lexer, formatter)


class StreamFormatter(logging.Formatter):
    """Plain console formatter that prefixes the level, ``[INFO]: message``."""

    base_fmt = "%(message)s"

    def __init__(self, fmt=base_fmt):
        logging.Formatter.__init__(self, fmt)

    def format(self, record):
        record_cp = copy.copy(record)
        record_cp.msg = f"[{record_cp.levelname}]: {record_cp.msg}"

        return logging.Formatter.format(self, record_cp)


class FileFormatter(logging.Formatter):
    """Formatter for the human-readable log file."""

    base_fmt = "%(asctime)s - %(levelname)s - %(message)s"
    ansi_escape = re.compile(r"\x1b[^m]*m")

    def __init__(self, fmt=base_fmt):
        logging.Formatter.__init__(self, fmt)

    def format(self, record):
        # Copy the record so that the other handlers see it unchanged.
        record_cp = copy.copy(record)

        record_cp.msg = self.ansi_escape.sub("", str(record_cp.msg))
        args = cast(List[str], record_cp.args)

        # Warnings captured with logging.captureWarnings arrive in record.args
        # as "<path>: <category>: message". Reorganise into a single line.
        if record_cp.levelno == logging.WARNING and args and len(args) > 0:
            match = WARNING_RE.match(str(args[0]))
            if match:
                message = "{1} - {2} [{0}]".format(*match.groups())
                record_cp.args = tuple([message] + list(args[1:]))

        return logging.Formatter.format(self, record_cp)


class PipelineJsonFormatter(JsonFormatter):
    """JSON-lines formatter. Stage records also carry ``stage`` and ``elapsed``."""

    def add_fields(self, log_record, record, message_dict):
        super().add_fields(log_record, record, message_dict)

        if not log_record.get("timestamp"):
            log_record["timestamp"] = datetime.datetime.fromtimestamp(
                record.created,
                tz=datetime.timezone.utc,
            ).strftime("%Y-%m-%dT%H:%M:%S.%fZ")

        log_record["type"] = "log"
        log_record["level"] = record.levelname
        log_record["logger"] = record.name

        for extra in JSON_EXTRAS:
            if hasattr(record, extra):
                log_record[extra] = getattr(record, extra)

        if record.exc_info:
            log_record["error"] = {
                "type": record.exc_info[0].__name__ if record.exc_info[0] else None,
                "trace": message_dict.get("exc_info"),
            }


class CustomRichHandler(RichHandler):
    """A ``RichHandler`` that shows the level as ``[LEVEL]``."""

    def get_level_text(self, record):
        level_name = record.levelname
        return Text.styled(
            f"[{level_name}]".ljust(9),
            f"logging.level.{level_name.lower()}",
        )


class StageSummary:
    """Collects the one-line summary that a pipeline stage reports on exit."""

    def __init__(self):
        self.text = "done"

    def __call__(self, text: str):
        self.text = text


class PipelineLogger(logging.Logger):
    """Logger for the distillation pipeline.

    Parameters
    ----------
    name : str
        The name of the logger.

    """

    def __init__(self, name: str):
        # Placeholder for the last error-level message emitted.
        self._last_error: Optional[str] = None

        super().__init__(name)

    def init(
        self,
        use_rich_handler: bool = False,
        log_level: int = logging.INFO,
        capture_exceptions: bool = False,
        capture_warnings: bool = True,
        rich_handler_kwargs: Dict[str, Any] = {},
    ):
        """Initialise the logger.

        Parameters
        ----------
        use_rich_handler
            If `True`, uses the ``rich`` library ``RichHandler`` for
            console logging.
        log_level
            The initial logging level for the console handler.
        capture_exceptions
            If `True`, overrides the exception hook and redirects all
            exceptions to the logging system.
        capture_warnings
            Whether to capture warnings and redirect them to the log.
        rich_handler_kwargs
            Keyword arguments to pass to the ``RichHandler`` on init.

        """

        self.use_rich_handler = use_rich_handler
        self.warnings_logger = logging.getLogger("py.warnings")

        self.setLevel(logging.DEBUG)

        # Clear handlers before recreating.
        for handler in self.handlers.copy():
            if handler in self.warnings_logger.handlers:
                self.warnings_logger.removeHandler(handler)
            self.removeHandler(handler)
            if isinstance(handler, logging.FileHandler):
                handler.close()

        self.sh: logging.Handler
        if use_rich_handler:
            console = Console(
                stderr=True,
                theme=Theme(
                    {
                        "logging.level.debug": "magenta",
                        "logging.level.warning": "yellow",
                        "logging.level.critical": "red",
                        "logging.level.error": "red",
                    }
                ),
            )
            self.sh = CustomRichHandler(
                level=log_level,
                console=console,
                **rich_handler_kwargs,
            )
        else:
            self.sh = logging.StreamHandler()
            self.sh.setFormatter(StreamFormatter())

        if capture_exceptions:
            sys.excepthook = self.handle_exceptions

        self.addHandler(self.sh)
        self.sh.setLevel(log_level)

        self.fh: Union[logging.FileHandler, None] = None
        self.log_filename: Union[str, None] = None

        self.jh: Union[logging.FileHandler, None] = None
        self.json_log_filename: Union[str, None] = None

        if capture_warnings:
            self.capture_warnings()

    def handle_exceptions(self, exctype, value, tb):
        """Catches all exceptions and logs them."""

        if self.use_rich_handler:
            self.exception("An exception was raised.", exc_info=(exctype, value, tb))
        else:
            self.error(get_exception_formatted(exctype, value, tb))

    def capture_warnings(self):
        """Redirects `warnings.warn` calls to this logger's handlers."""

        logging.captureWarnings(True)

        # Only add the console handler if none is attached yet, to avoid
        # printing each warning twice.
        for handler in self.warnings_logger.handlers:
            if isinstance(handler, logging.StreamHandler) and not isinstance(
                handler, logging.FileHandler
            ):
                return

        self.warnings_logger.addHandler(self.sh)

    def start_file_logger(
        self,
        path: Union[str, os.PathLike],
        log_level: int = logging.DEBUG,
        mode: str = "w",
        as_json: bool = False,
        with_json: bool = False,
    ):
        """Start file logging.

        Parameters
        ----------
        path
            Path to which to log.
        log_level
            Logging level for the file handler.
        mode
            File mode.
        as_json
            If `True`, outputs a JSON-lines log instead of a human log. The
            extension of ``path`` is replaced with ``.json``.
        with_json
            If `True`, outputs both a human log and a JSON-lines log next to it.

        """

        log_file_path = os.path.realpath(os.path.expanduser(str(path)))
        root, suffix = os.path.splitext(log_file_path)

        json_log_file_path: Union[str, None] = None
        if as_json and suffix != ".json":
            log_file_path = root + ".json"
        elif with_json and not as_json:
            json_log_file_path = root + ".json"

        try:
            os.makedirs(os.path.dirname(log_file_path), exist_ok=True)
            self.fh = logging.FileHandler(log_file_path, mode=mode, encoding="utf-8")
            if json_log_file_path:
                self.jh = logging.FileHandler(
                    json_log_file_path,
                    mode=mode,
                    encoding="utf-8",
                )
        except (IOError, OSError, ValueError) as ee:
            warnings.warn(
                f"log file {log_file_path!r} could not be opened for writing: {ee}",
                RuntimeWarning,
            )
            return

        self.fh.setFormatter(PipelineJsonFormatter() if as_json else FileFormatter())
        self.fh.setLevel(log_level)
        self.addHandler(self.fh)
        self.warnings_logger.addHandler(self.fh)
        self.log_filename = log_file_path

        if self.jh and json_log_file_path:
            self.jh.setFormatter(PipelineJsonFormatter())
            self.jh.setLevel(log_level)
            self.addHandler(self.jh)
            self.warnings_logger.addHandler(self.jh)
            self.json_log_filename = json_log_file_path

    def stop_file_logger(self):
        """Closes and removes the file handlers."""

        for handler in (self.fh, self.jh):
            if handler is None:
                continue
            self.removeHandler(handler)
            if handler in self.warnings_logger.handlers:
                self.warnings_logger.removeHandler(handler)
            handler.close()

        self.fh = self.jh = None
        self.log_filename = self.json_log_filename = None

    @contextlib.contextmanager
    def stage(self, name: str) -> Iterator[StageSummary]:
        """Runs a pipeline stage, logging a one-line summary when it ends.

        The context yields a `.StageSummary`; calling it with a string sets
        the summary. Any exception raised in the block is logged and re-raised
        as a `.StageError` naming the stage.

        Example
        -------
        ::

            with log.stage("train-a") as summary:
                model, report = train_mlp(X, y, config)
                summary(f"final loss {report.final_loss:.4g}")

        """

        summary = StageSummary()
        timer = Timer()

        with timer:
            try:
                yield summary
            except StageError:
                raise
            except Exception as err:
                self.error(
                    f"{name}: failed: {err}",
                    extra={"stage": name, "elapsed": timer.elapsed, "status": "failed"},
                )
                raise StageError(name, err) from err

        self.info(
            f"{name}: {summary.text} ({timer.elapsed:.2f} s)",
            extra={"stage": name, "elapsed": timer.elapsed, "status": "ok"},
        )

    def handle(self, record):
        """Handles a record but first stores it if it is an error."""

        if record.levelno >= logging.ERROR:
            self._last_error = record.getMessage()

        return super().handle(record)

    def get_last_error(self) -> Optional[str]:
        """Returns the last error emitted."""

        return self._last_error

    def set_level(self, level: int):
        """Sets the level of the console handler and the file handlers."""

        for handler in (self.sh, self.fh, self.jh):
            if handler is not None:
                handler.setLevel(level)


def get_logger(
    name: str,
    use_rich_handler: bool = False,
    log_level: int = logging.INFO,
    capture_exceptions: bool = False,
    capture_warnings: bool = True,
    rich_handler_kwargs: Dict[str, Any] = {},
) -> PipelineLogger:
    """Gets or creates a `.PipelineLogger`.

    Parameters
    ----------
    name
        The name of the logger.
    use_rich_handler
        If `True`, uses a slightly customised ``RichHandler`` from the ``rich``
        library for console logging.
    log_level
        The initial logging level for the console handler.
    capture_exceptions
        If `True`, overrides the exception hook and redirects all exceptions to
        the logging system.
    capture_warnings
        Whether to capture warnings and redirect them to the log.
    rich_handler_kwargs
        Keyword arguments to pass to the ``RichHandler`` on init. By default
        ``{"log_time_format": "%X", "show_path": False, "rich_tracebacks": True}``.

    """

    orig_logger = logging.getLoggerClass()
    logging.setLoggerClass(PipelineLogger)

    default_rich_handler_kwargs = {
        "log_time_format": "%X",
        "show_path": False,
        "rich_tracebacks": True,
        "tracebacks_show_locals": False,
    }
    default_rich_handler_kwargs.update(rich_handler_kwargs)

    try:
        log = logging.getLogger(name)
    finally:
        logging.setLoggerClass(orig_logger)

    if not isinstance(log, PipelineLogger):
        raise TypeError(f"logger {name!r} already exists with a different class.")

    log.init(
        use_rich_handler=use_rich_handler,
        log_level=log_level,
        capture_exceptions=capture_exceptions,
        capture_warnings=capture_warnings,
        rich_handler_kwargs=default_rich_handler_kwargs,
    )

    return cast(PipelineLogger, log)
