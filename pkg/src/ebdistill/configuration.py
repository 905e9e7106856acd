#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: configuration.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""YAML configuration files and the validated run configuration.

Configuration files are YAML (and therefore also accept JSON). A user file is
merged over the packaged defaults in ``etc/ebdistill.yml``; values may expand
environment variables as ``${VARIABLE|default}`` and a file may start with
``#!extends <base.yml>`` to inherit from another file. `RunConfig.from_config`
turns the merged mapping into frozen, validated dataclasses.

"""

from __future__ import annotations

import itertools
import os
import pathlib
import re
import warnings
from copy import deepcopy
from dataclasses import asdict, dataclass, field, fields

from typing import Any, Dict, List, Literal, Optional, Tuple, Type, TypeVar, Union

import yaml
from typing_extensions import Self

from .augment import MAX_SCALE_FACTOR
from .exceptions import ValidationError
from .nn import MLPConfig
from .streams import StreamKey, derive_seed
from .synth import SyntheticSpec


__all__ = [
    "read_yaml_file",
    "merge_config",
    "get_config",
    "RecursiveDict",
    "Configuration",
    "DataConfig",
    "EnsembleConfig",
    "CalibrationConfig",
    "AugmentationSettings",
    "DistillationConfig",
    "EvaluationConfig",
    "BenchmarkConfig",
    "RunConfig",
    "DEFAULT_CONFIG_FILE",
]


ConfigType = Dict[str, Any]
AnyPath = Union[str, pathlib.Path]

#: The packaged defaults.
DEFAULT_CONFIG_FILE = pathlib.Path(__file__).parent / "etc" / "ebdistill.yml"

# Potential locations of the user configuration file, without extension.
DEFAULT_PATHS = [
    "~/.config/{name}/{name}",
    "~/.{name}/{name}",
]

#: Smallest scale factor accepted in a run configuration.
MIN_SCALE_FACTOR = 0.001

env_matcher = re.compile(r"\$\{(.+?)\}")


class ConfigLoader(yaml.SafeLoader):
    """Safe YAML loader that expands ``${VARIABLE|default}``."""


def env_constructor(loader, node):
    """Expands each ``${VARIABLE|default}`` in a scalar."""

    value = loader.construct_scalar(node)

    for matched_value in env_matcher.findall(value):
        var, *fallback = matched_value.split("|", 1)
        default = fallback[0] if fallback else "${" + var + "}"
        value = value.replace("${" + matched_value + "}", os.environ.get(var, default))

    return value


ConfigLoader.add_implicit_resolver("!env", env_matcher, None)
ConfigLoader.add_constructor("!env", env_constructor)


def merge_config(user: ConfigType, default: ConfigType) -> ConfigType:
    """Recursively merges a user configuration over the default one."""

    if isinstance(user, dict) and isinstance(default, dict):
        for kk, vv in default.items():
            if kk not in user:
                user[kk] = deepcopy(vv)
            else:
                user[kk] = merge_config(user[kk], vv)

    return user


class RecursiveDict(Dict[str, Any]):
    """A dictionary in which ``__getitem__`` and ``get`` accept dotted keys.

    ::

        >> dd = RecursiveDict({"model_a": {"epochs": 100}})
        >> dd["model_a.epochs"]
        100
        >> dd["model_a.missing"]
        None

    Nested dictionaries are converted to `.RecursiveDict` on assignment.

    """

    def __init__(self, value: Dict[str, Any] = {}):
        dict.__init__(self)
        for key, item in value.items():
            self[key] = item

    def __getitem__(self, key: str) -> Any:
        return self.get(key)

    def __setitem__(self, key: str, value: Any):
        if isinstance(value, dict) and not isinstance(value, RecursiveDict):
            value = RecursiveDict(value)

        dict.__setitem__(self, key, value)

    def get(self, key: str, default: Any = None) -> Any:
        if dict.__contains__(self, key):
            return dict.get(self, key, default)

        value: Any = self
        for item in key.split("."):
            if not isinstance(value, dict) or item not in value:
                return default
            value = dict.get(value, item)

        return value

    def to_dict(self) -> Dict[str, Any]:
        """Returns a plain nested dictionary."""

        return {
            key: value.to_dict() if isinstance(value, RecursiveDict) else value
            for key, value in self.items()
        }


ReturnClass = TypeVar("ReturnClass", bound=dict)


def read_yaml_file(
    path: AnyPath,
    use_extends: bool = True,
    return_class: Type[ReturnClass] = RecursiveDict,  # type: ignore[assignment]
) -> ReturnClass:
    """Reads a YAML file and returns a dictionary.

    If one of the leading comment lines is ``#!extends <file>``, the file is
    merged over ``<file>`` (relative paths are resolved against the directory
    of ``path``).

    """

    path = pathlib.Path(path)

    try:
        text = path.read_text(encoding="utf-8")
        config = yaml.load(text, Loader=ConfigLoader)
    except OSError as err:
        raise ValidationError(
            f"cannot read configuration file {str(path)!r}: {err}"
        ) from err
    except yaml.YAMLError as err:
        raise ValidationError(f"invalid YAML in {str(path)!r}: {err}") from err

    if config is None:
        config = {}
    if not isinstance(config, dict):
        raise ValidationError(f"configuration file {str(path)!r} is not a mapping.")

    if use_extends:
        for line in text.splitlines():
            line = line.strip()
            if line.startswith("#!extends"):
                base_file = pathlib.Path(line.split()[1])
                if not base_file.is_absolute():
                    base_file = path.parent / base_file
                if not base_file.exists():
                    raise ValidationError(
                        f"cannot find !extends file {str(base_file)!r}."
                    )

                base = read_yaml_file(base_file, use_extends=False, return_class=dict)
                return return_class(merge_config(config, base))

            elif line.startswith("#") or line == "":
                continue

            break

    return return_class(config)


class Configuration(RecursiveDict):
    """A configuration merged from a user file over a base file.

    Parameters
    ----------
    config
        The path to the configuration file or the already parsed configuration
        as a dictionary.
    base_config
        A base configuration or file that the input configuration will update.

    """

    def __init__(
        self,
        config: Optional[Union[AnyPath, ConfigType]] = None,
        base_config: Optional[Union[AnyPath, ConfigType]] = None,
    ):
        self._BASE: ConfigType = {}
        self._BASE_CONFIG_FILE: Optional[str] = None
        self._CONFIG_FILE: Optional[str] = None

        if base_config is not None:
            self._BASE = self._parse_config(base_config)
            if not isinstance(base_config, dict):
                self._BASE_CONFIG_FILE = os.path.realpath(str(base_config))

        super().__init__()
        self.load(config)

    def copy(self):
        return deepcopy(self)

    def __copy__(self):
        return deepcopy(self)

    @staticmethod
    def _parse_config(config: Union[AnyPath, ConfigType]) -> ConfigType:
        if isinstance(config, dict):
            return deepcopy(dict(config))
        elif isinstance(config, (str, pathlib.Path)):
            return read_yaml_file(config, return_class=dict)

        raise ValidationError(f"invalid config of type {type(config)}.")

    def load(self, config: Optional[Union[AnyPath, ConfigType]] = None):
        """Loads a configuration, merged over the base configuration.

        If ``config=None``, the object reverts to the base configuration.

        """

        self.clear()

        if config is None:
            merged = deepcopy(self._BASE)
            self._CONFIG_FILE = self._BASE_CONFIG_FILE
        else:
            merged = merge_config(self._parse_config(config), self._BASE)
            if isinstance(config, (str, pathlib.Path)):
                self._CONFIG_FILE = str(config)
            else:
                self._CONFIG_FILE = None

        for key, value in merged.items():
            self[key] = value

    def reload(self) -> Self:
        """Reads the configuration files again."""

        if self._BASE_CONFIG_FILE is not None:
            self._BASE = self._parse_config(self._BASE_CONFIG_FILE)

        self.load(self._CONFIG_FILE or self.to_dict())

        return self


def get_config(
    name: str,
    config_file: Optional[AnyPath] = None,
    allow_user: bool = True,
    user_path: Optional[AnyPath] = None,
    config_envvar: Optional[str] = None,
) -> Configuration:
    """Returns the configuration merged over the packaged defaults.

    The user configuration file is, in order of precedence, the path in the
    environment variable ``config_envvar`` (``<NAME>_CONFIG_PATH`` by default),
    ``user_path``, or the first of ``~/.config/<name>/<name>.yml`` and
    ``~/.<name>/<name>.yml`` that exists.

    Parameters
    ----------
    name
        The name of the package.
    config_file
        The base configuration file. Defaults to the packaged
        ``etc/ebdistill.yml``.
    allow_user
        If `False`, returns only the base configuration.
    user_path
        The path to the user configuration file. Must exist if given.
    config_envvar
        The environment variable that contains the path to the user
        configuration file.

    """

    config_file = config_file or DEFAULT_CONFIG_FILE

    if allow_user is False:
        return Configuration(base_config=config_file)

    config_envvar = config_envvar or f"{name.upper()}_CONFIG_PATH"

    if user_path is not None:
        user_path = os.path.expanduser(os.path.expandvars(str(user_path)))
        if not os.path.exists(user_path):
            raise ValidationError(f"configuration file {user_path!r} not found.")
    else:
        for path, extension in itertools.product(DEFAULT_PATHS, [".yaml", ".yml"]):
            test_path = os.path.expanduser(path.format(name=name) + extension)
            if os.path.exists(test_path):
                user_path = test_path
                break

    if config_envvar in os.environ:
        custom_config_fn = os.environ[config_envvar]
    elif user_path:
        custom_config_fn = user_path
    else:
        custom_config_fn = None

    return Configuration(custom_config_fn, base_config=config_file)


@dataclass(frozen=True)
class DataConfig:
    """Where the original data come from.

    With ``path=None`` the dataset is generated from the ``synthetic`` section.

    """

    path: Optional[str] = None
    target_column: Optional[str] = None
    feature_columns: Optional[Tuple[str, ...]] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.feature_columns is not None:
            object.__setattr__(self, "feature_columns", tuple(self.feature_columns))

        if self.path is not None:
            if not os.path.exists(self.path):
                raise ValidationError(f"data file {self.path!r} does not exist.")
            if not self.target_column:
                raise ValidationError("data.target_column is required with data.path.")

        if self.name is None:
            name = pathlib.Path(self.path).stem if self.path else "synthetic"
            object.__setattr__(self, "name", name)


@dataclass(frozen=True)
class EnsembleConfig:
    n_members: int = 10
    bootstrap_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_members < 2:
            raise ValidationError(f"n_members must be >= 2, got {self.n_members}.")
        if not 0 < self.bootstrap_fraction:
            raise ValidationError("bootstrap_fraction must be positive.")


@dataclass(frozen=True)
class CalibrationConfig:
    n_bins: int = 10
    n_folds: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.n_bins < 2:
            raise ValidationError(f"n_bins must be >= 2, got {self.n_bins}.")
        if self.n_folds < 2:
            raise ValidationError(f"n_folds must be >= 2, got {self.n_folds}.")


def _check_scale_factor(scale_factor: float, key: str):
    if not MIN_SCALE_FACTOR <= scale_factor <= MAX_SCALE_FACTOR:
        raise ValidationError(
            f"{key}={scale_factor} is outside the supported range (0.001 to 0.5)."
        )


@dataclass(frozen=True)
class AugmentationSettings:
    """The learning-curve grid: scale factors and total sizes."""

    scale_factors: Tuple[float, ...] = (0.01, 0.1, 0.3)
    sizes: Tuple[int, ...] = (1000, 5000, 20000)
    allocation: Literal["round-robin", "random"] = "round-robin"
    seed: int = 0

    def __post_init__(self):
        scale_factors = tuple(float(ss) for ss in self.scale_factors)
        sizes = tuple(sorted(set(int(nn) for nn in self.sizes)))
        object.__setattr__(self, "scale_factors", scale_factors)
        object.__setattr__(self, "sizes", sizes)

        if len(scale_factors) == 0:
            raise ValidationError("augmentation.scale_factors cannot be empty.")
        if len(set(scale_factors)) != len(scale_factors):
            raise ValidationError("augmentation.scale_factors has duplicates.")
        for scale_factor in scale_factors:
            _check_scale_factor(scale_factor, "augmentation.scale_factors")

        if any(size < 1 for size in sizes):
            raise ValidationError("augmentation.sizes must be positive.")
        if self.allocation not in ("round-robin", "random"):
            raise ValidationError(f"invalid allocation mode {self.allocation!r}.")

    def resolve_sizes(self, n_original: int) -> List[int]:
        """Learning-curve sizes for ``n_original`` rows.

        The original size is always the first point. Sizes smaller than the
        original data are dropped with a warning.

        """

        dropped = [size for size in self.sizes if size < n_original]
        if dropped:
            warnings.warn(
                f"dropping learning-curve sizes {dropped} smaller than the "
                f"{n_original} original rows.",
                UserWarning,
            )

        kept = (size for size in self.sizes if size >= n_original)
        return sorted({n_original, *kept})


@dataclass(frozen=True)
class DistillationConfig:
    """The deployed Model B: its scale factor and training-set size.

    The training set is drawn from the augmentation stream of the learning curve
    at ``scale_factor``, so it is always one of the learning-curve sets.

    """

    scale_factor: float = 0.01
    n_total: Optional[int] = None

    def __post_init__(self):
        _check_scale_factor(self.scale_factor, "model_b.scale_factor")
        if self.n_total is not None and self.n_total < 1:
            raise ValidationError("model_b.n_total must be positive.")


@dataclass(frozen=True)
class EvaluationConfig:
    n_folds: int = 5
    n_max_report: Optional[int] = None
    learning_curve: bool = True
    cross_validate_model_a: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_folds < 2:
            raise ValidationError(
                f"evaluation.n_folds must be >= 2, got {self.n_folds}."
            )


@dataclass(frozen=True)
class BenchmarkConfig:
    batch_size: int = 1024
    repeats: int = 5

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValidationError("benchmark.batch_size must be positive.")
        if self.repeats < 3:
            raise ValidationError("benchmark.repeats must be >= 3.")


# Section name, dataclass, and the stream key used to derive its seed.
SECTIONS: List[Tuple[str, Type[Any], Optional[int]]] = [
    ("data", DataConfig, None),
    ("synthetic", SyntheticSpec, StreamKey.SYNTHETIC),
    ("ensemble", EnsembleConfig, StreamKey.ENSEMBLE),
    ("calibration", CalibrationConfig, StreamKey.CALIBRATION),
    ("augmentation", AugmentationSettings, StreamKey.AUGMENT),
    ("evaluation", EvaluationConfig, StreamKey.EVALUATION),
    ("benchmark", BenchmarkConfig, None),
]

DISTILLATION_KEYS = ("scale_factor", "n_total")


def _build(section: str, cls: Type[Any], values: Dict[str, Any]) -> Any:
    known = {ff.name for ff in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ValidationError(f"unknown keys in section {section!r}: {unknown}.")

    try:
        return cls(**values)
    except ValidationError as err:
        raise ValidationError(f"invalid section {section!r}: {err}") from err
    except (TypeError, ValueError) as err:
        raise ValidationError(f"invalid section {section!r}: {err}") from err


def _mlp_config(section: str, values: Dict[str, Any], seed: int) -> MLPConfig:
    values = dict(values)
    if "hidden_widths" in values:
        values["hidden_widths"] = tuple(values["hidden_widths"])

    values.setdefault("init_seed", derive_seed(seed, StreamKey.INIT))
    values.setdefault("shuffle_seed", derive_seed(seed, StreamKey.SHUFFLE))

    return _build(section, MLPConfig, values)


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a pipeline run, validated.

    All seeds are explicit. Section seeds that the configuration leaves as
    ``null`` are derived from the top-level ``seed``.

    """

    seed: int
    data: DataConfig
    synthetic: SyntheticSpec
    model_a: MLPConfig
    ensemble: EnsembleConfig
    calibration: CalibrationConfig
    augmentation: AugmentationSettings
    model_b: MLPConfig
    distillation: DistillationConfig
    evaluation: EvaluationConfig
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)
    output_dir: str = "ebdistill-output"
    threads: int = 1

    def __post_init__(self):
        if self.seed < 0:
            raise ValidationError("seed must be non-negative.")
        if self.threads < 1:
            raise ValidationError("output.threads must be >= 1.")

        n_max_report = self.evaluation.n_max_report
        if n_max_report is not None and n_max_report not in self.augmentation.sizes:
            raise ValidationError(
                f"evaluation.n_max_report={n_max_report} is not one of "
                f"augmentation.sizes {list(self.augmentation.sizes)}."
            )

    def report_size(self, n_original: int) -> int:
        """The learning-curve size reported in the stats table.

        Checked against the sizes that survive `.resolve_sizes` for
        ``n_original`` rows, so that a bad value fails before any training.

        """

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            sizes = self.augmentation.resolve_sizes(n_original)

        n_max_report = self.evaluation.n_max_report or max(sizes)
        if n_max_report not in sizes:
            raise ValidationError(
                f"evaluation.n_max_report={n_max_report} is smaller than the "
                f"{n_original} original rows; learning-curve sizes are {sizes}."
            )

        return n_max_report

    @classmethod
    def from_config(
        cls,
        config: Dict[str, Any],
        seed: Optional[int] = None,
        output_dir: Optional[str] = None,
        threads: Optional[int] = None,
    ) -> RunConfig:
        """Builds and validates a run configuration from a mapping.

        Parameters
        ----------
        config
            The merged configuration, usually a `.Configuration`.
        seed
            Overrides the top-level seed.
        output_dir
            Overrides ``output.directory``.
        threads
            Overrides ``output.threads``.

        Raises
        ------
        ValidationError
            If any key is unknown or any value is invalid. The message names the
            offending section.

        """

        config = deepcopy(dict(config))

        base_seed = config.get("seed", 0) if seed is None else seed
        if not isinstance(base_seed, int) or isinstance(base_seed, bool):
            raise ValidationError(f"seed must be an integer, got {base_seed!r}.")
        if base_seed < 0:
            raise ValidationError("seed must be non-negative.")

        def section(name: str) -> Dict[str, Any]:
            values = config.get(name) or {}
            if not isinstance(values, dict):
                raise ValidationError(f"section {name!r} must be a mapping.")
            return {key: value for key, value in dict(values).items()}

        def section_seed(values: Dict[str, Any], key: int) -> int:
            value = values.pop("seed", None)
            return derive_seed(base_seed, key) if value is None else int(value)

        kwargs: Dict[str, Any] = {"seed": base_seed}

        for name, section_class, key in SECTIONS:
            values = section(name)
            if key is not None:
                values["seed"] = section_seed(values, key)
            kwargs[name] = _build(name, section_class, values)

        model_a = section("model_a")
        kwargs["model_a"] = _mlp_config(
            "model_a",
            model_a,
            section_seed(model_a, StreamKey.MODEL_A),
        )

        model_b = section("model_b")
        distillation = {
            key: model_b.pop(key) for key in DISTILLATION_KEYS if key in model_b
        }
        kwargs["distillation"] = _build("model_b", DistillationConfig, distillation)
        kwargs["model_b"] = _mlp_config(
            "model_b",
            model_b,
            section_seed(model_b, StreamKey.MODEL_B),
        )

        output = section("output")
        unknown = sorted(set(output) - {"directory", "threads"})
        if unknown:
            raise ValidationError(f"unknown keys in section 'output': {unknown}.")

        directory = output_dir or output.get("directory") or "ebdistill-output"
        kwargs["output_dir"] = str(directory)
        kwargs["threads"] = int(threads or output.get("threads") or 1)

        unknown_sections = sorted(
            set(config)
            - {"seed", "model_a", "model_b", "output"}
            - {ss[0] for ss in SECTIONS}
        )
        if unknown_sections:
            raise ValidationError(
                f"unknown configuration sections: {unknown_sections}."
            )

        return cls(**kwargs)

    def snapshot(self) -> Dict[str, Any]:
        """The JSON-serialisable provenance record of the run.

        The output directory and the number of threads are left out since they
        do not affect any result.

        """

        snapshot = asdict(self)
        snapshot.pop("output_dir")
        snapshot.pop("threads")

        return _jsonable(snapshot)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    return value
