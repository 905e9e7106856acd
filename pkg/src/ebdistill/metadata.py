#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: metadata.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

import importlib.metadata
import pathlib
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from typing import Optional, Union

import packaging.version


__all__ = ["get_pyproject", "get_package_version"]


def get_pyproject(path: Union[str, pathlib.Path]) -> Union[pathlib.Path, None]:
    """Finds the ``pyproject.toml`` that defines the project containing ``path``.

    Walks up from ``path`` and returns the first ``pyproject.toml`` found, or
    `None`.

    """

    path = pathlib.Path(path).absolute()
    if path.is_file():
        path = path.parent

    for parent in (path, *path.parents):
        candidate = parent / "pyproject.toml"
        if candidate.exists():
            return candidate

    return None


def get_package_version(
    path: Optional[str] = None,
    package_name: Optional[str] = None,
    pep_440: bool = False,
) -> Union[str, None]:
    """Returns the version of a package.

    The installed distribution is queried first. If the package is not
    installed, the ``[project]`` table of the closest ``pyproject.toml`` whose
    project name matches is used, which covers running from a source checkout.

    Parameters
    ----------
    path
        The path relative to which to search for ``pyproject.toml``.
    package_name
        The name of the distribution.
    pep_440
        If `True`, normalises the version string according to PEP 440.

    Returns
    -------
    version
        The version string, or `None` if it cannot be found.

    """

    if not path and not package_name:
        raise ValueError("either path or package_name are needed.")

    version: Union[str, None] = None

    if package_name:
        try:
            version = importlib.metadata.version(package_name)
        except importlib.metadata.PackageNotFoundError:
            pass

    if path and not version:
        pyproject_path = get_pyproject(path)
        if pyproject_path:
            with open(pyproject_path, "rb") as fd:
                project = tomllib.load(fd).get("project", {})
            if package_name is None or project.get("name") == package_name:
                version = project.get("version")

    if version and pep_440:
        version = str(packaging.version.Version(version))

    return version if isinstance(version, str) else None
