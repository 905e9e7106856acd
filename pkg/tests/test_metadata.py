#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: test_metadata.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import pytest

import ebdistill
from ebdistill.metadata import get_package_version, get_pyproject


def test_get_pyproject(tmp_path):
    package_path = tmp_path / "src" / "package"
    package_path.mkdir(parents=True)

    init_path = package_path / "__init__.py"
    init_path.touch()

    assert get_pyproject(init_path) is None

    (tmp_path / "pyproject.toml").touch()
    assert get_pyproject(package_path) == tmp_path / "pyproject.toml"
    assert get_pyproject(tmp_path) == tmp_path / "pyproject.toml"
    assert get_pyproject(init_path) == tmp_path / "pyproject.toml"


def test_get_package_version_path(tmp_path):
    package_path = tmp_path / "src" / "package"
    package_path.mkdir(parents=True)

    init_path = package_path / "__init__.py"

    assert get_package_version(path=str(init_path)) is None

    pyproject = tmp_path / "pyproject.toml"
    pyproject.write_text(
        """
[project]
name = "test-package"
version = "0.4.6-alpha.0"
"""
    )

    assert get_package_version(path=str(init_path)) == "0.4.6-alpha.0"
    assert get_package_version(path=str(init_path), pep_440=True) == "0.4.6a0"

    assert get_package_version(path=str(init_path), package_name="other") is None


def test_get_package_version_no_project_table(tmp_path):
    (tmp_path / "pyproject.toml").write_text('[tool.ruff]\nline-length = 88\n')

    assert get_package_version(path=str(tmp_path)) is None


def test_get_package_version_name():
    assert get_package_version(package_name="click") is not None

    assert get_package_version(package_name="non-existing-package") is None


def test_get_package_version_no_arguments():
    with pytest.raises(ValueError):
        get_package_version()


def test_package_version():
    assert ebdistill.__version__ != "0.0.0"
