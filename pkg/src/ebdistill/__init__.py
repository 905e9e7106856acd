#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: __init__.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

from .logger import get_logger
from .metadata import get_package_version


NAME = "ebdistill"

__version__ = get_package_version(path=__file__, package_name=NAME) or "0.0.0"

log = get_logger(NAME)


from .augment import *
from .bundle import *
from .configuration import *
from .data import *
from .distill import *
from .ensemble import *
from .evaluation import *
from .exceptions import *
from .nn import *
from .synth import *
