#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: __main__.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from ebdistill.cli import main


if __name__ == "__main__":
    main()
