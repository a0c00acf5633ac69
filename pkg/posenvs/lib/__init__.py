#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# posenvs - pose-conditioned novel view synthesis for articulated characters
# Copyright (C) 2024 to 2026  the posenvs authors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.

from .core import *
from .geometry import *
from .body import *
from .render import *
from .model import *
from .training import *
from .datagen import *
from .interfaces import *
from .evaluator import *
from .commands import *
