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


from pathlib import Path
from typing import Any

from loguru import logger

from posenvs.lib.commands.command import Command
from posenvs.lib.core.config import ExitCode
from posenvs.lib.datagen.generator import build_dataset

__all__ = ["GenDataCommand"]


class GenDataCommand(Command):
    name = "gen-data"
    description = "Generate the synthetic multi-view dataset of procedural bodies."

    def run(self, config: dict[str, Any], out: Path) -> ExitCode:
        index = build_dataset(config, out)
        logger.info(f"dataset index written to {index}")
        return ExitCode.Success
