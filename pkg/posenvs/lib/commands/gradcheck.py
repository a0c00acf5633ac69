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
from posenvs.lib.core.utils import dump_json
from posenvs.lib.evaluator.gradcheck import run_gradchecks

__all__ = ["GradcheckCommand"]

GRADCHECK_JSON_FILE = "gradcheck.json"
GRADCHECK_TABLE_FILE = "gradcheck.txt"


class GradcheckCommand(Command):
    name = "gradcheck"
    description = "Compare analytic and finite-difference gradients at 64-bit precision."

    def run(self, config: dict[str, Any], out: Path) -> ExitCode:
        try:
            report = run_gradchecks(config["seed"], config["gradcheck_timeout"])
        except TimeoutError:
            logger.error(f"gradient checks exceeded {config['gradcheck_timeout']} s")
            return ExitCode.Failure
        dump_json(report.to_json(), out / GRADCHECK_JSON_FILE)
        (out / GRADCHECK_TABLE_FILE).write_text(report.to_table(), encoding="utf-8")
        logger.info("\n" + report.to_table())
        return ExitCode.Success if report.passed else ExitCode.Failure
