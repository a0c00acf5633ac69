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
from posenvs.lib.evaluator.evaluator import run_eval, write_report

__all__ = ["EvalCommand"]


class EvalCommand(Command):
    name = "eval"
    description = "Score a checkpoint on a dataset split; writes a JSON report, a table and a plot."

    def run(self, config: dict[str, Any], out: Path) -> ExitCode:
        self.require(config, "checkpoint")
        report = run_eval(
            config["checkpoint"],
            config["dataset"],
            split=config["split"],
            mode=config["mode"],
            views=config["eval_views"],
            perceptual=config["perceptual"],
            perceptual_seed=config["perceptual_seed"],
            vgg_weights=config["vgg_weights"],
            max_scenes=config["max_scenes"],
            baseline=config["baseline"],
        )
        write_report(report, out)
        logger.info("\n" + report.to_table())
        return ExitCode.Success
