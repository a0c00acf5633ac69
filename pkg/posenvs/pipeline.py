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


import argparse
import sys
from pathlib import Path

from loguru import logger

from posenvs.lib.commands import AnimateCommand, Command, EvalCommand, GenDataCommand, GradcheckCommand, RenderCommand, TrainCommand
from posenvs.lib.core.config import CONFIG_KEYS, ExitCode
from posenvs.lib.core.errors import ConfigError, NumericError, PosenvsError
from posenvs.lib.core.utils import parse_config_file, resolve_config, write_config

__all__ = ["Pipeline"]


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


class Pipeline:
    """Registry of the commands and the command line front end that drives them."""

    def __init__(self) -> None:
        self.commands: dict[str, Command] = dict()
        self.add_command(GenDataCommand)
        self.add_command(TrainCommand)
        self.add_command(RenderCommand)
        self.add_command(AnimateCommand)
        self.add_command(EvalCommand)
        self.add_command(GradcheckCommand)

    def add_command(self, command: type[Command]) -> None:
        if command.name in self.commands:
            raise ValueError(f"command {command.name!r} is registered twice")
        self.commands[command.name] = command()

    def parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="posenvs",
            description="Pose-conditioned novel view synthesis: data generation, training, rendering and evaluation.",
        )
        subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
        for name, command in self.commands.items():
            sub = subparsers.add_parser(name, help=command.description, description=command.description)
            sub.add_argument("--config", default=None, help="Flat key=value config file; flags override it")
            for key in command.keys():
                spec = CONFIG_KEYS[key]
                sub.add_argument(_flag(key), dest=key, default=None, metavar="VALUE", help=f"{spec.help} (default: {spec.default_for(name)})")
        return parser

    def resolve(self, name: str, args: argparse.Namespace) -> dict:
        file_values = parse_config_file(args.config) if args.config else dict()
        flags = {key: value for key, value in vars(args).items() if key not in ("command", "config")}
        return resolve_config(name, file_values, flags)

    def run(self, argv: list[str] | None = None) -> int:
        """Parses `argv`, runs one command and returns its exit code."""
        args = self.parser().parse_args(argv)
        try:
            config = self.resolve(args.command, args)
            logger.remove()
            logger.add(sys.stderr, level=config["log_level"])
            out = Path(config["out"])
            write_config(config, out)
            logger.info(f"{args.command}: resolved config written to {out}")
            return int(self.commands[args.command].run(config, out))
        except ConfigError as error:
            logger.error(f"config error: {error}")
            return int(ExitCode.ConfigError)
        except NumericError as error:
            logger.error(f"numeric failure: {error}")
            return int(ExitCode.NumericFailure)
        except (PosenvsError, OSError) as error:
            logger.error(f"{type(error).__name__}: {error}")
            return int(ExitCode.Failure)
        except Exception as error:
            logger.exception(f"unexpected {type(error).__name__}: {error}")
            return int(ExitCode.Failure)
