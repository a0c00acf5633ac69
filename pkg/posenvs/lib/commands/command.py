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

from posenvs.lib.core.config import CONFIG_KEYS, ExitCode
from posenvs.lib.core.errors import ConfigError

__all__ = ["Command"]


class Command:
    """
    One pipeline command. Subclasses set `name` and `description` and implement :meth:`run`;
    the pipeline resolves the config, writes it to the output directory and then calls
    :meth:`run`.
    """

    name = ""
    description = ""

    @classmethod
    def keys(cls) -> list[str]:
        """The config keys the command reads, in registry order."""
        return [key for key, spec in CONFIG_KEYS.items() if cls.name in spec.commands]

    @staticmethod
    def require(config: dict[str, Any], *keys: str) -> None:
        missing = [key for key in keys if not config.get(key)]
        if missing:
            raise ConfigError(f"missing required option(s): {', '.join('--' + key.replace('_', '-') for key in missing)}")

    def run(self, config: dict[str, Any], out: Path) -> ExitCode:
        raise NotImplementedError
