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

from typing import Any

__all__ = [
    "BodyLoadError",
    "CheckpointError",
    "CheckpointVersionError",
    "ConfigError",
    "InputFileError",
    "NumericError",
    "PosenvsError",
    "PreconditionError",
]


class PosenvsError(Exception):
    pass


class ConfigError(PosenvsError):
    pass


class PreconditionError(PosenvsError, ValueError):
    pass


class InputFileError(PosenvsError):
    pass


class BodyLoadError(PosenvsError):
    """
    Raised when a body asset violates one of the mesh or rig invariants.

    Args:
        invariant: :class:`str`
            Short name of the failing invariant, e.g. "skin weights not normalized".
        detail: :class:`str`
            Where the violation was found.
    """

    def __init__(self, invariant: str, detail: str = "") -> None:
        self.invariant = invariant
        self.detail = detail
        super().__init__(f"{invariant}: {detail}" if detail else invariant)


class CheckpointError(PosenvsError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class NumericError(PosenvsError):
    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None) -> None:
        self.diagnostics = diagnostics or dict()
        super().__init__(message)
