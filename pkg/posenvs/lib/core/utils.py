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

import hashlib
import json
import random
from pathlib import Path
from typing import Any

import numpy as np
import torch
from loguru import logger

from posenvs.lib.core.config import CONFIG_FILE_NAME, CONFIG_KEYS, MODEL_KEYS
from posenvs.lib.core.errors import ConfigError

__all__ = [
    "config_digest",
    "dump_json",
    "format_config",
    "load_json",
    "parse_config_file",
    "resolve_config",
    "seed_everything",
    "sha256_file",
    "torch_dtype",
    "write_config",
]


def parse_config_file(path: str | Path) -> dict[str, str]:
    """
    Reads a flat `key=value` file. Blank lines and lines starting with `#` are skipped.

    Raises:
        ConfigError: on unreadable files, malformed lines or unknown keys.
    """

    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as error:
        raise ConfigError(f"cannot read config file {path}: {error}") from error

    values = dict()
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{number}: expected key=value, got {stripped!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{number}: unknown config key {key!r}")
        values[key] = value
    return values


def resolve_config(command: str, file_values: dict[str, str], flag_values: dict[str, Any]) -> dict[str, Any]:
    """
    Resolves the config of one command: defaults < config file < command line flags.

    Keys of the config file that belong to other commands are ignored; keys that no command
    knows were already rejected by :func:`parse_config_file`.
    """

    resolved = dict()
    for key, spec in CONFIG_KEYS.items():
        if command not in spec.commands:
            continue
        value = spec.default_for(command)
        if key in file_values:
            value = file_values[key]
        if flag_values.get(key) is not None:
            value = flag_values[key]
        try:
            resolved[key] = spec.parse(value) if isinstance(value, str) else value
        except (TypeError, ValueError) as error:
            raise ConfigError(f"invalid value for {key!r}: {error}") from error
    unknown = set(flag_values) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return resolved


def _format_value(value: Any) -> str:
    if isinstance(value, tuple):
        return ",".join(str(item) for item in value)
    return str(value)


def format_config(config: dict[str, Any]) -> str:
    return "".join(f"{key}={_format_value(config[key])}\n" for key in sorted(config))


def write_config(config: dict[str, Any], directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / CONFIG_FILE_NAME
    path.write_text(format_config(config), encoding="utf-8")
    return path


def config_digest(config: dict[str, Any]) -> str:
    # only the model-defining keys; output paths and seeds must not change the digest
    subset = {key: config[key] for key in MODEL_KEYS if key in config}
    return hashlib.sha256(format_config(subset).encode("utf-8")).hexdigest()


def seed_everything(seed: int) -> np.random.Generator:
    random.seed(seed)
    torch.manual_seed(seed)
    logger.debug(f"seeded all generators with {seed}")
    return np.random.default_rng(seed)


def torch_dtype(precision: str) -> torch.dtype:
    return torch.float64 if precision == "float64" else torch.float32


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def dump_json(data: Any, path: str | Path) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))
