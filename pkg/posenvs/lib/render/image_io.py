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

"""
Image files: 8-bit PNGs through Pillow and raw float32 attribute maps.

An attribute map file starts with three little-endian uint32 values H, W, K followed by
H * W * K float32 values in row-major order.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from posenvs.lib.core.errors import InputFileError

__all__ = [
    "linear_to_srgb",
    "load_attribute_map",
    "load_mask",
    "load_png",
    "save_attribute_map",
    "save_mask",
    "save_png",
]

_HEADER = np.dtype("<u4")
_VALUES = np.dtype("<f4")


def linear_to_srgb(image: np.ndarray) -> np.ndarray:
    image = np.clip(image, 0.0, 1.0)
    return np.where(image <= 0.0031308, 12.92 * image, 1.055 * np.power(image, 1.0 / 2.4) - 0.055)


def _quantize(image: np.ndarray) -> np.ndarray:
    return np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_png(image: np.ndarray, path: str | Path, srgb: bool = False) -> None:
    """Writes an H x W x 3 image with values in [0, 1]; `srgb` encodes linear values first."""
    image = np.asarray(image, dtype=np.float64)
    if srgb:
        image = linear_to_srgb(image)
    Image.fromarray(_quantize(image)).save(path)


def load_png(path: str | Path) -> np.ndarray:
    try:
        with Image.open(path) as handle:
            data = np.asarray(handle.convert("RGB"), dtype=np.float64)
    except OSError as error:
        raise InputFileError(f"cannot read image {path}: {error}") from error
    return data / 255.0


def save_mask(mask: np.ndarray, path: str | Path) -> None:
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8)).save(path)


def load_mask(path: str | Path) -> np.ndarray:
    try:
        with Image.open(path) as handle:
            return np.asarray(handle.convert("L")) > 127
    except OSError as error:
        raise InputFileError(f"cannot read mask {path}: {error}") from error


def save_attribute_map(values: np.ndarray, path: str | Path) -> None:
    values = np.asarray(values)
    if values.ndim == 2:
        values = values[..., None]
    header = np.asarray(values.shape, dtype=_HEADER)
    with open(path, "wb") as handle:
        handle.write(header.tobytes())
        handle.write(np.ascontiguousarray(values, dtype=_VALUES).tobytes())


def load_attribute_map(path: str | Path) -> np.ndarray:
    try:
        raw = Path(path).read_bytes()
    except OSError as error:
        raise InputFileError(f"cannot read attribute map {path}: {error}") from error
    if len(raw) < 3 * _HEADER.itemsize:
        raise InputFileError(f"attribute map {path} is truncated")
    height, width, channels = (int(value) for value in np.frombuffer(raw[:12], dtype=_HEADER))
    values = np.frombuffer(raw[12:], dtype=_VALUES)
    if values.size != height * width * channels:
        raise InputFileError(f"attribute map {path} holds {values.size} values, header says {height}x{width}x{channels}")
    return values.reshape(height, width, channels).astype(np.float64)
