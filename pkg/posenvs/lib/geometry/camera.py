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
Pinhole cameras and per-pixel rays.

Conventions: right-handed world frame; in the camera frame x points right, y points down and
the camera looks down +z. Pixel (row, col) has its centre at (col + 0.5, row + 0.5) in image
coordinates.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from posenvs.lib.core.errors import InputFileError, PreconditionError
from posenvs.lib.core.utils import dump_json, load_json

__all__ = [
    "Camera",
    "camera_rays",
    "intrinsics_from_fov",
    "load_camera",
    "load_cameras",
    "look_at",
    "pixel_ray",
    "save_camera",
]


@dataclass(frozen=True, eq=False)
class Camera:
    intrinsics: np.ndarray
    extrinsics: np.ndarray
    height: int
    width: int
    tolerance: float = field(default=1e-6, repr=False)

    def __post_init__(self) -> None:
        K = np.asarray(self.intrinsics, dtype=np.float64).reshape(3, 3)
        w2c = np.asarray(self.extrinsics, dtype=np.float64).reshape(4, 4)
        object.__setattr__(self, "intrinsics", K)
        object.__setattr__(self, "extrinsics", w2c)
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "width", int(self.width))

        if self.height <= 0 or self.width <= 0:
            raise PreconditionError(f"camera resolution must be positive, got {self.height}x{self.width}")
        R = w2c[:3, :3]
        if not np.allclose(R @ R.T, np.eye(3), atol=self.tolerance) or abs(np.linalg.det(R) - 1.0) > self.tolerance:
            raise PreconditionError("camera rotation is not orthonormal with determinant +1")
        if not np.allclose(w2c[3], (0.0, 0.0, 0.0, 1.0)):
            raise PreconditionError("camera extrinsics must be a rigid 4x4 transform")
        if K[0, 0] <= 0 or K[1, 1] <= 0:
            raise PreconditionError("focal lengths must be strictly positive")
        if not (0.0 <= K[0, 2] <= self.width and 0.0 <= K[1, 2] <= self.height):
            raise PreconditionError("principal point outside of the image")

    @property
    def rotation(self) -> np.ndarray:
        return self.extrinsics[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.extrinsics[:3, 3]

    @property
    def center(self) -> np.ndarray:
        """The camera centre in world coordinates."""
        return -self.rotation.T @ self.translation

    def resized(self, height: int, width: int) -> "Camera":
        """The same camera with its intrinsics scaled to another resolution."""
        scale = np.diag([width / self.width, height / self.height, 1.0])
        return Camera(scale @ self.intrinsics, self.extrinsics, height, width)

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        return points @ self.rotation.T + self.translation

    def to_json(self) -> dict[str, Any]:
        return dict(
            K=[float(value) for value in self.intrinsics.reshape(-1)],
            w2c=[float(value) for value in self.extrinsics.reshape(-1)],
            H=self.height,
            W=self.width,
        )

    @classmethod
    def from_json(cls, record: dict[str, Any]) -> "Camera":
        try:
            K = np.asarray(record["K"], dtype=np.float64)
            w2c = np.asarray(record["w2c"], dtype=np.float64)
            height, width = int(record["H"]), int(record["W"])
        except (KeyError, TypeError, ValueError) as error:
            raise InputFileError(f"malformed camera record: {error}") from error
        if K.size != 9 or w2c.size != 16:
            raise InputFileError("camera record needs 9 intrinsics and 16 extrinsics values")
        return cls(K.reshape(3, 3), w2c.reshape(4, 4), height, width)


def intrinsics_from_fov(fov_degrees: float, height: int, width: int) -> np.ndarray:
    focal = 0.5 * height / np.tan(0.5 * np.deg2rad(fov_degrees))
    return np.array([[focal, 0.0, 0.5 * width], [0.0, focal, 0.5 * height], [0.0, 0.0, 1.0]])


def look_at(eye: np.ndarray, target: np.ndarray = np.zeros(3), up: np.ndarray = np.array([0.0, 1.0, 0.0])) -> np.ndarray:
    """World-to-camera extrinsics of a camera at `eye` whose optical axis passes through `target`."""
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, up)
    if np.linalg.norm(right) < 1e-9:
        right = np.cross(forward, np.array([0.0, 0.0, 1.0]))
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    R = np.stack([right, down, forward])
    w2c = np.eye(4)
    w2c[:3, :3] = R
    w2c[:3, 3] = -R @ eye
    return w2c


def _check_pixel(camera: Camera, row: int, col: int) -> None:
    if not (0 <= row < camera.height and 0 <= col < camera.width):
        raise PreconditionError(f"pixel ({row}, {col}) outside of {camera.height}x{camera.width} image")


def pixel_ray(camera: Camera, pixel: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """
    The world-space ray through the centre of one pixel.

    Args:
        camera: :class:`Camera`
        pixel: :class:`tuple[int, int]`
            (row, col) index of the pixel.

    Returns:
        (origin, direction) with a unit direction.
    """

    row, col = pixel
    _check_pixel(camera, row, col)
    local = np.linalg.solve(camera.intrinsics, np.array([col + 0.5, row + 0.5, 1.0]))
    direction = camera.rotation.T @ local
    return camera.center, direction / np.linalg.norm(direction)


def camera_rays(camera: Camera) -> tuple[np.ndarray, np.ndarray]:
    """Origins and unit directions of all pixels, each of shape H x W x 3."""
    rows, cols = np.meshgrid(np.arange(camera.height), np.arange(camera.width), indexing="ij")
    pixels = np.stack([cols + 0.5, rows + 0.5, np.ones_like(rows, dtype=np.float64)], axis=-1)
    local = pixels @ np.linalg.inv(camera.intrinsics).T
    directions = local @ camera.rotation
    directions /= np.linalg.norm(directions, axis=-1, keepdims=True)
    origins = np.broadcast_to(camera.center, directions.shape).copy()
    return origins, directions


def save_camera(camera: Camera, path: str | Path) -> None:
    dump_json(camera.to_json(), path)


def load_camera(path: str | Path) -> Camera:
    try:
        record = load_json(path)
    except (OSError, ValueError) as error:
        raise InputFileError(f"cannot read camera file {path}: {error}") from error
    return Camera.from_json(record)


def load_cameras(path: str | Path) -> list[Camera]:
    """Reads either a single camera record or a JSON list of them."""
    try:
        records = load_json(path)
    except (OSError, ValueError) as error:
        raise InputFileError(f"cannot read camera file {path}: {error}") from error
    if isinstance(records, dict):
        records = [records]
    return [Camera.from_json(record) for record in records]
