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

import numpy as np

from posenvs.lib.geometry.camera import Camera, camera_rays

__all__ = ["plucker_embedding", "plucker_from_rays"]


def plucker_from_rays(origins: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """
    Plücker coordinates (d, o x d) of rays given by origins and directions of shape ... x 3.

    The moment does not change when the origin slides along the ray, so any point on the
    ray can be passed as origin.
    """

    directions = directions / np.linalg.norm(directions, axis=-1, keepdims=True)
    moments = np.cross(origins, directions)
    return np.concatenate([directions, moments], axis=-1)


def plucker_embedding(camera: Camera) -> np.ndarray:
    """Per-pixel Plücker map of shape H x W x 6 (channels 0-2 direction, 3-5 moment)."""
    origins, directions = camera_rays(camera)
    return plucker_from_rays(origins, directions)
