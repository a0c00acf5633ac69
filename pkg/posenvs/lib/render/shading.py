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

from posenvs.lib.body.proxy import BodyPose, ProxyMesh, SkeletonRig
from posenvs.lib.body.skinning import pose_mesh, vertex_normals
from posenvs.lib.core.config import BACKGROUND_RGB, LAMBERT_AMBIENT
from posenvs.lib.core.errors import PreconditionError
from posenvs.lib.geometry.camera import Camera
from posenvs.lib.render.rasterizer import RasterOutput, rasterize_attributes

__all__ = ["lambert_shade", "shade_rgb"]


def lambert_shade(normals: np.ndarray, albedo: np.ndarray, mask: np.ndarray, light_dir: np.ndarray) -> np.ndarray:
    """
    Lambertian shading with an ambient floor: max(n . l, ambient) * albedo, clipped to [0, 1].

    Args:
        normals: :class:`np.ndarray`
            Interpolated (not necessarily unit) normals, H x W x 3.
        albedo: :class:`np.ndarray`
            Interpolated albedo, H x W x 3.
        mask: :class:`np.ndarray`
            Covered pixels; all others become white.
        light_dir: :class:`np.ndarray`
            Direction towards the light.
    """

    light = np.asarray(light_dir, dtype=np.float64)
    light = light / np.linalg.norm(light)
    lengths = np.linalg.norm(normals, axis=-1, keepdims=True)
    unit = normals / np.maximum(lengths, 1e-12)
    intensity = np.maximum(unit @ light, LAMBERT_AMBIENT)
    shaded = np.clip(intensity[..., None] * albedo, 0.0, 1.0)
    return np.where(mask[..., None], shaded, BACKGROUND_RGB)


def shade_rgb(
    mesh: ProxyMesh, rig: SkeletonRig, pose: BodyPose, camera: Camera, albedo: np.ndarray, light_dir: np.ndarray
) -> RasterOutput:
    """Renders the posed body with per-vertex albedo; the attributes of the result are linear RGB."""
    albedo = np.asarray(albedo, dtype=np.float64)
    if albedo.shape != (mesh.num_vertices, 3):
        raise PreconditionError(f"albedo must be {mesh.num_vertices} x 3, got {albedo.shape}")
    posed = pose_mesh(mesh, rig, pose)
    normals = vertex_normals(posed, mesh.triangles)
    raster = rasterize_attributes(posed, mesh.triangles, np.concatenate([normals, albedo], axis=1), camera)
    rgb = lambert_shade(raster.attributes[..., :3], raster.attributes[..., 3:], raster.mask, light_dir)
    return RasterOutput(rgb, raster.mask, raster.depth, raster.triangle_ids)
