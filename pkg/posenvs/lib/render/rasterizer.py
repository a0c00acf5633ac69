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
A z-buffered software rasterizer for per-vertex attributes.

Coverage is decided at pixel centres only, triangles are two-sided, and attributes are
interpolated with perspective-correct barycentric weights. On equal depth the triangle with
the lower index wins.
"""

from dataclasses import dataclass

import numpy as np

from posenvs.lib.body.proxy import BodyPose, ProxyMesh, SkeletonRig
from posenvs.lib.body.skinning import pose_mesh
from posenvs.lib.core.config import BACKGROUND_ATTRIBUTE, NEAR_PLANE
from posenvs.lib.core.errors import PreconditionError
from posenvs.lib.geometry.camera import Camera

__all__ = ["RasterOutput", "project_vertices", "rasterize_attributes", "render_position_map"]


@dataclass(frozen=True, eq=False)
class RasterOutput:
    attributes: np.ndarray  # H x W x K, background filled
    mask: np.ndarray  # H x W, True where a triangle covers the pixel centre
    depth: np.ndarray  # H x W camera-space z, inf at background
    triangle_ids: np.ndarray  # H x W winning triangle index, -1 at background

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def width(self) -> int:
        return self.mask.shape[1]


def project_vertices(vertices: np.ndarray, camera: Camera) -> tuple[np.ndarray, np.ndarray]:
    """Image-plane coordinates (x right, y down, in pixels) and camera-space depth of every vertex."""
    local = camera.world_to_camera(vertices)
    depth = local[:, 2]
    projected = local @ camera.intrinsics.T
    with np.errstate(divide="ignore", invalid="ignore"):
        screen = projected[:, :2] / projected[:, 2:3]
    return screen, depth


def _edge(a: np.ndarray, b: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    return (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0])


def rasterize_attributes(
    vertices: np.ndarray, triangles: np.ndarray, attributes: np.ndarray, camera: Camera
) -> RasterOutput:
    """
    Rasterizes a triangle mesh and interpolates one attribute vector per vertex.

    Args:
        vertices: :class:`np.ndarray`
            World-space vertex positions, N_V x 3.
        triangles: :class:`np.ndarray`
            Vertex indices, N_F x 3. An empty array renders an empty frame.
        attributes: :class:`np.ndarray`
            Per-vertex attributes, N_V x K.
        camera: :class:`Camera`

    Returns:
        A :class:`RasterOutput`. Triangles with a vertex at or in front of the near plane are
        skipped.
    """

    vertices = np.asarray(vertices, dtype=np.float64)
    triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    attributes = np.asarray(attributes, dtype=np.float64)
    if attributes.ndim == 1:
        attributes = attributes[:, None]
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise PreconditionError(f"vertices must be N_V x 3, got {vertices.shape}")
    if attributes.shape[0] != vertices.shape[0]:
        raise PreconditionError(f"{attributes.shape[0]} attribute rows for {vertices.shape[0]} vertices")
    if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
        raise PreconditionError("triangle index out of range")

    H, W, K = camera.height, camera.width, attributes.shape[1]
    image = np.full((H, W, K), BACKGROUND_ATTRIBUTE, dtype=np.float64)
    depth = np.full((H, W), np.inf)
    ids = np.full((H, W), -1, dtype=np.int64)
    if triangles.size == 0:
        return RasterOutput(image, depth < np.inf, depth, ids)

    screen, z = project_vertices(vertices, camera)
    visible = np.all(z[triangles] > NEAR_PLANE, axis=1)
    for index in np.flatnonzero(visible):
        corners = triangles[index]
        p0, p1, p2 = screen[corners]
        area = _edge(p0, p1, p2[0], p2[1])
        if abs(area) < 1e-12:
            continue

        # pixel (r, c) is covered when its centre (c + 0.5, r + 0.5) lies inside
        xs, ys = screen[corners, 0], screen[corners, 1]
        c0, c1 = max(int(np.ceil(xs.min() - 0.5)), 0), min(int(np.floor(xs.max() - 0.5)), W - 1)
        r0, r1 = max(int(np.ceil(ys.min() - 0.5)), 0), min(int(np.floor(ys.max() - 0.5)), H - 1)
        if c0 > c1 or r0 > r1:
            continue
        py, px = np.meshgrid(np.arange(r0, r1 + 1) + 0.5, np.arange(c0, c1 + 1) + 0.5, indexing="ij")

        # dividing by the signed area makes the test independent of winding
        weights = np.stack([_edge(p1, p2, px, py), _edge(p2, p0, px, py), _edge(p0, p1, px, py)], axis=-1) / area
        inside = np.all(weights >= 0.0, axis=-1)
        if not inside.any():
            continue

        inverse_z = weights / z[corners]
        inverse_depth = inverse_z.sum(axis=-1)
        with np.errstate(divide="ignore"):
            pixel_depth = 1.0 / inverse_depth
        window = depth[r0 : r1 + 1, c0 : c1 + 1]
        closer = inside & (pixel_depth < window)
        if not closer.any():
            continue

        perspective = inverse_z[closer] / inverse_depth[closer][:, None]
        rows, cols = np.nonzero(closer)
        rows, cols = rows + r0, cols + c0
        depth[rows, cols] = pixel_depth[closer]
        ids[rows, cols] = index
        image[rows, cols] = perspective @ attributes[corners]

    return RasterOutput(image, depth < np.inf, depth, ids)


def render_position_map(mesh: ProxyMesh, rig: SkeletonRig, pose: BodyPose, camera: Camera) -> RasterOutput:
    """Rasterizes the posed body with its canonical vertex positions as attributes (K = 3)."""
    posed = pose_mesh(mesh, rig, pose)
    return rasterize_attributes(posed, mesh.triangles, mesh.canonical_vertices, camera)
