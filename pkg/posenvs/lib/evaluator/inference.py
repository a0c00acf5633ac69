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


"""Feed-forward synthesis of target views from a scene's input views."""

import numpy as np
import torch
from loguru import logger

from posenvs.lib.body.proxy import BodyPose, ProxyMesh, SkeletonRig
from posenvs.lib.datagen.dataset import Scene, evenly_spaced_views, stack_views
from posenvs.lib.geometry.camera import Camera
from posenvs.lib.geometry.plucker import plucker_embedding
from posenvs.lib.model.network import PoseViewSynthesizer
from posenvs.lib.render.rasterizer import render_position_map

__all__ = ["TARGET_CHUNK", "render_views", "synthesize", "target_views"]

# target views decoded per forward call; views are independent, so chunking never changes pixels
TARGET_CHUNK = 8


def target_views(mesh: ProxyMesh, rig: SkeletonRig, pose: BodyPose, cameras: list[Camera]) -> dict[str, np.ndarray]:
    """Plücker maps and freshly rasterized position maps and masks of the body under `pose`."""
    rasters = [render_position_map(mesh, rig, pose, camera) for camera in cameras]
    return dict(
        plucker=np.stack([plucker_embedding(camera) for camera in cameras]),
        positions=np.stack([raster.attributes for raster in rasters]),
        masks=np.stack([raster.mask for raster in rasters]),
    )


def synthesize(model: PoseViewSynthesizer, inputs: dict[str, np.ndarray], targets: dict[str, np.ndarray]) -> np.ndarray:
    """
    Predicts every target view of one scene.

    Args:
        model: :class:`PoseViewSynthesizer`
        inputs: :class:`dict`
            Input views as returned by :meth:`Scene.select` (rgb, plucker, positions, masks).
        targets: :class:`dict`
            Target views with plucker, positions and masks; rgb is ignored.

    Returns:
        A :class:`np.ndarray` of M x H x W x 3 float64 values in (0, 1).
    """

    dtype = next(model.parameters()).dtype
    model.eval()
    count = len(targets["plucker"])
    images = list()
    for start in range(0, count, TARGET_CHUNK):
        part = {key: targets[key][start : start + TARGET_CHUNK] for key in ("plucker", "positions", "masks")}
        batch = stack_views([inputs], [part]).to(dtype)
        with torch.no_grad():
            images.append(model(batch)[0].double().numpy())
    return np.concatenate(images, axis=0)


def render_views(
    model: PoseViewSynthesizer,
    scene: Scene,
    cameras: list[Camera],
    input_views: int,
    pose: BodyPose | None = None,
) -> np.ndarray:
    """
    Renders `cameras` from `input_views` evenly spaced views of `scene`, under the scene's own
    pose (reconstruction) or under `pose` (animation).
    """

    mesh, rig = scene.body()
    pose = scene.pose if pose is None else pose
    chosen = evenly_spaced_views(scene.num_views, input_views)
    logger.debug(f"rendering {len(cameras)} views of {scene.directory} from input views {chosen.tolist()}")
    return synthesize(model, scene.select(chosen), target_views(mesh, rig, pose, cameras))
