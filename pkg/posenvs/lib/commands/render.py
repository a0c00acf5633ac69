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

from loguru import logger

from posenvs.lib.body.loader import load_pose
from posenvs.lib.body.proxy import BodyPose
from posenvs.lib.commands.command import Command
from posenvs.lib.core.config import ExitCode
from posenvs.lib.datagen.dataset import Scene
from posenvs.lib.evaluator.inference import render_views
from posenvs.lib.geometry.camera import Camera, load_cameras
from posenvs.lib.render.image_io import save_attribute_map, save_png
from posenvs.lib.training.checkpoint import load_checkpoint

__all__ = ["AnimateCommand", "RenderCommand"]


class RenderCommand(Command):
    """
    Synthesizes target cameras of a scene under its own pose. The PNGs are quantized to 8 bit;
    the raw predictions are kept next to them as float32 attribute maps.
    """

    name = "render"
    description = "Render novel views of a scene record from a checkpoint."
    prefix = "render"

    def pose(self, config: dict[str, Any]) -> BodyPose | None:
        return None

    def cameras(self, config: dict[str, Any], scene: Scene) -> list[Camera]:
        cameras = load_cameras(config["cameras"]) if config["cameras"] else list(scene.cameras)
        if config["res"] > 0:
            cameras = [camera.resized(config["res"], config["res"]) for camera in cameras]
        return cameras

    def run(self, config: dict[str, Any], out: Path) -> ExitCode:
        self.require(config, "checkpoint", "scene")
        pose = self.pose(config)
        state = load_checkpoint(config["checkpoint"])
        scene = Scene.from_directory(config["scene"])
        images = render_views(state.model, scene, self.cameras(config, scene), config["input_views"], pose)
        for index, image in enumerate(images):
            save_png(image, out / f"{self.prefix}_{index:03d}.png")
            save_attribute_map(image, out / f"{self.prefix}_{index:03d}.bin")
        logger.info(f"wrote {len(images)} {self.prefix} images to {out}")
        return ExitCode.Success


class AnimateCommand(RenderCommand):
    name = "animate"
    description = "Render a scene record driven by another pose."
    prefix = "animate"

    def pose(self, config: dict[str, Any]) -> BodyPose | None:
        self.require(config, "pose_file")
        return load_pose(config["pose_file"])
