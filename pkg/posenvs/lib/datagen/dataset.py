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

import functools
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from loguru import logger

from posenvs.lib.body.loader import load_external_body, load_pose
from posenvs.lib.body.proxy import BodyPose, ProxyMesh, SkeletonRig
from posenvs.lib.core.config import SCENE_CACHE_SIZE, Split
from posenvs.lib.core.errors import InputFileError, PreconditionError
from posenvs.lib.core.utils import load_json
from posenvs.lib.datagen.generator import BODY_MESH_FILE, BODY_RIG_FILE, INDEX_FILE, POSE_FILE, scene_file_names
from posenvs.lib.geometry.camera import Camera, load_camera
from posenvs.lib.geometry.plucker import plucker_embedding
from posenvs.lib.interfaces.records import SceneRecord
from posenvs.lib.model.network import ViewBatch
from posenvs.lib.render.image_io import load_attribute_map, load_mask, load_png
from posenvs.lib.render.rasterizer import render_position_map

__all__ = ["Scene", "SceneDataset", "evenly_spaced_views", "stack_views"]


def evenly_spaced_views(num_views: int, count: int) -> np.ndarray:
    """`count` distinct view indices spread evenly over `num_views` views, starting at 0."""
    if not 1 <= count <= num_views:
        raise PreconditionError(f"cannot pick {count} input views out of {num_views}")
    return np.floor(np.arange(count) * num_views / count).astype(np.int64)


@dataclass(eq=False)
class Scene:
    """All views of one posed identity, loaded into memory."""

    directory: Path
    rgb: np.ndarray  # V x H x W x 3, display-encoded values in [0, 1]
    masks: np.ndarray  # V x H x W
    positions: np.ndarray  # V x H x W x 3 canonical coordinates
    cameras: list[Camera]
    pose: BodyPose

    @property
    def num_views(self) -> int:
        return len(self.cameras)

    @classmethod
    def from_directory(cls, directory: str | Path) -> "Scene":
        directory = Path(directory)
        if not directory.is_dir():
            raise InputFileError(f"scene directory {directory} does not exist")
        count = len(list(directory.glob("camera_*.json")))
        if count == 0:
            raise InputFileError(f"scene directory {directory} holds no views")
        rgb, masks, positions, cameras = list(), list(), list(), list()
        for view in range(count):
            names = scene_file_names(view)
            rgb.append(load_png(directory / names["view"]))
            masks.append(load_mask(directory / names["mask"]))
            positions.append(load_attribute_map(directory / names["position"]))
            cameras.append(load_camera(directory / names["camera"]))
        return cls(directory, np.stack(rgb), np.stack(masks), np.stack(positions), cameras, load_pose(directory / POSE_FILE))

    def body(self) -> tuple[ProxyMesh, SkeletonRig]:
        return load_external_body(self.directory.parent / BODY_MESH_FILE, self.directory.parent / BODY_RIG_FILE)

    def plucker(self, views: np.ndarray) -> np.ndarray:
        return np.stack([plucker_embedding(self.cameras[view]) for view in views])

    def select(self, views: np.ndarray) -> dict[str, np.ndarray]:
        views = np.asarray(views)
        return dict(
            rgb=self.rgb[views],
            plucker=self.plucker(views),
            positions=self.positions[views],
            masks=self.masks[views],
        )

    def verify_masks(self) -> None:
        """Re-rasterizes every view from the stored body, pose and camera and compares masks."""
        mesh, rig = self.body()
        for view, camera in enumerate(self.cameras):
            if not np.array_equal(render_position_map(mesh, rig, self.pose, camera).mask, self.masks[view]):
                raise InputFileError(f"mask {view} of {self.directory} does not match its camera and pose")


def stack_views(inputs: list[dict[str, np.ndarray]], targets: list[dict[str, np.ndarray]]) -> ViewBatch:
    """
    Batches per-scene view selections (see :meth:`Scene.select`) into a ViewBatch.
    Targets without an "rgb" entry leave `target_rgb` empty.
    """
    stack = lambda parts, key: torch.from_numpy(np.stack([part[key] for part in parts]))
    return ViewBatch(
        input_rgb=stack(inputs, "rgb"),
        input_plucker=stack(inputs, "plucker"),
        input_positions=stack(inputs, "positions"),
        input_masks=stack(inputs, "masks"),
        target_plucker=stack(targets, "plucker"),
        target_positions=stack(targets, "positions"),
        target_masks=stack(targets, "masks"),
        target_rgb=stack(targets, "rgb") if all("rgb" in part for part in targets) else None,
    )


class SceneDataset:
    """
    The scene records of one split, read through the dataset index.

    Args:
        root: :class:`str | Path`
            Dataset directory holding index.json.
        split: :class:`Split | str | None`
            Keep only this split; None keeps all records.
        max_scenes: :class:`int`
            Keep only the first records (0 keeps all).
        verify: :class:`bool`
            Re-check every mask against the rasterizer when a scene is loaded.
        cache_size: :class:`int`
            Number of loaded scenes kept in memory, least recently used first out.
    """

    def __init__(
        self,
        root: str | Path,
        split: Split | str | None = None,
        max_scenes: int = 0,
        verify: bool = False,
        cache_size: int = SCENE_CACHE_SIZE,
    ) -> None:
        self.root = Path(root)
        self.verify = verify
        try:
            index = load_json(self.root / INDEX_FILE)
        except (OSError, ValueError) as error:
            raise InputFileError(f"cannot read dataset index in {self.root}: {error}") from error
        if isinstance(split, str):
            split = Split.from_key(split)
        records = [SceneRecord.from_json(record) for record in index.get("records", list())]
        self.records = [record for record in records if split is None or record.split == split]
        if max_scenes > 0:
            self.records = self.records[:max_scenes]
        if not self.records:
            raise InputFileError(f"dataset {self.root} holds no scenes for split {split.key if split else 'any'}")
        self._load = functools.lru_cache(maxsize=cache_size)(self._read_scene)
        self._identities: dict[tuple[Split, int], list[int]] = dict()
        for position, record in enumerate(self.records):
            self._identities.setdefault((record.split, record.identity), list()).append(position)
        logger.debug(f"opened {len(self.records)} scene records in {self.root}")

    def __len__(self) -> int:
        return len(self.records)

    def scene(self, position: int) -> Scene:
        return self._load(position)

    def _read_scene(self, position: int) -> Scene:
        scene = Scene.from_directory(self.root / self.records[position].path)
        if self.verify:
            scene.verify_masks()
        return scene

    def other_poses(self, position: int) -> list[int]:
        record = self.records[position]
        return [other for other in self._identities[(record.split, record.identity)] if other != position]

    def sample_batch(
        self,
        rng: np.random.Generator,
        batch: int,
        input_views: int,
        target_views: int,
        animation_ratio: float = 0.5,
    ) -> ViewBatch:
        """
        Draws `batch` scenes with random input views and target views.

        With probability `animation_ratio` the targets come from another pose of the same
        identity (animation supervision), otherwise from the views of the input pose that are
        not inputs (reconstruction supervision, reusing input views only when too few remain).
        """

        inputs, targets = list(), list()
        for _ in range(batch):
            position = int(rng.integers(len(self.records)))
            scene = self.scene(position)
            if input_views > scene.num_views:
                raise PreconditionError(f"{input_views} input views requested, scenes have {scene.num_views}")
            chosen = np.sort(rng.choice(scene.num_views, size=input_views, replace=False))
            others = self.other_poses(position)
            if others and rng.random() < animation_ratio:
                target_scene = self.scene(others[int(rng.integers(len(others)))])
                candidates = np.arange(target_scene.num_views)
            else:
                target_scene = scene
                remaining = np.setdiff1d(np.arange(scene.num_views), chosen)
                candidates = remaining if len(remaining) >= target_views else np.arange(scene.num_views)
            picked = rng.choice(candidates, size=target_views, replace=len(candidates) < target_views)
            inputs.append(scene.select(chosen))
            targets.append(target_scene.select(picked))
        return stack_views(inputs, targets)
