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
The procedural dataset factory: identities, poses, cameras and rendered views.

Layout below the dataset root::

    index.json
    {split}/{identity}/body_mesh.json, body_rig.json
    {split}/{identity}/{pose}/pose.json
    {split}/{identity}/{pose}/view_{k}.png, mask_{k}.png, position_{k}.bin, camera_{k}.json
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger
from tqdm import tqdm

from posenvs.lib.body.loader import save_body, save_pose
from posenvs.lib.body.proxy import JOINT_NAMES, BodyPose, ProxyMesh, SkeletonRig, build_canonical_body
from posenvs.lib.body.skinning import pose_mesh, vertex_normals
from posenvs.lib.core.config import LIGHT_DIRECTION, Split
from posenvs.lib.core.errors import PreconditionError
from posenvs.lib.core.utils import dump_json, sha256_file
from posenvs.lib.geometry.camera import Camera, intrinsics_from_fov, look_at, save_camera
from posenvs.lib.interfaces.records import SceneRecord
from posenvs.lib.render.image_io import save_attribute_map, save_mask, save_png
from posenvs.lib.render.rasterizer import rasterize_attributes
from posenvs.lib.render.shading import lambert_shade

__all__ = [
    "INDEX_FILE",
    "build_dataset",
    "generate_identity",
    "identity_splits",
    "sample_camera",
    "sample_pose",
    "scene_file_names",
]

INDEX_FILE = "index.json"
INDEX_FORMAT = 1
BODY_MESH_FILE = "body_mesh.json"
BODY_RIG_FILE = "body_rig.json"
POSE_FILE = "pose.json"
OPTION_KEYS = (
    "poses", "views", "res", "detail", "altitude_min", "altitude_max", "radius_min", "radius_max", "fov", "max_joint_angle",
)

_HINGE_KNEES = (JOINT_NAMES.index("left_knee"), JOINT_NAMES.index("right_knee"))
_HINGE_ELBOWS = {
    JOINT_NAMES.index("left_elbow"): JOINT_NAMES.index("left_wrist"),
    JOINT_NAMES.index("right_elbow"): JOINT_NAMES.index("right_wrist"),
}
_TORSO = tuple(JOINT_NAMES.index(name) for name in ("spine", "chest", "neck", "head"))


def scene_file_names(view: int) -> dict[str, str]:
    return dict(
        view=f"view_{view}.png",
        mask=f"mask_{view}.png",
        position=f"position_{view}.bin",
        camera=f"camera_{view}.json",
    )


def _check_range(name: str, low: float, high: float) -> None:
    if not low <= high:
        raise PreconditionError(f"empty {name} range [{low}, {high}]")


def sample_camera(
    rng: np.random.Generator,
    altitude_range: tuple[float, float] = (-45.0, 45.0),
    radius_range: tuple[float, float] = (2.0, 3.0),
    resolution: int | tuple[int, int] = 64,
    fov: float = 55.0,
) -> Camera:
    """
    A camera on a sphere around the origin looking at the origin.

    Azimuth is uniform in [0, 360) degrees, altitude (degrees above the horizontal plane) and
    radius are uniform in their ranges.
    """

    _check_range("altitude", *altitude_range)
    _check_range("radius", *radius_range)
    if radius_range[0] <= 0:
        raise PreconditionError(f"camera radius must be positive, got {radius_range}")
    height, width = (resolution, resolution) if isinstance(resolution, int) else resolution
    azimuth = rng.uniform(0.0, 2.0 * np.pi)
    altitude = np.deg2rad(rng.uniform(*altitude_range))
    radius = rng.uniform(*radius_range)
    eye = radius * np.array([np.cos(altitude) * np.sin(azimuth), np.sin(altitude), np.cos(altitude) * np.cos(azimuth)])
    return Camera(intrinsics_from_fov(fov, height, width), look_at(eye), height, width)


def _albedo(vertices: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # a smooth colour field per garment: upper and lower body get their own base colour
    waist = rng.uniform(-0.25, 0.05)
    top, bottom = rng.uniform(0.15, 0.85, size=(2, 3))
    frequencies = rng.normal(0.0, 2.5, size=(4, 3, 3))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(4, 3))
    amplitudes = rng.uniform(0.04, 0.16, size=(4, 3))
    variation = np.einsum("kc,nkc->nc", amplitudes, np.sin(np.einsum("nd,kcd->nkc", vertices, frequencies) + phases))
    base = np.where(vertices[:, 1:2] > waist, top, bottom)
    return np.clip(base + variation, 0.03, 0.97)


def generate_identity(seed: int, detail: int = 0) -> tuple[ProxyMesh, SkeletonRig, np.ndarray]:
    """The body of one identity and its per-vertex albedo; deterministic per seed."""
    mesh, rig = build_canonical_body(seed, detail)
    albedo = _albedo(mesh.canonical_vertices, np.random.default_rng([seed, 1]))
    return mesh, rig, albedo


def _random_axis(rng: np.random.Generator) -> np.ndarray:
    axis = rng.normal(size=3)
    return axis / np.linalg.norm(axis)


def sample_pose(rng: np.random.Generator, rig: SkeletonRig, max_angle: float = 60.0) -> BodyPose:
    """
    A bounded random perturbation of the rest pose.

    The root only turns about the vertical axis, knees and elbows bend about their hinge axis
    in one direction only, torso joints use half the angle budget and all other joints rotate
    about a random axis. No rotation exceeds `max_angle` degrees.
    """

    limit = np.deg2rad(max_angle)
    theta = np.zeros((rig.num_joints, 3))
    for joint in range(rig.num_joints):
        if joint == 0:
            theta[joint] = (0.0, rng.uniform(-limit, limit), 0.0)
        elif joint in _HINGE_KNEES:
            theta[joint] = rng.uniform(0.0, limit) * np.array([1.0, 0.0, 0.0])
        elif joint in _HINGE_ELBOWS:
            forearm = rig.joints[_HINGE_ELBOWS[joint]] - rig.joints[joint]
            hinge = np.cross(forearm, (0.0, 0.0, 1.0))
            theta[joint] = rng.uniform(0.0, limit) * hinge / np.linalg.norm(hinge)
        elif joint in _TORSO:
            theta[joint] = rng.uniform(0.0, 0.5 * limit) * _random_axis(rng)
        else:
            theta[joint] = rng.uniform(0.0, limit) * _random_axis(rng)
    return BodyPose(theta)


def identity_splits(rng: np.random.Generator, identities: int, val_fraction: float, test_fraction: float) -> list[Split]:
    if not (0.0 <= val_fraction and 0.0 <= test_fraction and val_fraction + test_fraction <= 1.0):
        raise PreconditionError(f"split fractions {val_fraction} and {test_fraction} are invalid")
    order = rng.permutation(identities)
    num_test = int(round(identities * test_fraction))
    num_val = int(round(identities * val_fraction))
    splits = [Split.Train] * identities
    for position, identity in enumerate(order):
        if position < num_test:
            splits[identity] = Split.Test
        elif position < num_test + num_val:
            splits[identity] = Split.Val
    return splits


@dataclass(frozen=True)
class _IdentityJob:
    root: Path
    identity: int
    seed: int
    split: Split
    dataset_seed: int
    options: dict[str, Any]


def _render_identity(job: _IdentityJob) -> list[SceneRecord]:
    options = job.options
    mesh, rig, albedo = generate_identity(job.seed, options["detail"])
    identity_dir = Path(job.split.key) / f"{job.identity:04d}"
    (job.root / identity_dir).mkdir(parents=True, exist_ok=True)
    save_body(mesh, rig, job.root / identity_dir / BODY_MESH_FILE, job.root / identity_dir / BODY_RIG_FILE)
    body_files = [identity_dir / BODY_MESH_FILE, identity_dir / BODY_RIG_FILE]

    rng = np.random.default_rng([job.dataset_seed, job.seed])
    records = list()
    for pose_index in range(options["poses"]):
        pose = sample_pose(rng, rig, options["max_joint_angle"])
        posed = pose_mesh(mesh, rig, pose)
        attributes = np.concatenate([mesh.canonical_vertices, vertex_normals(posed, mesh.triangles), albedo], axis=1)
        scene_dir = identity_dir / f"{pose_index:02d}"
        (job.root / scene_dir).mkdir(parents=True, exist_ok=True)
        save_pose(pose, job.root / scene_dir / POSE_FILE)
        written = body_files + [scene_dir / POSE_FILE]

        for view in range(options["views"]):
            camera = sample_camera(
                rng,
                (options["altitude_min"], options["altitude_max"]),
                (options["radius_min"], options["radius_max"]),
                options["res"],
                options["fov"],
            )
            raster = rasterize_attributes(posed, mesh.triangles, attributes, camera)
            rgb = lambert_shade(raster.attributes[..., 3:6], raster.attributes[..., 6:9], raster.mask, LIGHT_DIRECTION)
            names = scene_file_names(view)
            save_png(rgb, job.root / scene_dir / names["view"], srgb=True)
            save_mask(raster.mask, job.root / scene_dir / names["mask"])
            save_attribute_map(raster.attributes[..., :3], job.root / scene_dir / names["position"])
            save_camera(camera, job.root / scene_dir / names["camera"])
            written += [scene_dir / name for name in names.values()]

        records.append(
            SceneRecord(
                split=job.split,
                identity=job.identity,
                identity_seed=job.seed,
                pose=pose_index,
                path=scene_dir.as_posix(),
                num_views=options["views"],
                height=options["res"],
                width=options["res"],
                files={path.as_posix(): sha256_file(job.root / path) for path in written},
            )
        )
    logger.debug(f"rendered identity {job.identity} (seed {job.seed}, {job.split.key})")
    return records


def build_dataset(config: dict[str, Any], root: str | Path) -> Path:
    """
    Generates a full dataset below `root` and writes its index.

    Args:
        config: :class:`dict`
            Resolved gen-data config (seed, identities, poses, views, res, detail, camera
            ranges, fov, max_joint_angle, split fractions, workers).
        root: dataset directory; created when missing.

    Returns:
        The path of the written index file.
    """

    for key in ("identities", "poses", "views", "res"):
        if config[key] < 1:
            raise PreconditionError(f"{key} must be >= 1, got {config[key]}")
    _check_range("altitude", config["altitude_min"], config["altitude_max"])
    _check_range("radius", config["radius_min"], config["radius_max"])

    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config["seed"])
    seeds = rng.choice(2**31 - 1, size=config["identities"], replace=False)
    splits = identity_splits(rng, config["identities"], config["val_fraction"], config["test_fraction"])
    options = {key: config[key] for key in OPTION_KEYS}
    jobs = [
        _IdentityJob(root, identity, int(seeds[identity]), splits[identity], config["seed"], options)
        for identity in range(config["identities"])
    ]

    if config.get("workers", 1) > 1:
        with ProcessPoolExecutor(max_workers=config["workers"]) as pool:
            batches = list(tqdm(pool.map(_render_identity, jobs), total=len(jobs), desc="identities"))
    else:
        batches = [_render_identity(job) for job in tqdm(jobs, desc="identities")]

    records = sorted((record for batch in batches for record in batch), key=lambda record: record.path)
    index = dict(format=INDEX_FORMAT, seed=config["seed"], records=[record.to_json() for record in records])
    path = root / INDEX_FILE
    dump_json(index, path)
    logger.info(f"wrote {len(records)} scene records with {len(records) * config['views']} views to {root}")
    return path
