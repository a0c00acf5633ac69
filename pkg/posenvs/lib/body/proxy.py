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
The procedural stand-in for a parametric human body: a watertight capsule-and-sphere
humanoid in a canonical A-pose, its skeleton and its skinning weights.
"""

from dataclasses import dataclass, field

import numpy as np

from posenvs.lib.core.errors import BodyLoadError, PreconditionError

__all__ = [
    "BodyPose",
    "JOINT_NAMES",
    "JOINT_PARENTS",
    "ProxyMesh",
    "SkeletonRig",
    "build_canonical_body",
    "canonicalize_axis_angle",
    "triangle_areas",
]

JOINT_NAMES = (
    "pelvis",
    "spine",
    "chest",
    "neck",
    "head",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_hip",
    "right_knee",
    "right_ankle",
)
JOINT_PARENTS = (-1, 0, 1, 2, 3, 2, 5, 6, 2, 8, 9, 0, 11, 12, 0, 14, 15)

_ROOT_SENTINEL = -1
_SKIN_SIGMA = 0.045
_BODY_EXTENT = 0.95


def triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    corners = vertices[triangles]
    return 0.5 * np.linalg.norm(np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]), axis=-1)


def canonicalize_axis_angle(rotations: np.ndarray) -> np.ndarray:
    """Maps axis-angle vectors to the equivalent vector with magnitude in [0, pi]."""
    rotations = np.array(rotations, dtype=np.float64, copy=True)
    angles = np.linalg.norm(rotations, axis=-1)
    for index in np.flatnonzero(angles > np.pi):
        axis = rotations[index] / angles[index]
        angle = np.fmod(angles[index], 2.0 * np.pi)
        if angle > np.pi:
            axis, angle = -axis, 2.0 * np.pi - angle
        rotations[index] = axis * angle
    return rotations


@dataclass(frozen=True, eq=False)
class ProxyMesh:
    canonical_vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "canonical_vertices", np.asarray(self.canonical_vertices, dtype=np.float64))
        object.__setattr__(self, "triangles", np.asarray(self.triangles, dtype=np.int64))

    @property
    def num_vertices(self) -> int:
        return self.canonical_vertices.shape[0]

    def validate(self) -> None:
        V, F = self.canonical_vertices, self.triangles
        if V.ndim != 2 or V.shape[1] != 3 or F.ndim != 2 or F.shape[1] != 3:
            raise BodyLoadError("schema violation", "V must be N_V x 3 and F must be N_F x 3")
        if not np.all(np.isfinite(V)) or np.any(np.abs(V) > 1.0):
            raise BodyLoadError("vertices outside canonical box", "all canonical vertices must lie in [-1, 1]^3")
        if F.size and (F.min() < 0 or F.max() >= V.shape[0]):
            raise BodyLoadError("triangle index out of range")
        if F.size and np.any(triangle_areas(V, F) <= 1e-10):
            raise BodyLoadError("degenerate triangle", f"{int(np.sum(triangle_areas(V, F) <= 1e-10))} triangles")


@dataclass(frozen=True, eq=False)
class SkeletonRig:
    joints: np.ndarray
    parents: np.ndarray
    skin_weights: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "joints", np.asarray(self.joints, dtype=np.float64))
        object.__setattr__(self, "parents", np.asarray(self.parents, dtype=np.int64))
        object.__setattr__(self, "skin_weights", np.asarray(self.skin_weights, dtype=np.float64))

    @property
    def num_joints(self) -> int:
        return self.joints.shape[0]

    def order(self) -> list[int]:
        """Joint indices with every parent listed before its children."""
        children = {index: list() for index in range(self.num_joints)}
        for index, parent in enumerate(self.parents[1:], start=1):
            children[int(parent)].append(index)
        order, stack = list(), [0]
        while stack:
            index = stack.pop()
            order.append(index)
            stack.extend(reversed(children[index]))
        return order

    def validate(self, num_vertices: int | None = None) -> None:
        J, P, W = self.joints, self.parents, self.skin_weights
        if J.ndim != 2 or J.shape[1] != 3 or P.shape != (J.shape[0],) or W.ndim != 2 or W.shape[1] != J.shape[0]:
            raise BodyLoadError("schema violation", "J must be N_J x 3, parents N_J, W N_V x N_J")
        if num_vertices is not None and W.shape[0] != num_vertices:
            raise BodyLoadError("schema violation", f"W has {W.shape[0]} rows for {num_vertices} vertices")
        if np.any(W < 0) or not np.allclose(W.sum(axis=1), 1.0, rtol=0.0, atol=1e-6):
            raise BodyLoadError("skin weights not normalized")
        if P[0] != _ROOT_SENTINEL or np.any(P[1:] < 0) or np.any(P[1:] >= len(P)):
            raise BodyLoadError("skeleton not a tree", "joint 0 must be the only root")
        for start in range(1, len(P)):
            index, steps = start, 0
            while index != 0:
                index = int(P[index])
                steps += 1
                if steps > len(P):
                    raise BodyLoadError("skeleton not a tree", f"cycle through joint {start}")


@dataclass(frozen=True, eq=False)
class BodyPose:
    joint_rotations: np.ndarray
    root_translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    shape_scale: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self) -> None:
        rotations = np.asarray(self.joint_rotations, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "joint_rotations", canonicalize_axis_angle(rotations))
        object.__setattr__(self, "root_translation", np.asarray(self.root_translation, dtype=np.float64).reshape(3))
        object.__setattr__(self, "shape_scale", np.asarray(self.shape_scale, dtype=np.float64).reshape(3))

    @classmethod
    def identity(cls, num_joints: int) -> "BodyPose":
        return cls(np.zeros((num_joints, 3)))

    def to_json(self) -> dict:
        return dict(theta=self.joint_rotations.tolist(), t=self.root_translation.tolist())


def _frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(axis, e1)


def _capsule(a: np.ndarray, b: np.ndarray, radius: float, detail: int) -> tuple[np.ndarray, np.ndarray]:
    """A closed capsule around segment a-b; a sphere when a == b. Triangles wind outwards."""
    segments, cap_rings, body_rings = 8 * 2**detail, 3 * 2**detail, 2 * 2**detail
    length = np.linalg.norm(b - a)
    axis = (b - a) / length if length > 0 else np.array([0.0, 1.0, 0.0])
    e1, e2 = _frame(axis)

    rings = list()  # (centre, ring radius)
    for k in range(1, cap_rings + 1):
        phi = -0.5 * np.pi + 0.5 * np.pi * k / cap_rings
        rings.append((a + radius * np.sin(phi) * axis, radius * np.cos(phi)))
    if length > 0:
        for k in range(1, body_rings):
            rings.append((a + (b - a) * k / body_rings, radius))
        rings.append((b, radius))
    for k in range(1, cap_rings):
        phi = 0.5 * np.pi * k / cap_rings
        rings.append((b + radius * np.sin(phi) * axis, radius * np.cos(phi)))

    theta = 2.0 * np.pi * np.arange(segments) / segments
    circle = np.cos(theta)[:, None] * e1 + np.sin(theta)[:, None] * e2
    vertices = [a - radius * axis]
    for centre, ring_radius in rings:
        vertices.extend(centre + ring_radius * circle)
    vertices.append(b + radius * axis)
    vertices = np.asarray(vertices)

    top = len(vertices) - 1
    triangles = list()
    for j in range(segments):
        triangles.append((0, 1 + (j + 1) % segments, 1 + j))
    for i in range(len(rings) - 1):
        lower, upper = 1 + i * segments, 1 + (i + 1) * segments
        for j in range(segments):
            jn = (j + 1) % segments
            triangles.append((lower + j, lower + jn, upper + jn))
            triangles.append((lower + j, upper + jn, upper + j))
    last = 1 + (len(rings) - 1) * segments
    for j in range(segments):
        triangles.append((last + j, last + (j + 1) % segments, top))
    return vertices, np.asarray(triangles, dtype=np.int64)


def _segment_distance(points: np.ndarray, start: np.ndarray, end: np.ndarray) -> np.ndarray:
    direction = end - start
    span = float(direction @ direction)
    t = np.zeros(len(points)) if span == 0 else np.clip((points - start) @ direction / span, 0.0, 1.0)
    return np.linalg.norm(points - (start + t[:, None] * direction), axis=-1)


def _rest_skeleton(rng: np.random.Generator) -> tuple[np.ndarray, dict[str, float]]:
    jitter = lambda spread: 1.0 + rng.uniform(-spread, spread)
    dims = dict(
        shoulder=0.18 * jitter(0.08),
        upper_arm=0.28 * jitter(0.08),
        forearm=0.25 * jitter(0.08),
        hip=0.10 * jitter(0.08),
        thigh=0.42 * jitter(0.06),
        shin=0.42 * jitter(0.06),
        torso_radius=0.15 * jitter(0.15),
        limb_radius=0.05 * jitter(0.15),
        leg_radius=0.07 * jitter(0.15),
        head_radius=0.11 * jitter(0.1),
    )
    arm = np.array([np.sin(np.pi / 4), -np.cos(np.pi / 4), 0.0])  # A-pose: arms 45 degrees below horizontal
    leg = np.array([0.0, -1.0, 0.0])
    joints = np.zeros((len(JOINT_NAMES), 3))
    joints[0] = (0.0, 0.95, 0.0)
    joints[1] = (0.0, 1.10, 0.0)
    joints[2] = (0.0, 1.28, 0.0)
    joints[3] = (0.0, 1.46, 0.0)
    joints[4] = (0.0, 1.55, 0.0)
    for side, (shoulder, elbow, wrist, hip, knee, ankle) in ((1.0, (5, 6, 7, 11, 12, 13)), (-1.0, (8, 9, 10, 14, 15, 16))):
        mirror = np.array([side, 1.0, 1.0])
        joints[shoulder] = (side * dims["shoulder"], 1.42, 0.0)
        joints[elbow] = joints[shoulder] + dims["upper_arm"] * arm * mirror
        joints[wrist] = joints[elbow] + dims["forearm"] * arm * mirror
        joints[hip] = (side * dims["hip"], 0.90, 0.0)
        joints[knee] = joints[hip] + dims["thigh"] * leg
        joints[ankle] = joints[knee] + dims["shin"] * leg
    return joints, dims


def _parts(joints: np.ndarray, dims: dict[str, float]) -> list[tuple[np.ndarray, np.ndarray, float, dict[int, tuple]]]:
    """Capsules (a, b, radius, {joint: bone segment}) making up the body."""
    J = joints
    head_centre = J[4] + np.array([0.0, dims["head_radius"] + 0.01, 0.0])
    parts = [
        (J[0] - [0.0, 0.06, 0.0], J[3] - [0.0, 0.03, 0.0], dims["torso_radius"], {0: (J[0], J[1]), 1: (J[1], J[2]), 2: (J[2], J[3])}),
        (J[3] - [0.0, 0.04, 0.0], J[4] + [0.0, 0.02, 0.0], 0.05, {2: (J[2], J[3]), 3: (J[3], J[4])}),
        (head_centre, head_centre, dims["head_radius"], {4: (J[4], head_centre)}),
    ]
    arm_r, leg_r = dims["limb_radius"], dims["leg_radius"]
    for shoulder, elbow, wrist, hip, knee, ankle in ((5, 6, 7, 11, 12, 13), (8, 9, 10, 14, 15, 16)):
        hand = J[wrist] + 0.07 * (J[wrist] - J[elbow]) / np.linalg.norm(J[wrist] - J[elbow])
        toe = J[ankle] + np.array([0.0, -0.03, 0.13])
        parts += [
            (J[shoulder], J[elbow], arm_r, {2: (J[2], J[shoulder]), shoulder: (J[shoulder], J[elbow]), elbow: (J[elbow], J[wrist])}),
            (J[elbow], J[wrist], 0.85 * arm_r, {shoulder: (J[shoulder], J[elbow]), elbow: (J[elbow], J[wrist]), wrist: (J[wrist], hand)}),
            (hand, hand, 0.9 * arm_r, {wrist: (J[wrist], hand)}),
            (J[hip], J[knee], leg_r, {0: (J[0], J[1]), hip: (J[hip], J[knee]), knee: (J[knee], J[ankle])}),
            (J[knee], J[ankle], 0.8 * leg_r, {hip: (J[hip], J[knee]), knee: (J[knee], J[ankle]), ankle: (J[ankle], toe)}),
            (J[ankle], toe, 0.6 * leg_r, {ankle: (J[ankle], toe)}),
        ]
    return parts


def build_canonical_body(seed: int = 0, detail: int = 0) -> tuple[ProxyMesh, SkeletonRig]:
    """
    Builds the procedural humanoid in canonical A-pose, normalized into [-1, 1]^3.

    Args:
        seed: :class:`int`
            Varies limb lengths and radii; the same seed gives bit-identical output.
        detail: :class:`int`
            Subdivision level; every level doubles ring and segment counts.

    Returns:
        A tuple of :class:`ProxyMesh` and :class:`SkeletonRig` with 17 joints.
    """

    if detail < 0:
        raise PreconditionError(f"detail must be >= 0, got {detail}")
    rng = np.random.default_rng(seed)
    joints, dims = _rest_skeleton(rng)

    vertices, triangles, weights = list(), list(), list()
    offset = 0
    for a, b, radius, bones in _parts(joints, dims):
        part_vertices, part_triangles = _capsule(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64), radius, detail)
        part_weights = np.zeros((len(part_vertices), len(JOINT_NAMES)))
        distances = {joint: _segment_distance(part_vertices, *segment) for joint, segment in bones.items()}
        nearest = np.min(np.stack(list(distances.values())), axis=0)
        for joint, d in distances.items():
            part_weights[:, joint] = np.exp(-(((d - nearest) / _SKIN_SIGMA) ** 2))
        part_weights /= part_weights.sum(axis=1, keepdims=True)
        vertices.append(part_vertices)
        triangles.append(part_triangles + offset)
        weights.append(part_weights)
        offset += len(part_vertices)

    vertices = np.concatenate(vertices)
    low, high = vertices.min(axis=0), vertices.max(axis=0)
    centre = 0.5 * (low + high)
    scale = _BODY_EXTENT / np.max(0.5 * (high - low))

    mesh = ProxyMesh((vertices - centre) * scale, np.concatenate(triangles))
    rig = SkeletonRig((joints - centre) * scale, np.asarray(JOINT_PARENTS), np.concatenate(weights))
    return mesh, rig
