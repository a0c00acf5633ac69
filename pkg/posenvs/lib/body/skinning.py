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
from posenvs.lib.core.errors import PreconditionError

__all__ = ["pose_mesh", "rodrigues", "skinning_transforms", "vertex_normals"]


def _skew(vector: np.ndarray) -> np.ndarray:
    x, y, z = vector
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rodrigues(axis_angle: np.ndarray) -> np.ndarray:
    """Rotation matrix of an axis-angle vector; exactly the identity for the zero vector."""
    axis_angle = np.asarray(axis_angle, dtype=np.float64)
    angle = np.linalg.norm(axis_angle)
    if angle == 0.0:
        return np.eye(3)
    K = _skew(axis_angle / angle)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def skinning_transforms(rig: SkeletonRig, pose: BodyPose) -> tuple[np.ndarray, np.ndarray]:
    """
    Forward kinematics over the joint tree.

    Every joint transform maps a rest-space point to its posed position assuming the point is
    rigidly bound to that joint: A_j(x) = A_parent(R_j (x - J_j) + J_j).

    Returns:
        Rotations (N_J x 3 x 3) and translations (N_J x 3) of the skinning transforms.
    """

    joints = rig.joints * pose.shape_scale
    rotations = np.zeros((rig.num_joints, 3, 3))
    translations = np.zeros((rig.num_joints, 3))
    for index in rig.order():
        local = rodrigues(pose.joint_rotations[index])
        local_t = joints[index] - local @ joints[index]
        parent = int(rig.parents[index])
        if parent < 0:
            rotations[index], translations[index] = local, local_t
        else:
            rotations[index] = rotations[parent] @ local
            translations[index] = rotations[parent] @ local_t + translations[parent]
    return rotations, translations


def pose_mesh(mesh: ProxyMesh, rig: SkeletonRig, pose: BodyPose) -> np.ndarray:
    """
    Linear blend skinning of the canonical vertices.

    Args:
        mesh: :class:`ProxyMesh`
        rig: :class:`SkeletonRig`
        pose: :class:`BodyPose`

    Returns:
        Posed vertices of shape N_V x 3. The inputs are never modified.
    """

    if pose.joint_rotations.shape[0] != rig.num_joints:
        raise PreconditionError(f"pose has {pose.joint_rotations.shape[0]} joints, rig has {rig.num_joints}")
    if rig.skin_weights.shape != (mesh.num_vertices, rig.num_joints):
        raise PreconditionError(f"skin weights {rig.skin_weights.shape} do not match mesh and rig")

    rest = mesh.canonical_vertices * pose.shape_scale
    rotations, translations = skinning_transforms(rig, pose)
    # blended displacement instead of blended position: the identity pose stays exact
    # even when a weight row sums to 1 only up to rounding
    moved = np.einsum("jab,nb->nja", rotations - np.eye(3), rest) + translations[None]
    displacement = np.einsum("nj,nja->na", rig.skin_weights, moved)
    return rest + displacement + pose.root_translation


def vertex_normals(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Area weighted unit vertex normals; triangles are assumed to wind outwards."""
    corners = vertices[triangles]
    face_normals = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    normals = np.zeros_like(vertices)
    for k in range(3):
        np.add.at(normals, triangles[:, k], face_normals)
    lengths = np.linalg.norm(normals, axis=-1, keepdims=True)
    return normals / np.maximum(lengths, 1e-12)
