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


import tempfile
import unittest
from pathlib import Path

import numpy as np
from parameterized import parameterized

from posenvs.lib.body import (
    JOINT_NAMES,
    BodyPose,
    ProxyMesh,
    SkeletonRig,
    build_canonical_body,
    canonicalize_axis_angle,
    load_external_body,
    load_pose,
    pose_mesh,
    rodrigues,
    save_body,
    save_pose,
)
from posenvs.lib.core.errors import BodyLoadError, InputFileError, PreconditionError
from posenvs.lib.core.utils import dump_json


def random_pose(seed: int, num_joints: int, scale: float = 0.6) -> BodyPose:
    rng = np.random.default_rng(seed)
    rotations = rng.normal(size=(num_joints, 3)) * scale
    rotations[0] = 0.0
    return BodyPose(rotations, np.zeros(3))


def two_joint_body() -> tuple[ProxyMesh, SkeletonRig]:
    vertices = np.array([[0.1, 0.0, 0.0], [0.7, 0.1, 0.0], [0.8, -0.1, 0.05]])
    joints = np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]])
    weights = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    return ProxyMesh(vertices, np.array([[0, 1, 2]])), SkeletonRig(joints, np.array([-1, 0]), weights)


# TEST CASES BROKEN BODY FILES START
weights_not_normalized = {"change": "weights", "expected": "skin weights not normalized"}
parent_cycle = {"change": "cycle", "expected": "skeleton not a tree"}
missing_key = {"change": "schema", "expected": "schema violation"}
vertex_outside_box = {"change": "box", "expected": "vertices outside canonical box"}
# TEST CASES BROKEN BODY FILES END


class CanonicalBodyTest(unittest.TestCase):
    def test_deterministic_per_seed(self) -> None:
        """The same seed gives bit-identical bodies"""
        first, second = build_canonical_body(0, 0), build_canonical_body(0, 0)
        self.assertTrue(np.array_equal(first[0].canonical_vertices, second[0].canonical_vertices))
        self.assertTrue(np.array_equal(first[0].triangles, second[0].triangles))
        self.assertTrue(np.array_equal(first[1].skin_weights, second[1].skin_weights))

    @parameterized.expand([[0], [1], [17]])
    def test_invariants(self, seed) -> None:
        """Bodies fit the canonical box, have at least 14 joints and pass validation"""
        mesh, rig = build_canonical_body(seed, 0)
        self.assertLessEqual(np.abs(mesh.canonical_vertices).max(), 1.0)
        self.assertGreaterEqual(rig.num_joints, 14)
        self.assertEqual(rig.num_joints, len(JOINT_NAMES))
        self.assertEqual(len(JOINT_NAMES), 17)
        mesh.validate()
        rig.validate(mesh.num_vertices)

    def test_detail_adds_vertices(self) -> None:
        """A higher subdivision level adds vertices but no joints"""
        coarse_mesh, coarse_rig = build_canonical_body(0, 0)
        fine_mesh, fine_rig = build_canonical_body(0, 1)
        self.assertGreater(fine_mesh.num_vertices, coarse_mesh.num_vertices)
        self.assertEqual(fine_rig.num_joints, coarse_rig.num_joints)


class SkinningTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.mesh, cls.rig = build_canonical_body(3, 0)

    def test_rodrigues(self) -> None:
        """Zero rotation is exactly the identity, others are proper rotations fixing their axis"""
        self.assertTrue(np.array_equal(rodrigues(np.zeros(3)), np.eye(3)))
        axis_angle = np.array([0.3, -1.1, 0.4])
        R = rodrigues(axis_angle)
        self.assertTrue(np.allclose(R @ R.T, np.eye(3)))
        self.assertAlmostEqual(np.linalg.det(R), 1.0)
        self.assertTrue(np.allclose(R @ axis_angle, axis_angle))
        self.assertTrue(np.allclose(rodrigues([0.0, 0.0, np.pi / 2]) @ [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]))

    def test_canonicalize_axis_angle(self) -> None:
        """Angles above pi map to the equivalent rotation with the flipped axis"""
        result = canonicalize_axis_angle(np.array([[1.5 * np.pi, 0.0, 0.0]]))
        self.assertTrue(np.allclose(result, [[-0.5 * np.pi, 0.0, 0.0]]))
        self.assertTrue(np.allclose(rodrigues(result[0]), rodrigues([1.5 * np.pi, 0.0, 0.0])))

    def test_identity_pose_is_exact(self) -> None:
        """The identity pose returns the canonical vertices bit for bit"""
        posed = pose_mesh(self.mesh, self.rig, BodyPose.identity(self.rig.num_joints))
        self.assertTrue(np.array_equal(posed, self.mesh.canonical_vertices))

    def test_root_translation(self) -> None:
        """A pure root translation shifts every vertex"""
        t = np.array([0.3, -0.2, 1.5])
        posed = pose_mesh(self.mesh, self.rig, BodyPose(np.zeros((self.rig.num_joints, 3)), t))
        self.assertTrue(np.allclose(posed, self.mesh.canonical_vertices + t))

    def test_single_joint_oracle(self) -> None:
        """Vertices bound to one joint rotate rigidly about that joint's rest position"""
        mesh, rig = two_joint_body()
        rotations = np.zeros((2, 3))
        rotations[1] = (0.0, 0.0, np.pi / 2)
        posed = pose_mesh(mesh, rig, BodyPose(rotations))
        R = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        expected = (mesh.canonical_vertices[1:] - rig.joints[1]) @ R.T + rig.joints[1]
        self.assertTrue(np.allclose(posed[1:], expected))
        self.assertTrue(np.allclose(posed[0], mesh.canonical_vertices[0]))

    @parameterized.expand([[0], [1], [2]])
    def test_commutes_with_rigid_motion(self, seed) -> None:
        """A root rotation and translation equals rigidly moving the posed body"""
        pose = random_pose(seed, self.rig.num_joints)
        root = np.array([0.2, 0.9, -0.3])
        t = np.array([0.1, 0.0, -0.4])
        moved_rotations = pose.joint_rotations.copy()
        moved_rotations[0] = root
        posed = pose_mesh(self.mesh, self.rig, pose)
        moved = pose_mesh(self.mesh, self.rig, BodyPose(moved_rotations, t))
        R, J0 = rodrigues(root), self.rig.joints[0]
        self.assertTrue(np.allclose(moved, (posed - J0) @ R.T + J0 + t, atol=1e-6))

    def test_inputs_untouched(self) -> None:
        """Posing never mutates the body"""
        vertices, weights = self.mesh.canonical_vertices.copy(), self.rig.skin_weights.copy()
        pose_mesh(self.mesh, self.rig, random_pose(5, self.rig.num_joints))
        self.assertTrue(np.array_equal(vertices, self.mesh.canonical_vertices))
        self.assertTrue(np.array_equal(weights, self.rig.skin_weights))

    def test_dimension_mismatch(self) -> None:
        """A pose with the wrong joint count is rejected"""
        with self.assertRaises(PreconditionError):
            pose_mesh(self.mesh, self.rig, BodyPose.identity(self.rig.num_joints - 1))


class BodyFileTest(unittest.TestCase):
    def setUp(self) -> None:
        self.directory = tempfile.TemporaryDirectory()
        self.root = Path(self.directory.name)
        self.mesh, self.rig = build_canonical_body(1, 0)

    def tearDown(self) -> None:
        self.directory.cleanup()

    def test_round_trip(self) -> None:
        """A saved body loads back with identical arrays"""
        save_body(self.mesh, self.rig, self.root / "mesh.json", self.root / "rig.json")
        mesh, rig = load_external_body(self.root / "mesh.json", self.root / "rig.json")
        self.assertTrue(np.array_equal(mesh.canonical_vertices, self.mesh.canonical_vertices))
        self.assertTrue(np.array_equal(mesh.triangles, self.mesh.triangles))
        self.assertTrue(np.array_equal(rig.joints, self.rig.joints))
        self.assertTrue(np.array_equal(rig.parents, self.rig.parents))
        self.assertTrue(np.array_equal(rig.skin_weights, self.rig.skin_weights))

    @parameterized.expand([[weights_not_normalized], [parent_cycle], [missing_key], [vertex_outside_box]])
    def test_broken_files(self, input_data) -> None:
        """Broken body files fail with the name of the violated invariant"""
        mesh = dict(V=self.mesh.canonical_vertices.tolist(), F=self.mesh.triangles.tolist())
        rig = dict(J=self.rig.joints.tolist(), parents=self.rig.parents.tolist(), W=self.rig.skin_weights.tolist())
        if input_data["change"] == "weights":
            rig["W"][0] = (np.asarray(rig["W"][0]) * 0.9).tolist()
        elif input_data["change"] == "cycle":
            rig["parents"][1], rig["parents"][2] = 2, 1
        elif input_data["change"] == "schema":
            del rig["parents"]
        elif input_data["change"] == "box":
            mesh["V"][0] = [1.5, 0.0, 0.0]
        dump_json(mesh, self.root / "mesh.json")
        dump_json(rig, self.root / "rig.json")
        with self.assertRaises(BodyLoadError) as context:
            load_external_body(self.root / "mesh.json", self.root / "rig.json")
        self.assertEqual(context.exception.invariant, input_data["expected"])

    def test_pose_files(self) -> None:
        """Poses survive their file; a missing pose file is a typed error"""
        pose = random_pose(2, self.rig.num_joints)
        save_pose(pose, self.root / "pose.json")
        loaded = load_pose(self.root / "pose.json")
        self.assertTrue(np.allclose(loaded.joint_rotations, pose.joint_rotations))
        with self.assertRaises(InputFileError):
            load_pose(self.root / "missing.json")


if __name__ == "__main__":
    unittest.main()
