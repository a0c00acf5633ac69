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

from posenvs.lib.core.config import Split
from posenvs.lib.core.errors import InputFileError, PreconditionError
from posenvs.lib.core.utils import load_json, resolve_config
from posenvs.lib.datagen import (
    SceneDataset,
    build_dataset,
    evenly_spaced_views,
    generate_identity,
    identity_splits,
    sample_camera,
    sample_pose,
)

# TEST CASES TINY DATASET START
TINY_DATASET = dict(identities="2", poses="2", views="4", res="32", val_fraction="0", test_fraction="0.5")
# TEST CASES TINY DATASET END

# TEST CASES EVEN VIEWS START
EVEN_VIEWS = [
    [12, 4, [0, 3, 6, 9]],
    [4, 3, [0, 1, 2]],
    [5, 1, [0]],
    [4, 4, [0, 1, 2, 3]],
]
# TEST CASES EVEN VIEWS END


def build_tiny_dataset(root: str, seed: int = 0) -> Path:
    return build_dataset(resolve_config("gen-data", dict(), dict(TINY_DATASET, seed=str(seed))), root)


class DatasetBuildTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.directory = tempfile.TemporaryDirectory()
        cls.root = Path(cls.directory.name) / "first"
        cls.index = load_json(build_tiny_dataset(str(cls.root)))

    @classmethod
    def tearDownClass(cls) -> None:
        cls.directory.cleanup()

    def test_index(self) -> None:
        """Two identities with two poses give four records with one test identity"""
        records = self.index["records"]
        self.assertEqual(len(records), 4)
        self.assertEqual(sorted(record["split"] for record in records), ["test", "test", "train", "train"])
        self.assertEqual(len(list(self.root.rglob("view_*.png"))), 16)

    def test_same_seed_same_bytes(self) -> None:
        """Rebuilding with the same seed reproduces every file hash"""
        other = load_json(build_tiny_dataset(str(Path(self.directory.name) / "second")))
        self.assertEqual(other, self.index)

    def test_other_seed(self) -> None:
        """Another seed gives another dataset"""
        other = load_json(build_tiny_dataset(str(Path(self.directory.name) / "third"), seed=1))
        self.assertNotEqual(other["records"], self.index["records"])

    def test_scene_contents(self) -> None:
        """Views show the body on a white background and positions live in the canonical box"""
        scene = SceneDataset(self.root).scene(0)
        self.assertEqual(scene.rgb.shape, (4, 32, 32, 3))
        for view in range(scene.num_views):
            mask = scene.masks[view]
            self.assertTrue(mask.any())
            self.assertTrue(np.all(scene.rgb[view][~mask] == 1.0))
            self.assertTrue(np.all(np.abs(scene.positions[view][mask]) <= 1.0 + 1e-6))
            self.assertTrue(np.all(scene.positions[view][~mask] == 0.0))

    def test_masks_match_rasterizer(self) -> None:
        """Every stored mask is reproduced from body, pose and camera"""
        dataset = SceneDataset(self.root, verify=True)
        for position in range(len(dataset)):
            dataset.scene(position)

    def test_scene_cache_is_bounded(self) -> None:
        """Only the most recently used scenes stay loaded"""
        dataset = SceneDataset(self.root, cache_size=1)
        first = dataset.scene(0)
        self.assertIs(dataset.scene(0), first)
        dataset.scene(1)
        reloaded = dataset.scene(0)
        self.assertIsNot(reloaded, first)
        np.testing.assert_array_equal(reloaded.rgb, first.rgb)

    def test_splits(self) -> None:
        """Datasets filter records by split and reject empty selections"""
        self.assertEqual(len(SceneDataset(self.root, "test")), 2)
        self.assertEqual(len(SceneDataset(self.root, Split.Train, max_scenes=1)), 1)
        with self.assertRaises(InputFileError):
            SceneDataset(self.root, "val")
        with self.assertRaises(InputFileError):
            SceneDataset(Path(self.directory.name) / "missing")

    def test_other_poses(self) -> None:
        """Poses of the same identity know each other"""
        dataset = SceneDataset(self.root, "train")
        self.assertEqual(dataset.other_poses(0), [1])
        self.assertEqual(dataset.other_poses(1), [0])

    @parameterized.expand([[0.0], [1.0]])
    def test_sample_batch(self, animation_ratio) -> None:
        """Sampled batches have the requested view counts and carry target images"""
        dataset = SceneDataset(self.root, "train")
        batch = dataset.sample_batch(np.random.default_rng(0), 2, 2, 3, animation_ratio)
        self.assertEqual(tuple(batch.input_rgb.shape), (2, 2, 32, 32, 3))
        self.assertEqual(tuple(batch.input_plucker.shape), (2, 2, 32, 32, 6))
        self.assertEqual(tuple(batch.target_positions.shape), (2, 3, 32, 32, 3))
        self.assertEqual(tuple(batch.target_rgb.shape), (2, 3, 32, 32, 3))
        self.assertEqual(tuple(batch.target_masks.shape), (2, 3, 32, 32))
        with self.assertRaises(PreconditionError):
            dataset.sample_batch(np.random.default_rng(0), 1, 5, 1)


class SamplingTest(unittest.TestCase):
    @parameterized.expand(EVEN_VIEWS)
    def test_evenly_spaced_views(self, num_views, count, expected) -> None:
        """Input views spread evenly from view 0"""
        self.assertEqual(evenly_spaced_views(num_views, count).tolist(), expected)

    @parameterized.expand([[4, 0], [4, 5]])
    def test_invalid_view_counts(self, num_views, count) -> None:
        """View counts outside [1, V] are rejected"""
        with self.assertRaises(PreconditionError):
            evenly_spaced_views(num_views, count)

    def test_cameras_on_sphere(self) -> None:
        """Sampled cameras stay inside the radius and altitude ranges"""
        rng = np.random.default_rng(0)
        for _ in range(20):
            camera = sample_camera(rng, (-30.0, 30.0), (2.0, 3.0), 16, 50.0)
            center = camera.center
            radius = np.linalg.norm(center)
            self.assertTrue(2.0 - 1e-9 <= radius <= 3.0 + 1e-9)
            self.assertLessEqual(abs(np.degrees(np.arcsin(center[1] / radius))), 30.0 + 1e-6)
            self.assertEqual((camera.height, camera.width), (16, 16))

    @parameterized.expand([[(10.0, -10.0), (2.0, 3.0)], [(0.0, 0.0), (3.0, 2.0)], [(0.0, 0.0), (0.0, 1.0)]])
    def test_invalid_ranges(self, altitude, radius) -> None:
        """Empty ranges and non-positive radii are rejected"""
        with self.assertRaises(PreconditionError):
            sample_camera(np.random.default_rng(0), altitude, radius)

    def test_pose_bounds(self) -> None:
        """No sampled joint rotation exceeds the angle budget"""
        _, rig, _ = generate_identity(7)
        rng = np.random.default_rng(0)
        for _ in range(10):
            angles = np.linalg.norm(sample_pose(rng, rig, 40.0).joint_rotations, axis=1)
            self.assertTrue(np.all(angles <= np.deg2rad(40.0) + 1e-9))

    def test_identities_are_deterministic(self) -> None:
        """The same identity seed gives the same body and albedo"""
        first, second = generate_identity(3), generate_identity(3)
        self.assertTrue(np.array_equal(first[0].canonical_vertices, second[0].canonical_vertices))
        self.assertTrue(np.array_equal(first[2], second[2]))
        self.assertTrue(np.all((first[2] > 0.0) & (first[2] < 1.0)))

    def test_identity_splits(self) -> None:
        """Split fractions are honoured per identity"""
        splits = identity_splits(np.random.default_rng(0), 8, 0.25, 0.25)
        self.assertEqual(splits.count(Split.Val), 2)
        self.assertEqual(splits.count(Split.Test), 2)
        self.assertEqual(splits.count(Split.Train), 4)
        with self.assertRaises(PreconditionError):
            identity_splits(np.random.default_rng(0), 8, 0.75, 0.5)


if __name__ == "__main__":
    unittest.main()
