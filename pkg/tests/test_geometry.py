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


import unittest

import numpy as np
from parameterized import parameterized

from posenvs.lib.core.errors import PreconditionError
from posenvs.lib.geometry import Camera, camera_rays, intrinsics_from_fov, look_at, pixel_ray, plucker_embedding, plucker_from_rays


def pinhole(height: int = 8, width: int = 8, focal: float = 10.0, eye=(0.0, 0.0, 0.0)) -> Camera:
    extrinsics = np.eye(4)
    extrinsics[:3, 3] = -np.asarray(eye, dtype=np.float64)
    intrinsics = np.array([[focal, 0.0, width / 2], [0.0, focal, height / 2], [0.0, 0.0, 1.0]])
    return Camera(intrinsics, extrinsics, height, width)


def random_camera(seed: int) -> Camera:
    rng = np.random.default_rng(seed)
    eye = rng.normal(size=3)
    eye *= rng.uniform(2.0, 3.0) / np.linalg.norm(eye)
    return Camera(intrinsics_from_fov(rng.uniform(30.0, 70.0), 12, 16), look_at(eye), 12, 16)


# TEST CASES PLUCKER START
ray_through_origin = {"origin": (0.0, 0.0, 0.0), "direction": (0.0, 0.0, 1.0), "expected": (0.0, 0.0, 1.0, 0.0, 0.0, 0.0)}
ray_offset_x = {"origin": (1.0, 0.0, 0.0), "direction": (0.0, 0.0, 1.0), "expected": (0.0, 0.0, 1.0, 0.0, -1.0, 0.0)}
ray_unnormalized = {"origin": (0.0, 2.0, 0.0), "direction": (3.0, 0.0, 0.0), "expected": (1.0, 0.0, 0.0, 0.0, 0.0, -2.0)}
# TEST CASES PLUCKER END

# TEST CASES INVALID CAMERA START
negative_focal = {"intrinsics": [[-1.0, 0, 4], [0, 10, 4], [0, 0, 1]], "rotation": np.eye(3), "size": (8, 8)}
principal_point_outside = {"intrinsics": [[10.0, 0, 9], [0, 10, 4], [0, 0, 1]], "rotation": np.eye(3), "size": (8, 8)}
reflection = {"intrinsics": [[10.0, 0, 4], [0, 10, 4], [0, 0, 1]], "rotation": np.diag([1.0, 1.0, -1.0]), "size": (8, 8)}
zero_resolution = {"intrinsics": [[10.0, 0, 0], [0, 10, 0], [0, 0, 1]], "rotation": np.eye(3), "size": (0, 8)}
# TEST CASES INVALID CAMERA END


class CameraTest(unittest.TestCase):
    def test_center_pixel_looks_along_z(self) -> None:
        """The ray through the principal point of an identity camera points down +z"""
        origin, direction = pixel_ray(pinhole(9, 9), (4, 4))
        self.assertTrue(np.allclose(origin, 0.0))
        self.assertTrue(np.allclose(direction, (0.0, 0.0, 1.0)))

    def test_translation_moves_origin_only(self) -> None:
        """Translating the camera moves the ray origin but keeps the direction"""
        origin, direction = pixel_ray(pinhole(9, 9, eye=(1.0, 0.0, 0.0)), (4, 4))
        self.assertTrue(np.allclose(origin, (1.0, 0.0, 0.0)))
        self.assertTrue(np.allclose(direction, (0.0, 0.0, 1.0)))

    @parameterized.expand([[0], [1], [2]])
    def test_pixel_ray_matches_back_projection(self, seed) -> None:
        """Off-centre rays equal an explicit inverse-intrinsics back-projection rotated to world space"""
        camera = random_camera(seed)
        row, col = 2, 13
        fx, fy, cx, cy = camera.intrinsics[0, 0], camera.intrinsics[1, 1], camera.intrinsics[0, 2], camera.intrinsics[1, 2]
        local = np.array([(col + 0.5 - cx) / fx, (row + 0.5 - cy) / fy, 1.0])
        expected = camera.rotation.T @ local
        origin, direction = pixel_ray(camera, (row, col))
        self.assertTrue(np.allclose(direction, expected / np.linalg.norm(expected), atol=1e-12))
        self.assertTrue(np.allclose(origin, camera.center))

    @parameterized.expand([[(-1, 0)], [(0, 8)], [(8, 0)]])
    def test_pixel_out_of_bounds(self, pixel) -> None:
        """Pixels outside of the image are rejected"""
        with self.assertRaises(PreconditionError):
            pixel_ray(pinhole(), pixel)

    @parameterized.expand([[negative_focal], [principal_point_outside], [reflection], [zero_resolution]])
    def test_invalid_camera(self, input_data) -> None:
        """Cameras violating the intrinsics, rotation or resolution constraints are rejected"""
        extrinsics = np.eye(4)
        extrinsics[:3, :3] = input_data["rotation"]
        with self.assertRaises(PreconditionError):
            Camera(np.asarray(input_data["intrinsics"], dtype=np.float64), extrinsics, *input_data["size"])

    def test_look_at_centres_target(self) -> None:
        """The optical axis of a look-at camera passes through the target"""
        eye = np.array([1.5, 0.7, -2.0])
        camera = Camera(intrinsics_from_fov(50.0, 10, 10), look_at(eye), 10, 10)
        self.assertTrue(np.allclose(camera.center, eye))
        self.assertTrue(np.allclose(camera.world_to_camera(np.zeros((1, 3)))[0, :2], 0.0, atol=1e-12))

    def test_json_record(self) -> None:
        """A camera survives its JSON record"""
        camera = random_camera(3)
        record = camera.to_json()
        self.assertEqual(sorted(record), ["H", "K", "W", "w2c"])
        copy = Camera.from_json(record)
        self.assertTrue(np.array_equal(copy.intrinsics, camera.intrinsics))
        self.assertTrue(np.array_equal(copy.extrinsics, camera.extrinsics))

    def test_camera_rays_match_pixel_ray(self) -> None:
        """The vectorised rays agree with the per-pixel ray"""
        camera = random_camera(4)
        origins, directions = camera_rays(camera)
        for pixel in ((0, 0), (5, 7), (11, 15)):
            origin, direction = pixel_ray(camera, pixel)
            self.assertTrue(np.allclose(origins[pixel], origin))
            self.assertTrue(np.allclose(directions[pixel], direction, atol=1e-12))


class PluckerTest(unittest.TestCase):
    @parameterized.expand([[ray_through_origin], [ray_offset_x], [ray_unnormalized]])
    def test_plucker_from_rays(self, input_data) -> None:
        """Plücker coordinates of single rays equal (d, o x d)"""
        result = plucker_from_rays(np.array(input_data["origin"]), np.array(input_data["direction"]))
        self.assertTrue(np.allclose(result, input_data["expected"]))

    @parameterized.expand([[0], [1], [2], [3], [4]])
    def test_embedding_invariants(self, seed) -> None:
        """Every pixel has a unit direction orthogonal to its moment, and no two pixels share a ray"""
        embedding = plucker_embedding(random_camera(seed))
        self.assertEqual(embedding.shape, (12, 16, 6))
        directions, moments = embedding[..., :3], embedding[..., 3:]
        self.assertTrue(np.allclose(np.linalg.norm(directions, axis=-1), 1.0, atol=1e-6))
        self.assertLess(np.abs(np.sum(directions * moments, axis=-1)).max(), 1e-6)
        self.assertEqual(len(np.unique(np.round(embedding.reshape(-1, 6), 9), axis=0)), 12 * 16)

    def test_origin_slides_along_ray(self) -> None:
        """Moving the origin along the ray leaves the embedding unchanged"""
        origins, directions = camera_rays(random_camera(5))
        moved = origins + 0.7 * directions
        self.assertTrue(np.allclose(plucker_from_rays(origins, directions), plucker_from_rays(moved, directions), atol=1e-6))


if __name__ == "__main__":
    unittest.main()
