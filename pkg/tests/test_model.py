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


import math
import unittest

import numpy as np
import torch
import torch.nn as nn
from parameterized import parameterized

from posenvs.lib.core.config import ConditionMode, DecoderVariant
from posenvs.lib.core.errors import PreconditionError
from posenvs.lib.model import (
    Backbone,
    DPTDecoder,
    LinearDecoder,
    ModelConfig,
    PatchSpec,
    PoseViewSynthesizer,
    SelfAttention,
    TransformerConfig,
    TriplaneTexture,
    ViewBatch,
    attention,
    default_tap_layers,
    dpt_decode,
    embed_input,
    embed_target,
    linear_decode,
    patchify,
    render_pose_image,
    sample_texture,
    unpatchify,
)

# TEST CASES ONE HOT WEIGHTS START
ONE_HOT_WEIGHTS = [
    [0, 0, 0, 0],
    [3, 7, 2, 11],
    [7, 0, 1, 4],
    [6, 6, 0, 15],
]
# TEST CASES ONE HOT WEIGHTS END


def bilinear_oracle(plane: np.ndarray, u: float, v: float) -> np.ndarray:
    """Scalar bilinear lookup on a C x R x R plane; u runs along the columns, v along the rows."""
    resolution = plane.shape[-1]
    fx = (min(max(u, -1.0), 1.0) + 1.0) / 2.0 * (resolution - 1)
    fy = (min(max(v, -1.0), 1.0) + 1.0) / 2.0 * (resolution - 1)
    x0, y0 = min(int(math.floor(fx)), resolution - 2), min(int(math.floor(fy)), resolution - 2)
    ax, ay = fx - x0, fy - y0
    return (
        plane[:, y0, x0] * (1 - ax) * (1 - ay)
        + plane[:, y0, x0 + 1] * ax * (1 - ay)
        + plane[:, y0 + 1, x0] * (1 - ax) * ay
        + plane[:, y0 + 1, x0 + 1] * ax * ay
    )


def attention_oracle(q: np.ndarray, k: np.ndarray, v: np.ndarray, heads: int) -> np.ndarray:
    length, dim = q.shape
    width = dim // heads
    out = np.zeros((length, dim))
    for h in range(heads):
        block = slice(h * width, (h + 1) * width)
        for i in range(length):
            logits = [sum(q[i, block][c] * k[j, block][c] for c in range(width)) / math.sqrt(width) for j in range(len(k))]
            peak = max(logits)
            weights = [math.exp(logit - peak) for logit in logits]
            total = sum(weights)
            for j in range(len(k)):
                out[i, block] += weights[j] / total * v[j, block]
    return out


def small_texture(seed: int = 0, resolution: int = 4, channels: int = 2) -> TriplaneTexture:
    torch.manual_seed(seed)
    return TriplaneTexture(resolution, channels, std=1.0).double()


def small_model(condition: ConditionMode = ConditionMode.PoseImage, decoder: DecoderVariant = DecoderVariant.Linear) -> PoseViewSynthesizer:
    torch.manual_seed(0)
    config = ModelConfig(
        patch=8, dim=16, depth=4, heads=2, mlp_ratio=2.0, texture_res=8, texture_channels=2, condition=condition, decoder=decoder,
        fusion_channels=(8, 8, 8, 8),
    )
    return PoseViewSynthesizer(config).double()


def random_batch(seed: int, inputs: int = 2, targets: int = 2, size: int = 16) -> ViewBatch:
    generator = torch.Generator().manual_seed(seed)
    rand = lambda *shape: torch.rand(*shape, generator=generator, dtype=torch.float64)
    return ViewBatch(
        input_rgb=rand(1, inputs, size, size, 3),
        input_plucker=rand(1, inputs, size, size, 6) * 2 - 1,
        input_positions=rand(1, inputs, size, size, 3) * 2 - 1,
        input_masks=rand(1, inputs, size, size) < 0.6,
        target_plucker=rand(1, targets, size, size, 6) * 2 - 1,
        target_positions=rand(1, targets, size, size, 3) * 2 - 1,
        target_masks=rand(1, targets, size, size) < 0.6,
        target_rgb=rand(1, targets, size, size, 3),
    )


def zero_parameters(module: nn.Module) -> nn.Module:
    with torch.no_grad():
        for parameter in module.parameters():
            parameter.zero_()
    return module


class TextureTest(unittest.TestCase):
    def test_grid_node(self) -> None:
        """A point on grid nodes of all planes samples the node values"""
        texture = small_texture()
        i, j, k = 1, 3, 0
        node = lambda index: -1.0 + 2.0 * index / 3
        point = torch.tensor([node(i), node(j), node(k)], dtype=torch.float64)
        planes = texture.planes.detach()
        expected = torch.cat([planes[0, :, j, i], planes[1, :, k, i], planes[2, :, k, j]])
        self.assertTrue(torch.allclose(sample_texture(point, texture), expected))

    def test_cell_center(self) -> None:
        """The centre of a cell samples the mean of its four corners"""
        texture = small_texture(1)
        centre = -1.0 + 2.0 * 1.5 / 3
        feature = sample_texture(torch.tensor([centre, centre, centre], dtype=torch.float64), texture)
        planes = texture.planes.detach()
        expected = planes[0, :, 1:3, 1:3].mean(dim=(-1, -2))
        self.assertTrue(torch.allclose(feature[:2], expected))

    @parameterized.expand([[0], [1], [2]])
    def test_bilinear_oracle(self, seed) -> None:
        """Random lookups, including clamped ones, match a scalar bilinear oracle"""
        texture = small_texture(seed)
        points = np.random.default_rng(seed).uniform(-1.2, 1.2, size=(20, 3))
        features = sample_texture(torch.from_numpy(points), texture).detach().numpy()
        planes = texture.planes.detach().numpy()
        for point, feature in zip(points, features):
            expected = np.concatenate([bilinear_oracle(planes[0], point[0], point[1]), bilinear_oracle(planes[1], point[0], point[2]), bilinear_oracle(planes[2], point[1], point[2])])
            self.assertTrue(np.allclose(feature, expected, atol=1e-12))

    @parameterized.expand([[0], [1], [2]])
    def test_affine_inside_a_cell(self, axis) -> None:
        """Three equally spaced points along an axis inside one cell give collinear features"""
        texture = small_texture(axis)
        points = torch.tensor([[-0.1, 0.45, -0.6]] * 3, dtype=torch.float64)
        points[:, axis] = torch.tensor([0.4, 0.55, 0.7], dtype=torch.float64)
        first, middle, last = sample_texture(points, texture).detach()
        self.assertTrue(torch.allclose(middle, (first + last) / 2, atol=1e-12))
        self.assertFalse(torch.allclose(first, last))

    def test_pose_image_background(self) -> None:
        """Background pixels are zero and constant planes give a constant pose image"""
        texture = small_texture()
        positions = torch.rand(5, 5, 3, dtype=torch.float64) * 2 - 1
        self.assertTrue(torch.all(render_pose_image(positions, torch.zeros(5, 5, dtype=torch.bool), texture) == 0))
        with torch.no_grad():
            texture.planes.copy_(torch.arange(2, dtype=torch.float64).view(1, 2, 1, 1).expand(3, 2, 4, 4) + 1.0)
        mask = torch.ones(5, 5, dtype=torch.bool)
        mask[0, 0] = False
        image = render_pose_image(positions, mask, texture)
        self.assertTrue(torch.allclose(image[mask], torch.tensor([1.0, 2.0, 1.0, 2.0, 1.0, 2.0], dtype=torch.float64)))
        self.assertTrue(torch.all(image[0, 0] == 0))


class TokenizerTest(unittest.TestCase):
    def test_patchify_shapes(self) -> None:
        """A 16 x 16 x 3 image with p = 8 splits into four patches of 192 values, exactly invertible"""
        spec = PatchSpec(8, 16, 16)
        image = torch.rand(16, 16, 3, dtype=torch.float64)
        patches = patchify(image, spec)
        self.assertEqual(tuple(patches.shape), (4, 192))
        self.assertTrue(torch.equal(unpatchify(patches, spec), image))
        self.assertTrue(torch.all(patchify(torch.full((16, 16, 3), 0.3), spec) == 0.3))
        self.assertTrue(torch.equal(patches[1], image[:8, 8:].reshape(-1)))

    def test_indivisible(self) -> None:
        """Patch sizes that do not divide the image are rejected"""
        with self.assertRaises(PreconditionError):
            PatchSpec(8, 20, 16)

    def test_token_counts(self) -> None:
        """Four 64 x 64 input views give 256 tokens, one target view 64, with injective metadata"""
        spec = PatchSpec(8, 64, 64)
        linear = nn.Linear((3 + 6) * 64, 16)
        inputs = embed_input(torch.rand(4, 64, 64, 3), torch.rand(4, 64, 64, 6), None, linear, spec)
        self.assertEqual(inputs.length, 256)
        keys = set(zip(inputs.views.tolist(), inputs.rows.tolist(), inputs.cols.tolist()))
        self.assertEqual(len(keys), 256)
        targets = embed_target(torch.rand(1, 64, 64, 6), None, nn.Linear(6 * 64, 16), spec)
        self.assertEqual(targets.length, 64)
        self.assertTrue(torch.all(targets.roles == 1))

    def test_identity_embedding(self) -> None:
        """Identity weights reproduce the concatenated raw patch [I | P | F]"""
        spec = PatchSpec(2, 4, 4)
        width = (3 + 6 + 3) * 4
        linear = nn.Linear(width, width).double()
        with torch.no_grad():
            linear.weight.copy_(torch.eye(width, dtype=torch.float64))
            linear.bias.zero_()
        rgb, plucker, pose = torch.rand(1, 4, 4, 3, dtype=torch.float64), torch.rand(1, 4, 4, 6, dtype=torch.float64), torch.rand(1, 4, 4, 3, dtype=torch.float64)
        tokens = embed_input(rgb, plucker, pose, linear, spec).tokens
        self.assertTrue(torch.allclose(tokens, patchify(torch.cat([rgb, plucker, pose], dim=-1), spec)[0]))
        zero_parameters(linear)
        self.assertTrue(torch.all(embed_input(rgb, plucker, pose, linear, spec).tokens == 0))

    def test_linear_without_bias(self) -> None:
        """Without bias the embedding is linear in its inputs"""
        spec = PatchSpec(2, 4, 4)
        linear = nn.Linear(6 * 4, 8).double()
        with torch.no_grad():
            linear.bias.zero_()
        a, b = torch.rand(2, 4, 4, 6, dtype=torch.float64), torch.rand(2, 4, 4, 6, dtype=torch.float64)
        combined = embed_target(2.0 * a - 0.5 * b, None, linear, spec).tokens
        separate = 2.0 * embed_target(a, None, linear, spec).tokens - 0.5 * embed_target(b, None, linear, spec).tokens
        self.assertTrue(torch.allclose(combined, separate, atol=1e-6))

    def test_same_pose_image_same_tokens(self) -> None:
        """Target tokens built from identical pose images are bit-identical"""
        spec = PatchSpec(4, 8, 8)
        linear = nn.Linear((6 + 3) * 16, 8)
        plucker, pose = torch.rand(1, 8, 8, 6), torch.rand(1, 8, 8, 3)
        self.assertTrue(torch.equal(embed_target(plucker, pose, linear, spec).tokens, embed_target(plucker.clone(), pose.clone(), linear, spec).tokens))


class BackboneTest(unittest.TestCase):
    @parameterized.expand([[12, (3, 6, 9, 12)], [8, (2, 4, 6, 8)], [6, (2, 3, 5, 6)], [2, (1, 2)]])
    def test_tap_layers(self, depth, expected) -> None:
        """Taps are the four quarters of the depth"""
        self.assertEqual(default_tap_layers(depth), expected)

    def test_invalid_config(self) -> None:
        """Token dims not divisible by the head count are rejected"""
        with self.assertRaises(PreconditionError):
            TransformerConfig(dim=10, depth=2, heads=4)

    def test_attention_oracle(self) -> None:
        """Vectorised attention matches a naive loop"""
        generator = torch.Generator().manual_seed(0)
        q, k, v = (torch.randn(5, 8, generator=generator, dtype=torch.float64) for _ in range(3))
        weights = list()
        result = attention(q, k, v, heads=2, weights_out=weights)
        self.assertTrue(np.allclose(result.numpy(), attention_oracle(q.numpy(), k.numpy(), v.numpy(), 2), atol=1e-12))
        self.assertTrue(torch.allclose(weights[0].sum(dim=-1), torch.ones(2, 5, dtype=torch.float64)))

    def test_attention_limits(self) -> None:
        """One token returns its value; equal keys average the values"""
        v = torch.randn(1, 4, dtype=torch.float64)
        self.assertTrue(torch.allclose(attention(torch.randn(1, 4, dtype=torch.float64), torch.randn(1, 4, dtype=torch.float64), v, heads=1), v))
        values = torch.randn(6, 4, dtype=torch.float64)
        keys = torch.ones(6, 4, dtype=torch.float64)
        result = attention(torch.randn(3, 4, dtype=torch.float64), keys, values, heads=2)
        self.assertTrue(torch.allclose(result, values.mean(dim=0).expand(3, 4)))

    def test_zero_blocks_are_identity(self) -> None:
        """With all block parameters zero the residual path returns the target tokens"""
        backbone = zero_parameters(Backbone(TransformerConfig(dim=8, depth=2, heads=2)).double())
        inputs, targets = torch.randn(1, 5, 8, dtype=torch.float64), torch.randn(1, 3, 8, dtype=torch.float64)
        output = backbone(inputs, targets)
        self.assertTrue(torch.equal(output.targets, targets))
        self.assertEqual(len(output.taps), 2)

    def test_input_permutation(self) -> None:
        """Reordering the input tokens never changes the target outputs"""
        torch.manual_seed(0)
        backbone = Backbone(TransformerConfig(dim=16, depth=2, heads=2)).double()
        inputs, targets = torch.randn(1, 7, 16, dtype=torch.float64), torch.randn(1, 3, 16, dtype=torch.float64)
        permuted = inputs[:, torch.randperm(7)]
        self.assertTrue(torch.allclose(backbone(inputs, targets).targets, backbone(permuted, targets).targets, atol=1e-12))

    def test_sequences_do_not_mix(self) -> None:
        """Batched sequences give the same outputs as separate runs"""
        torch.manual_seed(1)
        backbone = Backbone(TransformerConfig(dim=16, depth=2, heads=2)).double()
        inputs, targets = torch.randn(2, 4, 16, dtype=torch.float64), torch.randn(2, 3, 16, dtype=torch.float64)
        batched = backbone(inputs, targets).targets
        for index in range(2):
            single = backbone(inputs[index : index + 1], targets[index : index + 1]).targets
            self.assertTrue(torch.allclose(batched[index], single[0], atol=1e-12))

    def test_attention_module_shapes(self) -> None:
        """Self-attention keeps the token shape"""
        module = SelfAttention(16, 4)
        self.assertEqual(tuple(module(torch.randn(2, 5, 16)).shape), (2, 5, 16))


class DecoderTest(unittest.TestCase):
    def test_zero_parameters_give_gray(self) -> None:
        """Both decoders return 0.5 everywhere with zero parameters"""
        spec = PatchSpec(8, 16, 16)
        tokens = torch.randn(1, 4, 16, dtype=torch.float64)
        linear = zero_parameters(LinearDecoder(16, 8).double())
        dpt = zero_parameters(DPTDecoder(16, (8, 8, 8, 8)).double())
        self.assertTrue(torch.all(linear_decode(tokens, linear, spec) == 0.5))
        self.assertTrue(torch.all(dpt_decode([tokens] * 4, dpt, spec) == 0.5))

    def test_linear_is_block_diagonal(self) -> None:
        """Perturbing one token only changes the pixels of its own patch"""
        torch.manual_seed(0)
        spec = PatchSpec(8, 32, 32)
        decoder = LinearDecoder(16, 8).double()
        tokens = torch.randn(1, spec.num_patches, 16, dtype=torch.float64)
        perturbed = tokens.clone()
        perturbed[0, 5] += 1.0
        changed = (decoder(perturbed, spec) != decoder(tokens, spec)).any(dim=-1)[0]
        row, col = divmod(5, 4)
        expected = torch.zeros(32, 32, dtype=torch.bool)
        expected[row * 8 : (row + 1) * 8, col * 8 : (col + 1) * 8] = True
        self.assertTrue(torch.equal(changed, expected))

    @parameterized.expand(ONE_HOT_WEIGHTS)
    def test_one_hot_weight(self, row, col, channel, coordinate) -> None:
        """A single unit weight copies one token coordinate through the Sigmoid into one pixel of every patch"""
        spec = PatchSpec(8, 32, 24)
        decoder = zero_parameters(LinearDecoder(16, 8).double())
        with torch.no_grad():
            decoder.linear.weight[(row * 8 + col) * 3 + channel, coordinate] = 1.0
        tokens = torch.randn(1, spec.num_patches, 16, dtype=torch.float64)
        image = linear_decode(tokens, decoder, spec)[0]
        expected = torch.full((32, 24, 3), 0.5, dtype=torch.float64)
        for token in range(spec.num_patches):
            grid_row, grid_col = divmod(token, 3)
            expected[grid_row * 8 + row, grid_col * 8 + col, channel] = torch.sigmoid(tokens[0, token, coordinate])
        self.assertTrue(torch.allclose(image, expected, rtol=0.0, atol=1e-15))

    def test_dpt_crosses_patches(self) -> None:
        """Perturbing one token of the dpt decoder changes pixels outside its patch"""
        torch.manual_seed(0)
        spec = PatchSpec(8, 32, 32)
        decoder = DPTDecoder(16, (8, 8, 8, 8)).double()
        taps = [torch.randn(1, spec.num_patches, 16, dtype=torch.float64) for _ in range(4)]
        perturbed = [tap.clone() for tap in taps]
        perturbed[-1][0, 5] += 1.0
        changed = (decoder(perturbed, spec) - decoder(taps, spec)).abs().amax(dim=-1)[0] > 1e-12
        outside = changed.clone()
        outside[8:16, 8:16] = False
        self.assertGreater(int(changed.sum()), 64)
        self.assertTrue(outside.any())

    def test_dpt_translation(self) -> None:
        """Shifting the token grid by one patch shifts the interior of the image by p pixels"""
        torch.manual_seed(2)
        spec = PatchSpec(8, 128, 128)
        decoder = DPTDecoder(16, (8, 8, 8, 8)).double()
        grids = [torch.randn(16, 16, 16, dtype=torch.float64) for _ in range(4)]
        shifted = list()
        for grid in grids:
            moved = torch.randn(16, 16, 16, dtype=torch.float64)
            moved[:, 1:] = grid[:, :-1]
            shifted.append(moved)
        image = decoder([grid.reshape(1, 256, 16) for grid in grids], spec)[0]
        moved_image = decoder([grid.reshape(1, 256, 16) for grid in shifted], spec)[0]
        self.assertTrue(torch.allclose(moved_image[:, 56:80], image[:, 48:72], atol=1e-5))

    def test_dpt_needs_four_taps(self) -> None:
        """The dpt decoder rejects other tap counts"""
        decoder = DPTDecoder(16, (8, 8, 8, 8))
        with self.assertRaises(PreconditionError):
            decoder([torch.randn(1, 4, 16)] * 3, PatchSpec(8, 16, 16))


class NetworkTest(unittest.TestCase):
    @parameterized.expand([[DecoderVariant.Linear], [DecoderVariant.DPT]])
    def test_output_shape_and_range(self, decoder) -> None:
        """Predictions have the target shape and lie strictly inside (0, 1)"""
        model = small_model(decoder=decoder)
        images = model(random_batch(0))
        self.assertEqual(tuple(images.shape), (1, 2, 16, 16, 3))
        self.assertTrue(torch.all((images > 0) & (images < 1)))

    @parameterized.expand([[ConditionMode.PoseImage], [ConditionMode.PositionMap], [ConditionMode.NoCondition]])
    def test_targets_are_independent(self, condition) -> None:
        """Every target view is decoded independently of the other targets"""
        model = small_model(condition)
        batch = random_batch(1, targets=3)
        together = model(batch)
        for index in range(3):
            single = ViewBatch(
                batch.input_rgb, batch.input_plucker, batch.input_positions, batch.input_masks,
                batch.target_plucker[:, index : index + 1], batch.target_positions[:, index : index + 1], batch.target_masks[:, index : index + 1],
            )
            self.assertTrue(torch.allclose(model(single)[:, 0], together[:, index], atol=1e-12))

    def test_condition_arms(self) -> None:
        """Only the pose image arm owns a texture; the embeddings widen with the condition"""
        self.assertIsInstance(small_model(ConditionMode.PoseImage).texture, TriplaneTexture)
        self.assertIsNone(small_model(ConditionMode.PositionMap).texture)
        self.assertEqual(small_model(ConditionMode.NoCondition).input_embedding.in_features, 9 * 64)
        self.assertEqual(small_model(ConditionMode.PositionMap).target_embedding.in_features, 9 * 64)
        self.assertEqual(small_model(ConditionMode.PoseImage).input_embedding.in_features, (9 + 6) * 64)

    def test_single_texture_instance(self) -> None:
        """Inputs and targets read the same texture parameters"""
        model = small_model()
        textures = [module for module in model.modules() if isinstance(module, TriplaneTexture)]
        self.assertEqual(len(textures), 1)

    def test_dpt_needs_depth(self) -> None:
        """The dpt decoder needs four backbone taps"""
        with self.assertRaises(PreconditionError):
            PoseViewSynthesizer(ModelConfig(dim=16, depth=2, heads=2, decoder=DecoderVariant.DPT))

    def test_labels(self) -> None:
        """Model labels follow the ablation layout"""
        self.assertEqual(ModelConfig().label, "Pose Image + DPT")
        self.assertEqual(ModelConfig.from_config(dict(condition="position_map", decoder="linear")).label, "Position + Linear")
        self.assertEqual(ModelConfig.from_config(dict(condition="none")).label, "Plücker only + DPT")


if __name__ == "__main__":
    unittest.main()
