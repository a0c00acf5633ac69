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

import torch
import torch.nn as nn
import torch.nn.functional as F
from einops import rearrange

from posenvs.lib.core.errors import PreconditionError
from posenvs.lib.model.tokenizer import PatchSpec, unpatchify

__all__ = ["DPTDecoder", "LinearDecoder", "ResidualConvUnit", "dpt_decode", "linear_decode"]

DPT_TAPS = 4


class LinearDecoder(nn.Module):
    """Per-token linear map to a p x p RGB patch followed by a Sigmoid."""

    def __init__(self, dim: int, patch: int) -> None:
        super().__init__()
        self.patch = patch
        self.linear = nn.Linear(dim, 3 * patch * patch)

    def forward(self, tokens: torch.Tensor, spec: PatchSpec) -> torch.Tensor:
        if tokens.shape[-2] != spec.num_patches:
            raise PreconditionError(f"{tokens.shape[-2]} tokens for a grid of {spec.num_patches} patches")
        return unpatchify(torch.sigmoid(self.linear(tokens)), spec)


class ResidualConvUnit(nn.Module):
    def __init__(self, channels: int) -> None:
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, kernel_size=3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, kernel_size=3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.conv2(F.relu(self.conv1(F.relu(x))))


class DPTDecoder(nn.Module):
    """
    Dense prediction head over four transformer taps.

    Stage k (k = 0..3) works at 2^k / 8 of the target resolution and is fed by the k-th
    deepest tap, so the last layer drives the coarsest stage and the shallowest tap the full
    resolution one. Every tap is reassembled into its patch grid, projected with a 1x1
    convolution, resized to the stage resolution and refined by a residual unit; stages are
    fused coarse to fine by bilinear x2 upsampling and addition.

    Args:
        dim: :class:`int`
            Token dimension.
        fusion_channels: :class:`tuple[int, ...]`
            Channel width of every stage, coarse to fine.
    """

    def __init__(self, dim: int, fusion_channels: tuple[int, ...] = (128, 96, 64, 32)) -> None:
        super().__init__()
        if len(fusion_channels) != DPT_TAPS:
            raise PreconditionError(f"dpt decoder needs {DPT_TAPS} fusion widths, got {fusion_channels}")
        self.fusion_channels = tuple(fusion_channels)
        self.projections = nn.ModuleList([nn.Conv2d(dim, width, kernel_size=1) for width in fusion_channels])
        self.units = nn.ModuleList([ResidualConvUnit(width) for width in fusion_channels])
        self.transitions = nn.ModuleList(
            [nn.Conv2d(coarse, fine, kernel_size=1) for coarse, fine in zip(fusion_channels, fusion_channels[1:])]
        )
        self.fusions = nn.ModuleList([ResidualConvUnit(width) for width in fusion_channels[1:]])
        self.head = nn.Conv2d(fusion_channels[-1], 3, kernel_size=3, padding=1)

    def forward(self, taps: list[torch.Tensor], spec: PatchSpec) -> torch.Tensor:
        if len(taps) != DPT_TAPS:
            raise PreconditionError(f"dpt decoder needs {DPT_TAPS} taps, got {len(taps)}")
        if spec.height % 8 or spec.width % 8:
            raise PreconditionError(f"dpt decoder needs a resolution divisible by 8, got {spec.height}x{spec.width}")
        rows, cols = spec.grid
        leading = taps[0].shape[:-2]

        path = None
        for stage, tap in enumerate(reversed(taps)):
            if tap.shape[-2] != spec.num_patches:
                raise PreconditionError(f"tap with {tap.shape[-2]} tokens for a grid of {spec.num_patches} patches")
            size = (spec.height * 2**stage // 8, spec.width * 2**stage // 8)
            grid = rearrange(tap.reshape(-1, *tap.shape[-2:]), "b (h w) d -> b d h w", h=rows, w=cols)
            feature = self.projections[stage](grid)
            if tuple(feature.shape[-2:]) != size:
                feature = F.interpolate(feature, size=size, mode="bilinear", align_corners=False)
            feature = self.units[stage](feature)
            if path is None:
                path = feature
                continue
            path = F.interpolate(path, scale_factor=2, mode="bilinear", align_corners=False)
            path = self.fusions[stage - 1](self.transitions[stage - 1](path) + feature)

        image = torch.sigmoid(self.head(path))
        return rearrange(image, "b c h w -> b h w c").reshape(*leading, spec.height, spec.width, 3)


def linear_decode(tokens: torch.Tensor, decoder: LinearDecoder, spec: PatchSpec) -> torch.Tensor:
    return decoder(tokens, spec)


def dpt_decode(taps: list[torch.Tensor], decoder: DPTDecoder, spec: PatchSpec) -> torch.Tensor:
    return decoder(taps, spec)
