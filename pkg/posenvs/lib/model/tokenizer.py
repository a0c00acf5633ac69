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

from dataclasses import dataclass

import torch
import torch.nn as nn
from einops import rearrange, repeat

from posenvs.lib.core.errors import PreconditionError

__all__ = [
    "INPUT_ROLE",
    "PatchSpec",
    "TARGET_ROLE",
    "TokenSequence",
    "embed_input",
    "embed_target",
    "patchify",
    "unpatchify",
]

INPUT_ROLE = 0
TARGET_ROLE = 1


@dataclass(frozen=True)
class PatchSpec:
    patch: int
    height: int
    width: int

    def __post_init__(self) -> None:
        if self.patch <= 0 or self.height % self.patch or self.width % self.patch:
            raise PreconditionError(f"patch size {self.patch} does not divide {self.height}x{self.width}")

    @property
    def grid(self) -> tuple[int, int]:
        return self.height // self.patch, self.width // self.patch

    @property
    def num_patches(self) -> int:
        rows, cols = self.grid
        return rows * cols


def patchify(image, spec: PatchSpec):
    """
    Splits ... x H x W x K into ... x (H/p * W/p) x (p * p * K).

    Patches are enumerated row-major over the patch grid; inside a patch values are ordered by
    pixel row, pixel column and then channel. Works on numpy arrays and torch tensors.
    """

    if tuple(image.shape[-3:-1]) != (spec.height, spec.width):
        raise PreconditionError(f"image of shape {tuple(image.shape)} does not match {spec}")
    return rearrange(image, "... (hp p1) (wp p2) c -> ... (hp wp) (p1 p2 c)", p1=spec.patch, p2=spec.patch)


def unpatchify(patches, spec: PatchSpec):
    rows, cols = spec.grid
    return rearrange(patches, "... (hp wp) (p1 p2 c) -> ... (hp p1) (wp p2) c", hp=rows, wp=cols, p1=spec.patch, p2=spec.patch)


@dataclass(eq=False)
class TokenSequence:
    """Tokens of shape ... x L x d plus per-token bookkeeping, each of length L."""

    tokens: torch.Tensor
    roles: torch.Tensor
    views: torch.Tensor
    rows: torch.Tensor
    cols: torch.Tensor

    @property
    def length(self) -> int:
        return self.tokens.shape[-2]

    @property
    def dim(self) -> int:
        return self.tokens.shape[-1]

    @classmethod
    def describe(cls, tokens: torch.Tensor, role: int, num_views: int, spec: PatchSpec) -> "TokenSequence":
        rows, cols = spec.grid
        grid_rows = repeat(torch.arange(rows), "h -> v (h w)", v=num_views, w=cols).reshape(-1)
        grid_cols = repeat(torch.arange(cols), "w -> v (h w)", v=num_views, h=rows).reshape(-1)
        views = repeat(torch.arange(num_views), "v -> (v n)", n=spec.num_patches)
        return cls(tokens, torch.full_like(views, role), views, grid_rows, grid_cols)


def _tokens(channels: list[torch.Tensor], spec: PatchSpec, linear: nn.Linear) -> tuple[torch.Tensor, int]:
    height, width = channels[0].shape[-3:-1]
    for image in channels:
        if image.shape[:-1] != channels[0].shape[:-1]:
            raise PreconditionError(f"misaligned inputs {tuple(image.shape)} and {tuple(channels[0].shape)}")
    stacked = torch.cat(channels, dim=-1)
    patches = patchify(stacked, spec)
    if patches.shape[-1] != linear.in_features:
        raise PreconditionError(f"patches have {patches.shape[-1]} values, embedding expects {linear.in_features}")
    # ... x V x n x d -> ... x (V n) x d, views in order
    return rearrange(linear(patches), "... v n d -> ... (v n) d"), stacked.shape[-4]


def embed_input(
    rgb: torch.Tensor, plucker: torch.Tensor, pose_image: torch.Tensor | None, linear: nn.Linear, spec: PatchSpec
) -> TokenSequence:
    """
    Input tokens x_ij = Linear_inp([I_ij | P_ij | F_ij]).

    Args:
        rgb: :class:`torch.Tensor`
            Input images, ... x V x H x W x 3.
        plucker: :class:`torch.Tensor`
            Plücker maps, ... x V x H x W x 6.
        pose_image: :class:`torch.Tensor | None`
            Pose condition, ... x V x H x W x K_F, or None for the unconditioned model.
        linear: :class:`nn.Linear`
        spec: :class:`PatchSpec`
    """

    channels = [rgb, plucker] + ([pose_image] if pose_image is not None else [])
    tokens, views = _tokens(channels, spec, linear)
    return TokenSequence.describe(tokens, INPUT_ROLE, views, spec)


def embed_target(plucker: torch.Tensor, pose_image: torch.Tensor | None, linear: nn.Linear, spec: PatchSpec) -> TokenSequence:
    """
    Target tokens q_j = Linear_tar([P_j | F_j]).

    Reconstruction and animation share this path; they differ only in the pose the target
    pose image was rendered with.
    """

    channels = [plucker] + ([pose_image] if pose_image is not None else [])
    tokens, views = _tokens(channels, spec, linear)
    return TokenSequence.describe(tokens, TARGET_ROLE, views, spec)
