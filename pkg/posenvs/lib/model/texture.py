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
The shared neural texture: three learnable feature planes over the canonical cube.

Plane order is xy, xz, yz. On every plane the first coordinate runs along the plane width and
the second along its height, so texel (i, j) of a plane with resolution R sits at
(-1 + 2j / (R - 1), -1 + 2i / (R - 1)).
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

__all__ = ["PLANE_AXES", "TriplaneTexture", "render_pose_image", "sample_texture"]

PLANE_AXES = ((0, 1), (0, 2), (1, 2))


class TriplaneTexture(nn.Module):
    """
    Args:
        resolution: :class:`int`
            Plane resolution H' = W'.
        channels: :class:`int`
            Channels C per plane; sampled features have 3C channels.
        std: :class:`float`
            Standard deviation of the zero-mean Gaussian initialisation.
    """

    def __init__(self, resolution: int = 64, channels: int = 16, std: float = 0.02) -> None:
        super().__init__()
        self.resolution = resolution
        self.channels = channels
        self.planes = nn.Parameter(torch.randn(3, channels, resolution, resolution) * std)

    @property
    def feature_channels(self) -> int:
        return 3 * self.channels

    def forward(self, positions: torch.Tensor) -> torch.Tensor:
        """Samples features at canonical positions of shape ... x 3; returns ... x 3C."""
        shape = positions.shape
        coords = positions.to(self.planes.dtype).clamp(-1.0, 1.0).reshape(1, -1, 1, 3)
        features = list()
        for plane, axes in zip(self.planes, PLANE_AXES):
            # grid_sample: [1, C, H', W'] x [1, N, 1, 2] -> [1, C, N, 1]
            sampled = F.grid_sample(
                plane[None], coords[..., axes], mode="bilinear", padding_mode="border", align_corners=True
            )
            features.append(sampled[0, :, :, 0].transpose(0, 1))
        return torch.cat(features, dim=1).reshape(*shape[:-1], self.feature_channels)


def sample_texture(position: torch.Tensor, texture: TriplaneTexture) -> torch.Tensor:
    return texture(position)


def render_pose_image(positions: torch.Tensor, mask: torch.Tensor, texture: TriplaneTexture) -> torch.Tensor:
    """
    Turns position maps (... x H x W x 3) into pose images (... x H x W x 3C).

    Pixels outside `mask` are zero in every channel.
    """

    features = texture(positions)
    return features * mask[..., None].to(features.dtype)
