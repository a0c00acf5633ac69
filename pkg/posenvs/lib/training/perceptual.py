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
Frozen feature pyramids for the perceptual term of the loss and the perc-dist metric.

The default is a fixed random convolutional pyramid drawn from a documented seed. A VGG-19
pyramid is available when local weights are provided.
"""

from pathlib import Path

import torch
import torch.nn as nn
import torch.nn.functional as F
from einops import rearrange
from loguru import logger

from posenvs.lib.core.config import PerceptualBackend
from posenvs.lib.core.errors import ConfigError

__all__ = ["SurrogateExtractor", "VGG19Extractor", "build_extractor", "feature_distance"]

SURROGATE_CHANNELS = (16, 32, 64, 128)
# 1-based positions in vgg19().features of the relu1_2, relu2_2, relu3_4 and relu4_4 outputs
VGG19_STAGE_ENDS = (4, 9, 18, 27)
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


class SurrogateExtractor(nn.Module):
    """Four stages of stride-2 3x3 convolution and LeakyReLU with seeded, frozen weights."""

    def __init__(self, seed: int = 1234, channels: tuple[int, ...] = SURROGATE_CHANNELS) -> None:
        super().__init__()
        generator = torch.Generator().manual_seed(seed)
        self.stages = nn.ModuleList()
        previous = 3
        for width in channels:
            conv = nn.Conv2d(previous, width, kernel_size=3, stride=2, padding=1)
            with torch.no_grad():
                fan_in = previous * 9
                conv.weight.copy_(torch.randn(conv.weight.shape, generator=generator) * (2.0 / fan_in) ** 0.5)
                conv.bias.zero_()
            self.stages.append(conv)
            previous = width
        self.requires_grad_(False)
        self.eval()

    def forward(self, images: torch.Tensor) -> list[torch.Tensor]:
        """Features of every stage for channel-last images ... x H x W x 3 in [0, 1]."""
        x = rearrange(images.reshape(-1, *images.shape[-3:]), "b h w c -> b c h w").to(self.stages[0].weight.dtype)
        x = 2.0 * x - 1.0
        features = list()
        for conv in self.stages:
            x = F.leaky_relu(conv(x), negative_slope=0.2)
            features.append(x)
        return features


class VGG19Extractor(nn.Module):
    def __init__(self, weights: str | Path) -> None:
        super().__init__()
        import torchvision

        if not weights or not Path(weights).is_file():
            raise ConfigError(f"the vgg19 perceptual backend needs a local weight file, got {weights!r}")
        network = torchvision.models.vgg19(weights=None)
        network.load_state_dict(torch.load(weights, map_location="cpu", weights_only=True))
        self.layers = network.features[: VGG19_STAGE_ENDS[-1]]
        self.register_buffer("mean", torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(IMAGENET_STD).view(1, 3, 1, 1))
        self.requires_grad_(False)
        self.eval()
        logger.info(f"loaded vgg19 perceptual features from {weights}")

    def forward(self, images: torch.Tensor) -> list[torch.Tensor]:
        x = rearrange(images.reshape(-1, *images.shape[-3:]), "b h w c -> b c h w").to(self.mean.dtype)
        x = (x - self.mean) / self.std
        features = list()
        for index, layer in enumerate(self.layers, start=1):
            x = layer(x)
            if index in VGG19_STAGE_ENDS:
                features.append(x)
        return features


def build_extractor(backend: str | PerceptualBackend, seed: int = 1234, weights: str = "") -> nn.Module:
    if isinstance(backend, str):
        backend = PerceptualBackend.from_key(backend)
    if backend == PerceptualBackend.VGG19:
        return VGG19Extractor(weights)
    return SurrogateExtractor(seed)


def feature_distance(pred: torch.Tensor, target: torch.Tensor, extractor: nn.Module) -> torch.Tensor:
    """Per-image sum over stages of the mean absolute feature difference; shape = leading dims of the images."""
    leading = pred.shape[:-3]
    total = 0.0
    for pred_feature, target_feature in zip(extractor(pred), extractor(target)):
        total = total + (pred_feature - target_feature).abs().flatten(1).mean(dim=1)
    return total.reshape(leading)
