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
The full view synthesizer: pose condition, tokenizer, backbone and image decoder.

Every target view is decoded in its own sequence together with all input tokens, so the
number of target views per call never changes the result for a single view.
"""

from dataclasses import dataclass, fields
from typing import Any

import torch
import torch.nn as nn
from einops import repeat

from posenvs.lib.core.config import ConditionMode, DecoderVariant
from posenvs.lib.core.errors import PreconditionError
from posenvs.lib.model.backbone import Backbone, TransformerConfig
from posenvs.lib.model.decoder import DPT_TAPS, DPTDecoder, LinearDecoder
from posenvs.lib.model.texture import TriplaneTexture, render_pose_image
from posenvs.lib.model.tokenizer import PatchSpec, embed_input, embed_target

__all__ = ["ModelConfig", "PoseViewSynthesizer", "ViewBatch"]


@dataclass(frozen=True)
class ModelConfig:
    patch: int = 8
    dim: int = 128
    depth: int = 12
    heads: int = 4
    mlp_ratio: float = 4.0
    texture_res: int = 64
    texture_channels: int = 16
    texture_std: float = 0.02
    condition: ConditionMode = ConditionMode.PoseImage
    decoder: DecoderVariant = DecoderVariant.DPT
    fusion_channels: tuple[int, ...] = (128, 96, 64, 32)

    @classmethod
    def from_config(cls, config: dict[str, Any]) -> "ModelConfig":
        values = {item.name: config[item.name] for item in fields(cls) if item.name in config}
        if isinstance(values.get("condition"), str):
            values["condition"] = ConditionMode.from_key(values["condition"])
        if isinstance(values.get("decoder"), str):
            values["decoder"] = DecoderVariant.from_key(values["decoder"])
        if "fusion_channels" in values:
            values["fusion_channels"] = tuple(values["fusion_channels"])
        return cls(**values)

    @property
    def condition_channels(self) -> int:
        if self.condition == ConditionMode.PoseImage:
            return 3 * self.texture_channels
        if self.condition == ConditionMode.PositionMap:
            return 3
        return 0

    @property
    def label(self) -> str:
        condition = {ConditionMode.PoseImage: "Pose Image", ConditionMode.PositionMap: "Position", ConditionMode.NoCondition: "Plücker only"}
        return f"{condition[self.condition]} + {'DPT' if self.decoder == DecoderVariant.DPT else 'Linear'}"


@dataclass(eq=False)
class ViewBatch:
    """
    One batch of scenes. Images are channel-last: B x N x H x W x K for the N input views and
    B x M x H x W x K for the M target views. Masks are boolean without the channel axis.
    """

    input_rgb: torch.Tensor
    input_plucker: torch.Tensor
    input_positions: torch.Tensor
    input_masks: torch.Tensor
    target_plucker: torch.Tensor
    target_positions: torch.Tensor
    target_masks: torch.Tensor
    target_rgb: torch.Tensor | None = None

    @property
    def num_targets(self) -> int:
        return self.target_plucker.shape[1]

    def to(self, dtype: torch.dtype, device: torch.device | str = "cpu") -> "ViewBatch":
        def convert(value: torch.Tensor | None) -> torch.Tensor | None:
            if value is None:
                return None
            if value.dtype == torch.bool:
                return value.to(device)
            return value.to(device=device, dtype=dtype)

        return ViewBatch(**{item.name: convert(getattr(self, item.name)) for item in fields(self)})


class PoseViewSynthesizer(nn.Module):
    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        self.config = config
        p2 = config.patch * config.patch
        self.texture = (
            TriplaneTexture(config.texture_res, config.texture_channels, config.texture_std)
            if config.condition == ConditionMode.PoseImage
            else None
        )
        self.input_embedding = nn.Linear((3 + 6 + config.condition_channels) * p2, config.dim)
        self.target_embedding = nn.Linear((6 + config.condition_channels) * p2, config.dim)
        self.backbone = Backbone(TransformerConfig(config.dim, config.depth, config.heads, config.mlp_ratio))
        if config.decoder == DecoderVariant.DPT:
            if len(self.backbone.config.tap_layers) != DPT_TAPS:
                raise PreconditionError(f"the dpt decoder needs a backbone of depth >= {DPT_TAPS}, got {config.depth}")
            self.decoder = DPTDecoder(config.dim, config.fusion_channels)
        else:
            self.decoder = LinearDecoder(config.dim, config.patch)
        for linear in (self.input_embedding, self.target_embedding):
            nn.init.trunc_normal_(linear.weight, mean=0.0, std=0.02)
            nn.init.zeros_(linear.bias)

    def condition_image(self, positions: torch.Tensor, masks: torch.Tensor) -> torch.Tensor | None:
        """The pose condition F of a stack of position maps, or None without conditioning."""
        if self.config.condition == ConditionMode.PoseImage:
            return render_pose_image(positions, masks, self.texture)
        if self.config.condition == ConditionMode.PositionMap:
            return positions * masks[..., None].to(positions.dtype)
        return None

    def forward(self, batch: ViewBatch) -> torch.Tensor:
        """Predicted target images, B x M x H x W x 3 with values in (0, 1)."""
        batch_size, num_targets = batch.target_plucker.shape[:2]
        height, width = batch.target_plucker.shape[-3:-1]
        input_spec = PatchSpec(self.config.patch, *batch.input_rgb.shape[-3:-1])
        target_spec = PatchSpec(self.config.patch, height, width)

        inputs = embed_input(
            batch.input_rgb,
            batch.input_plucker,
            self.condition_image(batch.input_positions, batch.input_masks),
            self.input_embedding,
            input_spec,
        )
        target_condition = self.condition_image(batch.target_positions, batch.target_masks)
        targets = embed_target(
            batch.target_plucker.flatten(0, 1)[:, None],
            target_condition.flatten(0, 1)[:, None] if target_condition is not None else None,
            self.target_embedding,
            target_spec,
        )

        # one sequence per target view: (B M) x (l_x + l_q) x d
        folded_inputs = repeat(inputs.tokens, "b l d -> (b m) l d", m=num_targets)
        output = self.backbone(folded_inputs, targets.tokens)
        if self.config.decoder == DecoderVariant.DPT:
            images = self.decoder(output.taps, target_spec)
        else:
            images = self.decoder(output.targets, target_spec)
        return images.reshape(batch_size, num_targets, height, width, 3)
