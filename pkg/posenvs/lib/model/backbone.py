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
The decoder-only transformer: one stack of pre-norm self-attention blocks over the
concatenated input and target tokens, without masking and without positional embeddings.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import torch
import torch.nn as nn
from einops import rearrange

from posenvs.lib.core.errors import PreconditionError

__all__ = [
    "Backbone",
    "BackboneOutput",
    "SelfAttention",
    "TransformerBlock",
    "TransformerConfig",
    "attention",
    "default_tap_layers",
]


def default_tap_layers(depth: int) -> tuple[int, ...]:
    """Layers 3, 6, 9, 12 at depth 12; the four evenly spaced quarters of any depth >= 4."""
    if depth < 4:
        return tuple(range(1, depth + 1))
    return tuple(math.ceil(depth * quarter / 4) for quarter in range(1, 5))


@dataclass(frozen=True)
class TransformerConfig:
    dim: int = 128
    depth: int = 12
    heads: int = 4
    mlp_ratio: float = 4.0
    tap_layers: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.tap_layers:
            object.__setattr__(self, "tap_layers", default_tap_layers(self.depth))
        if self.dim <= 0 or self.heads <= 0 or self.dim % self.heads:
            raise PreconditionError(f"token dim {self.dim} is not divisible by {self.heads} heads")
        taps = self.tap_layers
        if any(b <= a for a, b in zip(taps, taps[1:])) or taps[0] < 1 or taps[-1] != self.depth:
            raise PreconditionError(f"tap layers {taps} must increase strictly within [1, {self.depth}] and end at it")


@dataclass(eq=False)
class BackboneOutput:
    targets: torch.Tensor  # ... x l_q x d after the last block
    taps: list[torch.Tensor]  # target tokens after every tap layer


def attention(
    queries: torch.Tensor,
    keys: torch.Tensor,
    values: torch.Tensor,
    heads: int,
    projection: Callable[[torch.Tensor], torch.Tensor] | None = None,
    weights_out: list | None = None,
) -> torch.Tensor:
    """
    Multi-head scaled dot-product attention softmax(Q K^T / sqrt(d / heads)) V.

    Args:
        queries, keys, values: :class:`torch.Tensor`
            Already projected, ... x L x d (keys and values share their length).
        heads: :class:`int`
        projection: optional output projection applied to the concatenated heads.
        weights_out: when a list is passed, the attention weights are appended to it.
    """

    q, k, v = (rearrange(t, "... n (h d) -> ... h n d", h=heads) for t in (queries, keys, values))
    scale = q.shape[-1] ** -0.5
    weights = torch.softmax(torch.matmul(q, k.transpose(-1, -2)) * scale, dim=-1)
    if weights_out is not None:
        weights_out.append(weights)
    mixed = rearrange(torch.matmul(weights, v), "... h n d -> ... n (h d)")
    return projection(mixed) if projection is not None else mixed


class SelfAttention(nn.Module):
    def __init__(self, dim: int, heads: int) -> None:
        super().__init__()
        self.heads = heads
        self.to_qkv = nn.Linear(dim, 3 * dim, bias=False)
        self.to_out = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        q, k, v = self.to_qkv(x).chunk(3, dim=-1)
        return attention(q, k, v, self.heads, self.to_out)


class TransformerBlock(nn.Module):
    def __init__(self, dim: int, heads: int, mlp_ratio: float) -> None:
        super().__init__()
        hidden = int(dim * mlp_ratio)
        self.attention_norm = nn.LayerNorm(dim)
        self.attention = SelfAttention(dim, heads)
        self.mlp_norm = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(nn.Linear(dim, hidden), nn.GELU(), nn.Linear(hidden, dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attention(self.attention_norm(x))
        return x + self.mlp(self.mlp_norm(x))


class Backbone(nn.Module):
    def __init__(self, config: TransformerConfig) -> None:
        super().__init__()
        self.config = config
        self.blocks = nn.ModuleList(
            [TransformerBlock(config.dim, config.heads, config.mlp_ratio) for _ in range(config.depth)]
        )
        self.apply(self._init_module)

    @staticmethod
    def _init_module(module: nn.Module) -> None:
        if isinstance(module, nn.Linear):
            nn.init.trunc_normal_(module.weight, mean=0.0, std=0.02)
            if module.bias is not None:
                nn.init.zeros_(module.bias)
        elif isinstance(module, nn.LayerNorm):
            nn.init.ones_(module.weight)
            nn.init.zeros_(module.bias)

    def forward(self, input_tokens: torch.Tensor, target_tokens: torch.Tensor) -> BackboneOutput:
        """
        Runs all blocks over [inputs | targets] (... x (l_x + l_q) x d).

        The outputs at input positions are computed but only the target slice is returned.
        """

        if input_tokens.shape[-1] != self.config.dim or target_tokens.shape[-1] != self.config.dim:
            raise PreconditionError(
                f"tokens of dim {input_tokens.shape[-1]} and {target_tokens.shape[-1]}, backbone expects {self.config.dim}"
            )
        num_inputs = input_tokens.shape[-2]
        x = torch.cat([input_tokens, target_tokens], dim=-2)
        taps = list()
        for layer, block in enumerate(self.blocks, start=1):
            x = block(x)
            if layer in self.config.tap_layers:
                taps.append(x[..., num_inputs:, :])
        return BackboneOutput(x[..., num_inputs:, :], taps)
