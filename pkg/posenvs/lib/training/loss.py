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

from posenvs.lib.core.errors import PreconditionError
from posenvs.lib.training.perceptual import feature_distance

__all__ = ["LossConfig", "view_synthesis_loss"]


@dataclass(frozen=True)
class LossConfig:
    lambda_perc: float = 1.0
    target_views: int = 4

    def __post_init__(self) -> None:
        if self.lambda_perc < 0:
            raise PreconditionError(f"lambda_perc must be >= 0, got {self.lambda_perc}")
        if self.target_views < 1:
            raise PreconditionError(f"at least one target view is needed, got {self.target_views}")


def view_synthesis_loss(
    preds: torch.Tensor, targets: torch.Tensor, extractor: nn.Module | None, lambda_perc: float = 1.0
) -> torch.Tensor:
    """
    Mean over all images of MSE(pred, target) + lambda * perceptual feature L1.

    Args:
        preds: :class:`torch.Tensor`
            Predicted images, ... x H x W x 3.
        targets: :class:`torch.Tensor`
            Ground truth of the same shape.
        extractor: frozen feature pyramid; may be None when `lambda_perc` is 0.
        lambda_perc: :class:`float`
    """

    if preds.shape != targets.shape:
        raise PreconditionError(f"prediction {tuple(preds.shape)} and target {tuple(targets.shape)} differ")
    targets = targets.to(preds.dtype)
    per_image = (preds - targets).square().flatten(-3).mean(dim=-1)
    if lambda_perc > 0:
        per_image = per_image + lambda_perc * feature_distance(preds, targets, extractor)
    return per_image.mean()
