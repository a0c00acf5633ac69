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
Image metrics. PSNR and SSIM are computed on the tight bounding box of the ground-truth
mask, the perceptual distance on the full frame.
"""

import numpy as np
import torch
import torch.nn as nn
from scipy.ndimage import gaussian_filter

from posenvs.lib.core.config import PSNR_CAP, SSIM_C1, SSIM_C2, SSIM_SIGMA, SSIM_WINDOW
from posenvs.lib.core.errors import PreconditionError
from posenvs.lib.geometry.camera import Camera
from posenvs.lib.training.perceptual import feature_distance

__all__ = ["crop_to_mask", "mask_bbox", "nearest_view_baseline", "perceptual_distance", "psnr", "ssim"]


def mask_bbox(mask: np.ndarray) -> tuple[int, int, int, int]:
    """Tight box (row0, row1, col0, col1), end exclusive, of a mask or of the union of a mask stack."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim > 2:
        mask = mask.reshape(-1, *mask.shape[-2:]).any(axis=0)
    if not mask.any():
        raise PreconditionError("the ground-truth mask is empty")
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return int(rows[0]), int(rows[-1]) + 1, int(cols[0]), int(cols[-1]) + 1


def crop_to_mask(mask: np.ndarray, *images: np.ndarray) -> list[np.ndarray]:
    row0, row1, col0, col1 = mask_bbox(mask)
    return [np.asarray(image, dtype=np.float64)[..., row0:row1, col0:col1, :] for image in images]


def _check_pair(pred: np.ndarray, gt: np.ndarray) -> None:
    if np.shape(pred) != np.shape(gt):
        raise PreconditionError(f"prediction {np.shape(pred)} and ground truth {np.shape(gt)} differ in shape")


def psnr(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray) -> float:
    """
    Peak signal-to-noise ratio in dB for images in [0, 1], capped at PSNR_CAP for identical crops.

    Args:
        pred: :class:`np.ndarray`
            Prediction, H x W x 3.
        gt: :class:`np.ndarray`
            Ground truth, H x W x 3.
        mask: :class:`np.ndarray`
            Ground-truth mask (or a stack of them) defining the crop.
    """

    _check_pair(pred, gt)
    pred, gt = crop_to_mask(mask, pred, gt)
    mse = float(np.mean((pred - gt) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return float(min(10.0 * np.log10(1.0 / mse), PSNR_CAP))


def ssim(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Gaussian-window SSIM averaged over pixels and channels, on the mask crop when a mask is given."""
    _check_pair(pred, gt)
    if mask is not None:
        pred, gt = crop_to_mask(mask, pred, gt)
    a = np.asarray(pred, dtype=np.float64)
    b = np.asarray(gt, dtype=np.float64)
    # no smoothing across the channel axis
    sigma = (SSIM_SIGMA, SSIM_SIGMA, 0.0)
    blur = lambda x: gaussian_filter(x, sigma=sigma, truncate=(SSIM_WINDOW // 2) / SSIM_SIGMA, mode="nearest")
    mu_a, mu_b = blur(a), blur(b)
    var_a = blur(a * a) - mu_a * mu_a
    var_b = blur(b * b) - mu_b * mu_b
    cov = blur(a * b) - mu_a * mu_b
    numerator = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    denominator = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(numerator / denominator))


def perceptual_distance(pred: np.ndarray, gt: np.ndarray, extractor: nn.Module) -> float:
    """Stage-wise feature L1 of two full-frame images, reported as perc-dist."""
    _check_pair(pred, gt)
    dtype = next(extractor.parameters()).dtype
    with torch.no_grad():
        distance = feature_distance(
            torch.as_tensor(np.asarray(pred), dtype=dtype)[None],
            torch.as_tensor(np.asarray(gt), dtype=dtype)[None],
            extractor,
        )
    return float(distance[0])


def nearest_view_baseline(images: np.ndarray, cameras: list[Camera], target: Camera) -> tuple[int, np.ndarray]:
    """The input view whose camera centre is closest in angle (seen from the origin) to the target camera's."""
    if len(images) != len(cameras) or not cameras:
        raise PreconditionError(f"{len(images)} input images for {len(cameras)} cameras")
    direction = lambda camera: camera.center / np.linalg.norm(camera.center)
    cosines = [float(direction(camera) @ direction(target)) for camera in cameras]
    index = int(np.argmax(cosines))
    return index, np.asarray(images[index], dtype=np.float64)
