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
Finite-difference checks of the analytic gradients at 64-bit precision.

Every check compares backpropagated gradients of a scalar objective with central differences
on a sample of parameter entries: the entries with the largest analytic gradient plus random
ones. The relative error is max|analytic - numeric| / max(max|analytic|, max|numeric|).
"""

import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable

import torch
import torch.nn as nn
from loguru import logger
from wrapt_timeout_decorator import *

from posenvs.lib.core.config import GRADCHECK_FLOOR, GRADCHECK_TOLERANCE, ConditionMode, DecoderVariant
from posenvs.lib.model.backbone import TransformerBlock
from posenvs.lib.model.decoder import DPTDecoder
from posenvs.lib.model.network import ModelConfig, PoseViewSynthesizer, ViewBatch
from posenvs.lib.model.texture import TriplaneTexture, render_pose_image
from posenvs.lib.model.tokenizer import PatchSpec
from posenvs.lib.training.loss import view_synthesis_loss
from posenvs.lib.training.perceptual import SurrogateExtractor

__all__ = [
    "GradcheckReport",
    "GradcheckResult",
    "check_attention",
    "check_dpt",
    "check_full_loss",
    "check_triplane",
    "finite_difference_check",
    "relative_error",
    "run_gradchecks",
]

GRADCHECK_STEP = 1e-6
GRADCHECK_ELEMENTS = 16

AnalyticHook = Callable[[str, torch.Tensor], torch.Tensor]


@dataclass(frozen=True)
class GradcheckResult:
    name: str
    max_relative_error: float
    elements: int
    passed: bool

    def to_json(self) -> dict[str, Any]:
        return dict(name=self.name, max_relative_error=self.max_relative_error, elements=self.elements, passed=self.passed)


@dataclass(eq=False)
class GradcheckReport:
    results: list[GradcheckResult] = field(default_factory=list)
    tolerance: float = GRADCHECK_TOLERANCE

    @property
    def passed(self) -> bool:
        return bool(self.results) and all(result.passed for result in self.results)

    def to_json(self) -> dict[str, Any]:
        return dict(passed=self.passed, tolerance=self.tolerance, results=[result.to_json() for result in self.results])

    def to_table(self) -> str:
        width = max([len(result.name) for result in self.results] + [5])
        lines = [f"{'check'.ljust(width)}  rel. error  elements  status"]
        for result in self.results:
            status = "pass" if result.passed else "FAIL"
            lines.append(f"{result.name.ljust(width)}  {result.max_relative_error:10.3e}  {result.elements:8d}  {status}")
        lines.append(f"{'all'.ljust(width)}  {'':10}  {'':8}  {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def relative_error(analytic: torch.Tensor, numeric: torch.Tensor, floor: float = GRADCHECK_FLOOR) -> float:
    """Largest per-entry |analytic - numeric| / max(|analytic|, |numeric|, floor)."""
    if analytic.numel() == 0:
        return 0.0
    scale = torch.maximum(analytic.abs(), numeric.abs()).clamp_min(floor)
    return float(((analytic - numeric).abs() / scale).max())


def finite_difference_check(
    name: str,
    objective: Callable[[], torch.Tensor],
    parameter: torch.Tensor,
    generator: torch.Generator,
    count: int = GRADCHECK_ELEMENTS,
    step: float = GRADCHECK_STEP,
    analytic_hook: AnalyticHook | None = None,
) -> GradcheckResult:
    """
    Compares the gradient of `objective()` with respect to `parameter` with central differences.

    Args:
        name: :class:`str`
            Label of the check in the report.
        objective: :class:`Callable[[], torch.Tensor]`
            Recomputes the scalar objective from the current parameter values.
        parameter: :class:`torch.Tensor`
            A contiguous float64 leaf tensor requiring gradients.
        generator: :class:`torch.Generator`
            Draws the random share of the checked entries.
        count: :class:`int`
            Number of checked entries.
        step: :class:`float`
            Finite-difference step.
        analytic_hook: :class:`AnalyticHook | None`
            Applied to the analytic gradient before the comparison.
    """

    parameter.grad = None
    objective().backward()
    analytic = parameter.grad.detach().reshape(-1).clone()
    if analytic_hook is not None:
        analytic = analytic_hook(name, analytic)

    flat = parameter.data.view(-1)
    strongest = torch.argsort(analytic.abs(), descending=True)[: count // 2]
    drawn = torch.randperm(flat.numel(), generator=generator)[: count - len(strongest)]
    indices = torch.unique(torch.cat([strongest, drawn]))

    numeric = torch.empty(len(indices), dtype=torch.float64)
    with torch.no_grad():
        for slot, index in enumerate(indices.tolist()):
            original = float(flat[index])
            flat[index] = original + step
            plus = float(objective())
            flat[index] = original - step
            minus = float(objective())
            flat[index] = original
            numeric[slot] = (plus - minus) / (2.0 * step)

    error = relative_error(analytic[indices], numeric)
    passed = math.isfinite(error) and error < GRADCHECK_TOLERANCE
    logger.debug(f"gradcheck {name}: relative error {error:.3e} over {len(indices)} entries")
    return GradcheckResult(name, error, len(indices), passed)


def _randomize(module: nn.Module, generator: torch.Generator) -> nn.Module:
    """Fan-in scaled Gaussian weights, so the checked gradients are far from zero."""
    with torch.no_grad():
        for parameter in module.parameters():
            fan_in = math.prod(parameter.shape[1:]) if parameter.dim() > 1 else 10
            parameter.copy_(torch.randn(parameter.shape, generator=generator, dtype=parameter.dtype) / math.sqrt(fan_in))
    return module


def _randn(generator: torch.Generator, *shape: int) -> torch.Tensor:
    return torch.randn(shape, generator=generator, dtype=torch.float64)


def _positions(generator: torch.Generator, *shape: int) -> torch.Tensor:
    # away from the border so the clamp in the texture lookup stays inactive
    return torch.rand(*shape, 3, generator=generator, dtype=torch.float64) * 1.8 - 0.9


def _masks(generator: torch.Generator, *shape: int) -> torch.Tensor:
    return torch.rand(shape, generator=generator, dtype=torch.float64) < 0.7


def check_triplane(generator: torch.Generator, analytic_hook: AnalyticHook | None = None) -> list[GradcheckResult]:
    texture = TriplaneTexture(resolution=8, channels=4, std=1.0).double()
    positions, masks = _positions(generator, 2, 6, 6), _masks(generator, 2, 6, 6)
    weights = _randn(generator, 2, 6, 6, texture.feature_channels)
    objective = lambda: (render_pose_image(positions, masks, texture) * weights).sum()
    return [finite_difference_check("triplane", objective, texture.planes, generator, analytic_hook=analytic_hook)]


def check_attention(generator: torch.Generator, analytic_hook: AnalyticHook | None = None) -> list[GradcheckResult]:
    block = _randomize(TransformerBlock(dim=16, heads=2, mlp_ratio=2.0).double(), generator)
    tokens = _randn(generator, 2, 10, 16)
    weights = _randn(generator, 2, 10, 16)
    objective = lambda: (block(tokens) * weights).sum()
    return [
        finite_difference_check(f"attention.{name}", objective, parameter, generator, analytic_hook=analytic_hook)
        for name, parameter in (("to_qkv", block.attention.to_qkv.weight), ("to_out", block.attention.to_out.weight))
    ]


def check_dpt(generator: torch.Generator, analytic_hook: AnalyticHook | None = None) -> list[GradcheckResult]:
    decoder = _randomize(DPTDecoder(dim=16, fusion_channels=(8, 8, 8, 8)).double(), generator)
    spec = PatchSpec(8, 16, 16)
    taps = [_randn(generator, 1, spec.num_patches, 16) for _ in range(4)]
    weights = _randn(generator, 1, 16, 16, 3)
    objective = lambda: (decoder(taps, spec) * weights).sum()
    checked = (
        ("projection", decoder.projections[0].weight),
        ("fusion", decoder.fusions[-1].conv1.weight),
        ("head", decoder.head.weight),
    )
    return [
        finite_difference_check(f"dpt.{name}", objective, parameter, generator, analytic_hook=analytic_hook)
        for name, parameter in checked
    ]


def check_full_loss(generator: torch.Generator, analytic_hook: AnalyticHook | None = None) -> list[GradcheckResult]:
    """MSE plus perceptual loss of a two-block, d = 16 model with pose image conditioning."""
    config = ModelConfig(
        patch=8,
        dim=16,
        depth=2,
        heads=2,
        mlp_ratio=2.0,
        texture_res=8,
        texture_channels=4,
        texture_std=1.0,
        condition=ConditionMode.PoseImage,
        decoder=DecoderVariant.Linear,
    )
    model = _randomize(PoseViewSynthesizer(config).double(), generator)
    extractor = SurrogateExtractor().double()
    batch = ViewBatch(
        input_rgb=torch.rand(1, 2, 16, 16, 3, generator=generator, dtype=torch.float64),
        input_plucker=_randn(generator, 1, 2, 16, 16, 6),
        input_positions=_positions(generator, 1, 2, 16, 16),
        input_masks=_masks(generator, 1, 2, 16, 16),
        target_plucker=_randn(generator, 1, 1, 16, 16, 6),
        target_positions=_positions(generator, 1, 1, 16, 16),
        target_masks=_masks(generator, 1, 1, 16, 16),
        target_rgb=torch.rand(1, 1, 16, 16, 3, generator=generator, dtype=torch.float64),
    )
    objective = lambda: view_synthesis_loss(model(batch), batch.target_rgb, extractor, lambda_perc=1.0)
    checked = (
        ("texture", model.texture.planes),
        ("input_embedding", model.input_embedding.weight),
        ("attention", model.backbone.blocks[0].attention.to_qkv.weight),
        ("decoder", model.decoder.linear.weight),
    )
    return [
        finite_difference_check(f"loss.{name}", objective, parameter, generator, analytic_hook=analytic_hook)
        for name, parameter in checked
    ]


GRADCHECKS = (check_triplane, check_attention, check_dpt, check_full_loss)


def _all_checks(seed: int, analytic_hook: AnalyticHook | None) -> GradcheckReport:
    report = GradcheckReport()
    # modules draw their initial weights from the global generator
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        generator = torch.Generator().manual_seed(seed)
        for check in GRADCHECKS:
            report.results.extend(check(generator, analytic_hook))
    return report


def run_gradchecks(seed: int = 0, timeout_seconds: int = 0, analytic_hook: AnalyticHook | None = None) -> GradcheckReport:
    """
    Runs every gradient check and collects the results.

    Args:
        seed: :class:`int`
        timeout_seconds: :class:`int`
            Wall-clock cap for all checks together; 0 disables it. The cap uses signals and
            is not applied on Windows.
        analytic_hook: :class:`AnalyticHook | None`
            Transforms every analytic gradient before the comparison.

    Raises:
        TimeoutError: the checks exceeded `timeout_seconds`.
    """

    runner = _all_checks
    if timeout_seconds > 0 and os.name != "nt":
        runner = timeout(dec_timeout=timeout_seconds, use_signals=True, timeout_exception=TimeoutError)(_all_checks)
    report = runner(seed, analytic_hook)
    logger.info(f"gradient checks {'passed' if report.passed else 'failed'} ({len(report.results)} checks)")
    return report
