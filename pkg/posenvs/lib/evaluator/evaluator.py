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


from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import torch.nn as nn
from loguru import logger
from tqdm import tqdm

from posenvs.lib.core.config import Split, TargetMode
from posenvs.lib.core.errors import PreconditionError
from posenvs.lib.core.utils import config_digest, dump_json
from posenvs.lib.datagen.dataset import Scene, SceneDataset, evenly_spaced_views
from posenvs.lib.evaluator.inference import synthesize
from posenvs.lib.evaluator.metrics import nearest_view_baseline, perceptual_distance, psnr, ssim
from posenvs.lib.interfaces.records import MetricReport, MetricRow
from posenvs.lib.model.network import ModelConfig, PoseViewSynthesizer
from posenvs.lib.training.checkpoint import load_checkpoint
from posenvs.lib.training.perceptual import build_extractor

__all__ = ["Evaluator", "plot_metrics", "run_eval", "write_report"]

REPORT_JSON_FILE = "report.json"
REPORT_TABLE_FILE = "report.txt"
REPORT_PLOT_FILE = "metrics_vs_views.png"


class Evaluator:
    """
    Scores a model on the scenes of a dataset split.

    Args:
        model: :class:`PoseViewSynthesizer`
        dataset: :class:`SceneDataset`
        extractor: :class:`nn.Module`
            Frozen feature pyramid of the perc-dist metric.
        mode: :class:`TargetMode`
            Reconstruction scores the views of the input pose that are not inputs, animation
            scores every view of another pose of the same identity.
        baseline: :class:`bool`
            Also score the nearest input view as a prediction.
    """

    def __init__(
        self, model: PoseViewSynthesizer, dataset: SceneDataset, extractor: nn.Module, mode: TargetMode, baseline: bool = True
    ) -> None:
        self.model = model
        self.dataset = dataset
        self.extractor = extractor
        self.mode = mode
        self.baseline = baseline

    def targets(self, position: int, chosen: np.ndarray) -> tuple[Scene, np.ndarray] | None:
        """The scene holding the target views and their indices, or None when the scene has no targets."""
        scene = self.dataset.scene(position)
        if self.mode == TargetMode.Reconstruction:
            remaining = np.setdiff1d(np.arange(scene.num_views), chosen)
            return (scene, remaining) if remaining.size else None

        others = self.dataset.other_poses(position)
        if not others:
            return None
        later = [other for other in others if other > position]
        target_scene = self.dataset.scene(later[0] if later else others[0])
        return target_scene, np.arange(target_scene.num_views)

    def score_scene(self, position: int, views: int) -> list[MetricRow]:
        scene = self.dataset.scene(position)
        chosen = evenly_spaced_views(scene.num_views, views)
        picked = self.targets(position, chosen)
        if picked is None:
            logger.debug(f"{self.dataset.records[position].path} has no {self.mode.key} targets for {views} views")
            return list()
        target_scene, indices = picked

        predictions = synthesize(self.model, scene.select(chosen), target_scene.select(indices))
        input_cameras = [scene.cameras[view] for view in chosen]
        rows = list()
        for prediction, view in zip(predictions, indices):
            gt, mask = target_scene.rgb[view], target_scene.masks[view]
            if not mask.any():
                logger.debug(f"skipping view {view} of {target_scene.directory}: empty mask")
                continue
            baseline = None
            if self.baseline:
                _, nearest = nearest_view_baseline(scene.rgb[chosen], input_cameras, target_scene.cameras[view])
                baseline = psnr(nearest, gt, mask)
            rows.append(
                MetricRow(
                    scene=self.dataset.records[position].path,
                    view=int(view),
                    input_views=views,
                    psnr=psnr(prediction, gt, mask),
                    ssim=ssim(prediction, gt, mask),
                    perc_dist=perceptual_distance(prediction, gt, self.extractor),
                    baseline_psnr=baseline,
                )
            )
        return rows

    def evaluate(self, views: int) -> list[MetricRow]:
        if views < 1:
            raise PreconditionError(f"at least one input view is needed, got {views}")
        rows = list()
        for position in tqdm(range(len(self.dataset)), desc=f"eval {views} views", leave=False):
            rows.extend(self.score_scene(position, views))
        return rows


def run_eval(
    checkpoint: str | Path,
    dataset: str | Path,
    split: Split | str = Split.Test,
    mode: TargetMode | str = TargetMode.Reconstruction,
    views: tuple[int, ...] = (4,),
    perceptual: str = "surrogate",
    perceptual_seed: int = 1234,
    vgg_weights: str = "",
    max_scenes: int = 0,
    baseline: bool = True,
) -> MetricReport:
    """
    Evaluates a checkpoint on one split for every input view count in `views`.

    Returns:
        A :class:`MetricReport` with one group of rows per view count. The result depends only
        on the checkpoint, the dataset and the arguments.
    """

    split = Split.from_key(split) if isinstance(split, str) else split
    mode = TargetMode.from_key(mode) if isinstance(mode, str) else mode
    if not views or min(views) < 1:
        raise PreconditionError(f"input view counts must be >= 1, got {tuple(views)}")

    state = load_checkpoint(checkpoint)
    dtype = next(state.model.parameters()).dtype
    extractor = build_extractor(perceptual, perceptual_seed, vgg_weights).to(dtype)
    evaluator = Evaluator(state.model, SceneDataset(dataset, split, max_scenes), extractor, mode, baseline)
    report = MetricReport(ModelConfig.from_config(state.config).label, split, mode, config_digest(state.config))
    for count in views:
        rows = evaluator.evaluate(count)
        if not rows:
            logger.warning(f"no {mode.key} targets scored with {count} input views")
        report.rows.extend(rows)
        logger.info(f"evaluated {len(rows)} images with {count} input views")
    return report


def plot_metrics(report: MetricReport, path: str | Path) -> Path:
    """PSNR (with the nearest-view baseline when present) and SSIM against the number of input views."""
    aggregates = report.aggregates()
    settings = list(aggregates)
    figure, (left, right) = plt.subplots(1, 2, figsize=(9, 3.5))
    for axes, metric, label in ((left, "psnr", report.label), (right, "ssim", report.label)):
        values = [aggregates[views][metric]["mean"] for views in settings if metric in aggregates[views]]
        axes.plot(settings[: len(values)], values, marker="o", label=label)
        axes.set_xlabel("input views")
        axes.set_ylabel(metric.upper())
        axes.grid(True, alpha=0.3)
    baseline = [aggregates[views]["baseline_psnr"]["mean"] for views in settings if "baseline_psnr" in aggregates[views]]
    if len(baseline) == len(settings) and settings:
        left.plot(settings, baseline, marker="s", linestyle="--", label="nearest input view")
    left.legend()
    figure.tight_layout()
    figure.savefig(path, dpi=120)
    plt.close(figure)
    return Path(path)


def write_report(report: MetricReport, directory: str | Path) -> tuple[Path, Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    json_path, table_path = directory / REPORT_JSON_FILE, directory / REPORT_TABLE_FILE
    dump_json(report.to_json(), json_path)
    table_path.write_text(report.to_table(), encoding="utf-8")
    plot_path = plot_metrics(report, directory / REPORT_PLOT_FILE)
    logger.info(f"wrote report for {len(report.rows)} images to {directory}")
    return json_path, table_path, plot_path
