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

import csv
from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import torch
import torch.nn as nn
from loguru import logger
from tqdm import tqdm

from posenvs.lib.core.errors import CheckpointError, NumericError
from posenvs.lib.core.utils import config_digest, dump_json, seed_everything, torch_dtype
from posenvs.lib.datagen.dataset import SceneDataset
from posenvs.lib.model.network import ModelConfig, PoseViewSynthesizer, ViewBatch
from posenvs.lib.training.checkpoint import TrainingState, read_checkpoint, restore, save_checkpoint
from posenvs.lib.training.loss import LossConfig, view_synthesis_loss
from posenvs.lib.training.perceptual import build_extractor

__all__ = ["CHECKPOINT_FILE", "Trainer", "build_optimizer", "train_step", "write_loss_curve"]

CHECKPOINT_FILE = "checkpoint.pnvs"
LOSS_CSV_FILE = "loss_curve.csv"
LOSS_PLOT_FILE = "loss_curve.png"
DIAGNOSTICS_FILE = "diagnostics.json"


def build_optimizer(
    model: nn.Module, lr: float, weight_decay: float, steps: int
) -> tuple[torch.optim.AdamW, torch.optim.lr_scheduler.CosineAnnealingLR]:
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr, weight_decay=weight_decay, foreach=False)
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=max(steps, 1))
    return optimizer, scheduler


def _diagnostics(model: nn.Module, loss: torch.Tensor, preds: torch.Tensor) -> dict[str, Any]:
    bad = [name for name, parameter in model.named_parameters() if not torch.isfinite(parameter).all()]
    return dict(
        loss=float(loss.detach()),
        non_finite_parameters=bad,
        prediction_min=float(torch.nan_to_num(preds.detach()).min()),
        prediction_max=float(torch.nan_to_num(preds.detach()).max()),
        non_finite_predictions=int((~torch.isfinite(preds.detach())).sum()),
    )


def train_step(
    model: PoseViewSynthesizer,
    optimizer: torch.optim.Optimizer,
    scheduler: torch.optim.lr_scheduler.LRScheduler | None,
    batch: ViewBatch,
    extractor: nn.Module | None,
    lambda_perc: float,
    clip_norm: float,
) -> float:
    """
    One end-to-end optimizer step over texture, embeddings, backbone and decoder.

    Raises:
        NumericError: when the loss or the gradient norm is not finite; no parameter is updated.
    """

    model.train()
    optimizer.zero_grad(set_to_none=True)
    preds = model(batch)
    loss = view_synthesis_loss(preds, batch.target_rgb, extractor, lambda_perc)
    if not torch.isfinite(loss):
        raise NumericError("non-finite loss", _diagnostics(model, loss, preds))
    loss.backward()
    grad_norm = torch.nn.utils.clip_grad_norm_(model.parameters(), clip_norm)
    if not torch.isfinite(grad_norm):
        optimizer.zero_grad(set_to_none=True)
        raise NumericError("non-finite gradient norm", dict(_diagnostics(model, loss, preds), grad_norm=float(grad_norm)))
    optimizer.step()
    if scheduler is not None:
        scheduler.step()
    return float(loss.detach())


def write_loss_curve(history: list[tuple[int, float]], directory: str | Path) -> tuple[Path, Path]:
    directory = Path(directory)
    csv_path, plot_path = directory / LOSS_CSV_FILE, directory / LOSS_PLOT_FILE
    with open(csv_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(("step", "loss"))
        writer.writerows((step, repr(loss)) for step, loss in history)

    figure, axes = plt.subplots(figsize=(6, 4))
    if history:
        steps, losses = zip(*history)
        axes.plot(steps, losses, linewidth=1.0)
        if min(losses) > 0:
            axes.set_yscale("log")
    axes.set_xlabel("step")
    axes.set_ylabel("loss")
    axes.grid(True, alpha=0.3)
    figure.tight_layout()
    figure.savefig(plot_path, dpi=120)
    plt.close(figure)
    return csv_path, plot_path


class Trainer:
    """
    Owns the model, optimizer, scheduler and batch sampler of one training run.

    Args:
        config: :class:`dict`
            Resolved train config.
        out: :class:`str | Path`
            Directory for checkpoints, loss curves and diagnostics.
    """

    def __init__(self, config: dict[str, Any], out: str | Path) -> None:
        self.config = config
        self.out = Path(out)
        self.dtype = torch_dtype(config["precision"])
        self.loss_config = LossConfig(config["lambda_perc"], config["target_views"])
        self.rng = seed_everything(config["seed"])
        self.model = PoseViewSynthesizer(ModelConfig.from_config(config)).to(self.dtype)
        self.extractor = None
        if self.loss_config.lambda_perc > 0:
            self.extractor = build_extractor(config["perceptual"], config["perceptual_seed"], config["vgg_weights"]).to(self.dtype)
        self.optimizer, self.scheduler = build_optimizer(self.model, config["lr"], config["weight_decay"], config["steps"])
        self.step = 0
        self.history: list[tuple[int, float]] = list()
        self._dataset: SceneDataset | None = None
        if config.get("resume"):
            self.resume(config["resume"])

    @property
    def dataset(self) -> SceneDataset:
        if self._dataset is None:
            self._dataset = SceneDataset(self.config["dataset"], "train", self.config["max_scenes"])
            logger.info(f"training on {len(self._dataset)} scenes from {self._dataset.root}")
        return self._dataset

    def state(self) -> TrainingState:
        return TrainingState(
            model=self.model,
            config=self.config,
            optimizer=self.optimizer,
            scheduler=self.scheduler,
            step=self.step,
            sampler_state=self.rng.bit_generator.state,
            history=list(self.history),
        )

    def resume(self, path: str | Path) -> None:
        checkpoint = read_checkpoint(path)
        if checkpoint.header["digest"] != config_digest(self.config):
            raise CheckpointError(f"{path} was trained with a different model config")
        restore(checkpoint, self.model, self.optimizer, self.scheduler, restore_rng=True)
        if checkpoint.header.get("sampler") is not None:
            self.rng.bit_generator.state = checkpoint.header["sampler"]
        self.step = checkpoint.step
        self.history = [(int(step), float(loss)) for step, loss in checkpoint.header.get("history", [])]
        logger.info(f"resumed from {path} at step {self.step}")

    def save(self, path: str | Path | None = None) -> Path:
        return save_checkpoint(self.state(), path or self.out / CHECKPOINT_FILE)

    def step_once(self) -> float:
        config = self.config
        batch = self.dataset.sample_batch(
            self.rng, config["batch"], config["input_views"], self.loss_config.target_views, config["animation_ratio"]
        ).to(self.dtype)
        loss = train_step(
            self.model, self.optimizer, self.scheduler, batch, self.extractor, self.loss_config.lambda_perc, config["clip_norm"]
        )
        self.step += 1
        self.history.append((self.step, loss))
        return loss

    def fit(self) -> Path:
        """Trains up to the configured step count and writes the final checkpoint and loss curve."""
        config = self.config
        self.out.mkdir(parents=True, exist_ok=True)
        progress = tqdm(range(self.step, config["steps"]), desc="train", initial=self.step, total=config["steps"])
        for _ in progress:
            try:
                loss = self.step_once()
            except NumericError as error:
                dump_json(dict(error.diagnostics, step=self.step + 1), self.out / DIAGNOSTICS_FILE)
                logger.error(f"{error} at step {self.step + 1}; diagnostics in {self.out / DIAGNOSTICS_FILE}")
                raise
            progress.set_postfix(loss=f"{loss:.5f}")
            if config["log_every"] > 0 and self.step % config["log_every"] == 0:
                logger.info(f"step {self.step}: loss {loss:.6f} lr {self.scheduler.get_last_lr()[0]:.2e}")
            if config["checkpoint_every"] > 0 and self.step % config["checkpoint_every"] == 0 and self.step < config["steps"]:
                self.save(self.out / f"checkpoint_{self.step:06d}.pnvs")

        path = self.save()
        write_loss_curve(self.history, self.out)
        if self.history:
            logger.info(f"final loss {self.history[-1][1]:.6f} (initial {self.history[0][1]:.6f})")
        return path
