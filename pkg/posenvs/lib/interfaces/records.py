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

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from posenvs.lib.core.config import Split, TargetMode
from posenvs.lib.core.errors import InputFileError

__all__ = ["MetricReport", "MetricRow", "SceneRecord"]


@dataclass(frozen=True)
class SceneRecord:
    split: Split
    identity: int
    identity_seed: int
    pose: int
    path: str  # scene directory relative to the dataset root
    num_views: int
    height: int
    width: int
    files: dict[str, str] = field(default_factory=dict)  # path relative to the root -> sha256

    @property
    def key(self) -> str:
        return self.path

    def to_json(self) -> dict[str, Any]:
        return dict(
            split=self.split.key,
            identity=self.identity,
            identity_seed=self.identity_seed,
            pose=self.pose,
            path=self.path,
            num_views=self.num_views,
            height=self.height,
            width=self.width,
            files=dict(sorted(self.files.items())),
        )

    @classmethod
    def from_json(cls, record: dict[str, Any]) -> "SceneRecord":
        try:
            return cls(
                split=Split.from_key(record["split"]),
                identity=int(record["identity"]),
                identity_seed=int(record["identity_seed"]),
                pose=int(record["pose"]),
                path=str(record["path"]),
                num_views=int(record["num_views"]),
                height=int(record["height"]),
                width=int(record["width"]),
                files=dict(record.get("files", dict())),
            )
        except (KeyError, TypeError, ValueError) as error:
            raise InputFileError(f"malformed scene record: {error}") from error


@dataclass(frozen=True)
class MetricRow:
    scene: str
    view: int
    input_views: int
    psnr: float
    ssim: float
    perc_dist: float
    baseline_psnr: float | None = None

    def to_json(self) -> dict[str, Any]:
        return dict(
            scene=self.scene,
            view=self.view,
            input_views=self.input_views,
            psnr=self.psnr,
            ssim=self.ssim,
            perc_dist=self.perc_dist,
            baseline_psnr=self.baseline_psnr,
        )


_METRICS = ("psnr", "ssim", "perc_dist", "baseline_psnr")


@dataclass(eq=False)
class MetricReport:
    """
    Per-image metric rows of one evaluation plus aggregates that are always recomputed from
    the rows, grouped by the number of input views.
    """

    label: str
    split: Split
    mode: TargetMode
    config_digest: str
    rows: list[MetricRow] = field(default_factory=list)

    def settings(self) -> list[int]:
        return sorted({row.input_views for row in self.rows})

    def aggregates(self) -> dict[int, dict[str, dict[str, float]]]:
        result = dict()
        for views in self.settings():
            selected = [row for row in self.rows if row.input_views == views]
            result[views] = dict()
            for metric in _METRICS:
                values = np.asarray([getattr(row, metric) for row in selected if getattr(row, metric) is not None])
                if values.size:
                    # sorted so the sums do not depend on row order
                    values = np.sort(values)
                    result[views][metric] = dict(mean=float(np.mean(values)), std=float(np.std(values)), count=int(values.size))
        return result

    def row_label(self, views: int) -> str:
        return f"{self.label}, {views} view{'s' if views != 1 else ''}"

    def to_json(self) -> dict[str, Any]:
        return dict(
            label=self.label,
            split=self.split.key,
            mode=self.mode.key,
            config_digest=self.config_digest,
            rows=[row.to_json() for row in self.rows],
            aggregates={str(views): values for views, values in self.aggregates().items()},
        )

    def to_table(self) -> str:
        header = ("Method", "PSNR", "SSIM", "perc-dist", "NN-view PSNR")
        lines = list()
        for views, values in self.aggregates().items():
            cell = lambda metric, digits: f"{values[metric]['mean']:.{digits}f}" if metric in values else "-"
            lines.append((self.row_label(views), cell("psnr", 2), cell("ssim", 4), cell("perc_dist", 4), cell("baseline_psnr", 2)))
        widths = [max(len(line[column]) for line in [header] + lines) for column in range(len(header))]
        render = lambda line: "  ".join(value.ljust(width) for value, width in zip(line, widths)).rstrip()
        rule = "  ".join("-" * width for width in widths)
        title = f"# split={self.split.key} mode={self.mode.key} digest={self.config_digest[:12]}"
        return "\n".join([title, render(header), rule] + [render(line) for line in lines]) + "\n"
