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

import enum
from typing import Any, Callable, NamedTuple

__all__ = [
    "ALL_COMMANDS",
    "BACKGROUND_ATTRIBUTE",
    "BACKGROUND_RGB",
    "CHECKPOINT_MAGIC",
    "CHECKPOINT_VERSION",
    "CONFIG_FILE_NAME",
    "CONFIG_KEYS",
    "ConditionMode",
    "ConfigKey",
    "DecoderVariant",
    "ExitCode",
    "GRADCHECK_FLOOR",
    "GRADCHECK_TOLERANCE",
    "LAMBERT_AMBIENT",
    "LIGHT_DIRECTION",
    "MODEL_KEYS",
    "NEAR_PLANE",
    "PerceptualBackend",
    "PSNR_CAP",
    "SSIM_C1",
    "SSIM_C2",
    "SSIM_SIGMA",
    "SSIM_WINDOW",
    "SCENE_CACHE_SIZE",
    "Split",
    "TargetMode",
    "parse_bool",
    "parse_int_tuple",
]

# rasterizer constants
NEAR_PLANE = 1e-3
BACKGROUND_ATTRIBUTE = 0.0
BACKGROUND_RGB = 1.0
LAMBERT_AMBIENT = 0.2
LIGHT_DIRECTION = (0.35, 0.75, 0.55)  # world space, towards the light

# metric constants
PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2

GRADCHECK_TOLERANCE = 1e-4
GRADCHECK_FLOOR = 1e-3  # magnitude below which gradient errors count as absolute

CHECKPOINT_MAGIC = b"PNVSCKPT"
CHECKPOINT_VERSION = 1

SCENE_CACHE_SIZE = 64

CONFIG_FILE_NAME = "config.txt"


class ConditionMode(enum.IntEnum):
    PoseImage = 1
    PositionMap = 2
    NoCondition = 3

    @classmethod
    def from_key(cls, value: str) -> "ConditionMode":
        return {"pose_image": cls.PoseImage, "position_map": cls.PositionMap, "none": cls.NoCondition}[value]

    @property
    def key(self) -> str:
        return {1: "pose_image", 2: "position_map", 3: "none"}[self.value]


class DecoderVariant(enum.IntEnum):
    Linear = 1
    DPT = 2

    @classmethod
    def from_key(cls, value: str) -> "DecoderVariant":
        return {"linear": cls.Linear, "dpt": cls.DPT}[value]

    @property
    def key(self) -> str:
        return {1: "linear", 2: "dpt"}[self.value]


class TargetMode(enum.IntEnum):
    Reconstruction = 1
    Animation = 2

    @classmethod
    def from_key(cls, value: str) -> "TargetMode":
        return {"reconstruction": cls.Reconstruction, "animation": cls.Animation}[value]

    @property
    def key(self) -> str:
        return {1: "reconstruction", 2: "animation"}[self.value]


class Split(enum.IntEnum):
    Train = 1
    Val = 2
    Test = 3

    @classmethod
    def from_key(cls, value: str) -> "Split":
        return {"train": cls.Train, "val": cls.Val, "test": cls.Test}[value]

    @property
    def key(self) -> str:
        return {1: "train", 2: "val", 3: "test"}[self.value]


class PerceptualBackend(enum.IntEnum):
    Surrogate = 1
    VGG19 = 2

    @classmethod
    def from_key(cls, value: str) -> "PerceptualBackend":
        return {"surrogate": cls.Surrogate, "vgg19": cls.VGG19}[value]


class ExitCode(enum.IntEnum):
    Success = 0
    Failure = 1
    ConfigError = 2
    NumericFailure = 3


def parse_bool(value: str) -> bool:
    if isinstance(value, bool):
        return value
    lowered = str(value).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def parse_int_tuple(value: str) -> tuple[int, ...]:
    if isinstance(value, tuple):
        return value
    return tuple(int(part) for part in str(value).split(",") if part.strip())


def _choice(*choices: str) -> Callable[[str], str]:
    def parse(value: str) -> str:
        if value not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}, got {value!r}")
        return value

    return parse


class ConfigKey(NamedTuple):
    default: Any
    parse: Callable[[str], Any]
    help: str
    commands: tuple[str, ...]
    command_defaults: dict[str, Any] = dict()

    def default_for(self, command: str) -> Any:
        return self.command_defaults.get(command, self.default)


ALL_COMMANDS = ("gen-data", "train", "render", "animate", "eval", "gradcheck")
_DATA = ("gen-data",)
_MODEL = ("train",)
_INFER = ("render", "animate")
_CKPT = ("render", "animate", "eval")

CONFIG_KEYS: dict[str, ConfigKey] = {
    # shared
    "seed": ConfigKey(0, int, "Seed for every random generator of the command", ALL_COMMANDS),
    "out": ConfigKey("output", str, "Output directory", ALL_COMMANDS),
    "log_level": ConfigKey("INFO", _choice("DEBUG", "INFO", "WARNING", "ERROR"), "Log level", ALL_COMMANDS),
    # dataset factory
    "identities": ConfigKey(64, int, "Number of procedural identities", _DATA),
    "poses": ConfigKey(4, int, "Poses per identity", _DATA),
    "views": ConfigKey(12, int, "Views per pose", _DATA),
    "res": ConfigKey(
        64, int, "Image resolution (square); 0 keeps the scene resolution when rendering", _DATA + _INFER, dict(render=0, animate=0)
    ),
    "detail": ConfigKey(0, int, "Subdivision level of the procedural body", _DATA),
    "altitude_min": ConfigKey(-45.0, float, "Lowest camera altitude in degrees", _DATA),
    "altitude_max": ConfigKey(45.0, float, "Highest camera altitude in degrees", _DATA),
    "radius_min": ConfigKey(2.0, float, "Smallest camera distance to the origin", _DATA),
    "radius_max": ConfigKey(3.0, float, "Largest camera distance to the origin", _DATA),
    "fov": ConfigKey(55.0, float, "Vertical field of view in degrees", _DATA),
    "max_joint_angle": ConfigKey(60.0, float, "Largest per-joint rotation of sampled poses in degrees", _DATA),
    "val_fraction": ConfigKey(0.125, float, "Share of identities in the val split", _DATA),
    "test_fraction": ConfigKey(0.125, float, "Share of identities in the test split", _DATA),
    "workers": ConfigKey(1, int, "Worker processes generating scene records", _DATA),
    # model
    "patch": ConfigKey(8, int, "Patch side p in pixels", _MODEL),
    "dim": ConfigKey(128, int, "Token dimension d", _MODEL),
    "depth": ConfigKey(12, int, "Number of transformer blocks", _MODEL),
    "heads": ConfigKey(4, int, "Attention heads", _MODEL),
    "mlp_ratio": ConfigKey(4.0, float, "MLP hidden expansion", _MODEL),
    "texture_res": ConfigKey(64, int, "Triplane resolution H' = W'", _MODEL),
    "texture_channels": ConfigKey(16, int, "Triplane channels C per plane", _MODEL),
    "texture_std": ConfigKey(0.02, float, "Standard deviation of the triplane initialisation", _MODEL),
    "condition": ConfigKey("pose_image", _choice("pose_image", "position_map", "none"), "Pose condition", _MODEL),
    "decoder": ConfigKey("dpt", _choice("dpt", "linear"), "Image decoder", _MODEL),
    "fusion_channels": ConfigKey((128, 96, 64, 32), parse_int_tuple, "DPT stage widths, coarse to fine", _MODEL),
    # training
    "dataset": ConfigKey("dataset", str, "Dataset directory", ("train", "eval")),
    "steps": ConfigKey(2000, int, "Optimizer steps", _MODEL),
    "batch": ConfigKey(4, int, "Scenes per step", _MODEL),
    "input_views": ConfigKey(4, int, "Input views N", _MODEL + _INFER),
    "target_views": ConfigKey(4, int, "Target views M per scene", _MODEL),
    "lambda_perc": ConfigKey(1.0, float, "Perceptual loss weight", _MODEL),
    "lr": ConfigKey(3e-4, float, "Peak learning rate (cosine decayed)", _MODEL),
    "weight_decay": ConfigKey(0.01, float, "Decoupled weight decay", _MODEL),
    "clip_norm": ConfigKey(1.0, float, "Gradient norm clip threshold", _MODEL),
    "animation_ratio": ConfigKey(0.5, float, "Share of targets drawn from another pose", _MODEL),
    "log_every": ConfigKey(50, int, "Steps between loss log lines", _MODEL),
    "checkpoint_every": ConfigKey(500, int, "Steps between checkpoints", _MODEL),
    "precision": ConfigKey("float32", _choice("float32", "float64"), "Floating point precision", _MODEL),
    "resume": ConfigKey("", str, "Checkpoint to resume from", _MODEL),
    "perceptual": ConfigKey("surrogate", _choice("surrogate", "vgg19"), "Perceptual feature extractor", _MODEL + ("eval",)),
    "perceptual_seed": ConfigKey(1234, int, "Seed of the surrogate feature extractor", _MODEL + ("eval",)),
    "vgg_weights": ConfigKey("", str, "Local VGG-19 state dict for the vgg19 extractor", _MODEL + ("eval",)),
    "max_scenes": ConfigKey(0, int, "Only use the first scenes of the split (0 = all)", _MODEL + ("eval",)),
    # inference and evaluation
    "checkpoint": ConfigKey("", str, "Checkpoint file", _CKPT),
    "scene": ConfigKey("", str, "Scene record directory", _INFER),
    "cameras": ConfigKey("", str, "JSON list of target cameras (default: the scene cameras)", _INFER),
    "pose_file": ConfigKey("", str, "Pose JSON driving the animation", ("animate",)),
    "split": ConfigKey("test", _choice("train", "val", "test"), "Dataset split", ("eval",)),
    "mode": ConfigKey("reconstruction", _choice("reconstruction", "animation"), "Target mode", ("eval",)),
    "eval_views": ConfigKey((4,), parse_int_tuple, "Comma separated input view counts", ("eval",)),
    "baseline": ConfigKey(True, parse_bool, "Also score the nearest-input-view baseline", ("eval",)),
    "gradcheck_timeout": ConfigKey(120, int, "Seconds allowed for all gradient checks", ("gradcheck",)),
}

# keys that define the network; hashed into the config digest of checkpoints and reports
MODEL_KEYS = (
    "patch",
    "dim",
    "depth",
    "heads",
    "mlp_ratio",
    "texture_res",
    "texture_channels",
    "texture_std",
    "condition",
    "decoder",
    "fusion_channels",
    "lambda_perc",
    "precision",
)
