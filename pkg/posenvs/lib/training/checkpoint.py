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
Checkpoint files.

Layout: the 8 byte magic, a little-endian uint32 format version, a little-endian uint32
header length, a UTF-8 JSON header and the raw bytes of all named arrays. The header holds the
resolved config, its digest, the step counter, the optimizer hyperparameters, the scheduler
state, the sampler state, the loss history, a table of the arrays (name, dtype, shape, offset,
size) and the SHA-256 of the array payload.
"""

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import torch
from loguru import logger

from posenvs.lib.core.config import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from posenvs.lib.core.errors import CheckpointError, CheckpointVersionError
from posenvs.lib.core.utils import config_digest, torch_dtype
from posenvs.lib.model.network import ModelConfig, PoseViewSynthesizer

__all__ = ["Checkpoint", "TrainingState", "load_checkpoint", "read_checkpoint", "restore", "save_checkpoint"]

_PREAMBLE = struct.Struct("<8sII")
_TORCH_RNG = "rng/torch"


@dataclass(eq=False)
class TrainingState:
    model: PoseViewSynthesizer
    config: dict[str, Any]
    optimizer: torch.optim.Optimizer | None = None
    scheduler: torch.optim.lr_scheduler.LRScheduler | None = None
    step: int = 0
    sampler_state: dict[str, Any] | None = None
    history: list[tuple[int, float]] = field(default_factory=list)


@dataclass(eq=False)
class Checkpoint:
    header: dict[str, Any]
    arrays: dict[str, np.ndarray]

    @property
    def config(self) -> dict[str, Any]:
        return {key: tuple(value) if isinstance(value, list) else value for key, value in self.header["config"].items()}

    @property
    def step(self) -> int:
        return int(self.header["step"])


def _jsonable(config: dict[str, Any]) -> dict[str, Any]:
    return {key: list(value) if isinstance(value, tuple) else value for key, value in config.items()}


def _numpy(tensor: torch.Tensor) -> np.ndarray:
    return tensor.detach().cpu().contiguous().numpy()


def _collect_arrays(state: TrainingState) -> tuple[dict[str, np.ndarray], dict[str, Any] | None]:
    arrays = {f"model/{name}": _numpy(value) for name, value in state.model.state_dict().items()}
    optimizer_header = None
    if state.optimizer is not None:
        optimizer_state = state.optimizer.state_dict()
        scalars = dict()
        for index, entry in optimizer_state["state"].items():
            for key, value in entry.items():
                if isinstance(value, torch.Tensor):
                    arrays[f"optimizer/{index}/{key}"] = _numpy(value)
                else:
                    scalars[f"{index}/{key}"] = value
        optimizer_header = dict(param_groups=optimizer_state["param_groups"], scalars=scalars)
    arrays[_TORCH_RNG] = _numpy(torch.get_rng_state())
    return arrays, optimizer_header


def save_checkpoint(state: TrainingState, path: str | Path) -> Path:
    arrays, optimizer_header = _collect_arrays(state)
    table, chunks, offset = list(), list(), 0
    for name in sorted(arrays):
        data = arrays[name].tobytes()
        table.append(dict(name=name, dtype=str(arrays[name].dtype), shape=list(arrays[name].shape), offset=offset, nbytes=len(data)))
        chunks.append(data)
        offset += len(data)
    payload = b"".join(chunks)

    header = dict(
        arrays=table,
        config=_jsonable(state.config),
        digest=config_digest(state.config),
        history=[list(item) for item in state.history],
        optimizer=optimizer_header,
        payload_sha256=hashlib.sha256(payload).hexdigest(),
        sampler=state.sampler_state,
        scheduler=state.scheduler.state_dict() if state.scheduler is not None else None,
        step=state.step,
    )
    encoded = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(_PREAMBLE.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(encoded)))
        handle.write(encoded)
        handle.write(payload)
    logger.info(f"saved checkpoint of step {state.step} to {path}")
    return path


def read_checkpoint(path: str | Path) -> Checkpoint:
    """
    Reads and fully validates a checkpoint without touching any live state.

    Raises:
        CheckpointVersionError: for files written by another format version.
        CheckpointError: for unreadable, truncated or corrupted files.
    """

    try:
        raw = Path(path).read_bytes()
    except OSError as error:
        raise CheckpointError(f"cannot read checkpoint {path}: {error}") from error
    if len(raw) < _PREAMBLE.size:
        raise CheckpointError(f"{path} is too short to be a checkpoint")
    magic, version, header_length = _PREAMBLE.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint (bad magic)")
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(f"{path} has format version {version}, expected {CHECKPOINT_VERSION}")
    start = _PREAMBLE.size + header_length
    try:
        header = json.loads(raw[_PREAMBLE.size : start].decode("utf-8"))
        table = header["arrays"]
        expected_hash = header["payload_sha256"]
        missing = [key for key in ("config", "digest", "step") if key not in header]
    except (UnicodeDecodeError, ValueError, KeyError, TypeError) as error:
        raise CheckpointError(f"corrupt checkpoint header in {path}: {error}") from error
    if missing:
        raise CheckpointError(f"checkpoint header of {path} lacks {', '.join(missing)}")

    payload = raw[start:]
    if hashlib.sha256(payload).hexdigest() != expected_hash:
        raise CheckpointError(f"checkpoint payload of {path} does not match its hash")
    arrays = dict()
    try:
        for entry in table:
            chunk = payload[entry["offset"] : entry["offset"] + entry["nbytes"]]
            array = np.frombuffer(chunk, dtype=np.dtype(entry["dtype"])).reshape(entry["shape"])
            arrays[entry["name"]] = array.copy()
    except (KeyError, TypeError, ValueError) as error:
        raise CheckpointError(f"corrupt array table in {path}: {error}") from error
    return Checkpoint(header, arrays)


def restore(
    checkpoint: Checkpoint,
    model: PoseViewSynthesizer,
    optimizer: torch.optim.Optimizer | None = None,
    scheduler: torch.optim.lr_scheduler.LRScheduler | None = None,
    restore_rng: bool = False,
) -> None:
    """Loads the checkpoint into live objects after checking that every piece fits."""
    model_state = model.state_dict()
    stored = {name[len("model/") :]: array for name, array in checkpoint.arrays.items() if name.startswith("model/")}
    if set(stored) != set(model_state):
        raise CheckpointError("checkpoint parameters do not match the model")
    for name, value in model_state.items():
        if tuple(stored[name].shape) != tuple(value.shape):
            raise CheckpointError(f"parameter {name} has shape {stored[name].shape}, model expects {tuple(value.shape)}")

    optimizer_state = None
    if optimizer is not None:
        entry = checkpoint.header.get("optimizer")
        if entry is None:
            raise CheckpointError("checkpoint holds no optimizer state")
        state = dict()
        for name, array in checkpoint.arrays.items():
            if name.startswith("optimizer/"):
                _, index, key = name.split("/", 2)
                state.setdefault(int(index), dict())[key] = torch.from_numpy(array)
        for name, value in entry["scalars"].items():
            index, key = name.split("/", 1)
            state.setdefault(int(index), dict())[key] = value
        if len(entry["param_groups"]) != len(optimizer.param_groups):
            raise CheckpointError("checkpoint optimizer groups do not match")
        optimizer_state = dict(state=state, param_groups=entry["param_groups"])
    if scheduler is not None and checkpoint.header.get("scheduler") is None:
        raise CheckpointError("checkpoint holds no scheduler state")

    model.load_state_dict({name: torch.from_numpy(array) for name, array in stored.items()})
    if optimizer_state is not None:
        optimizer.load_state_dict(optimizer_state)
    if scheduler is not None:
        scheduler.load_state_dict(checkpoint.header["scheduler"])
    if restore_rng:
        torch.set_rng_state(torch.from_numpy(checkpoint.arrays[_TORCH_RNG]))


def load_checkpoint(path: str | Path) -> TrainingState:
    """Rebuilds the model stored in a checkpoint, in the precision it was trained with."""
    checkpoint = read_checkpoint(path)
    config = checkpoint.config
    if config_digest(config) != checkpoint.header["digest"]:
        raise CheckpointError(f"config digest of {path} does not match its config")
    model = PoseViewSynthesizer(ModelConfig.from_config(config)).to(torch_dtype(config.get("precision", "float32")))
    restore(checkpoint, model)
    model.eval()
    return TrainingState(
        model=model,
        config=config,
        step=checkpoint.step,
        sampler_state=checkpoint.header.get("sampler"),
        history=[(int(step), float(loss)) for step, loss in checkpoint.header.get("history", [])],
    )
