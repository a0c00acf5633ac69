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

import numpy as np
from loguru import logger

from posenvs.lib.body.proxy import BodyPose, ProxyMesh, SkeletonRig
from posenvs.lib.core.errors import BodyLoadError, InputFileError
from posenvs.lib.core.utils import dump_json, load_json

__all__ = ["load_external_body", "load_pose", "save_body", "save_pose"]


def save_body(mesh: ProxyMesh, rig: SkeletonRig, mesh_file: str | Path, rig_file: str | Path) -> None:
    dump_json(dict(V=mesh.canonical_vertices.tolist(), F=mesh.triangles.tolist()), mesh_file)
    dump_json(dict(J=rig.joints.tolist(), parents=rig.parents.tolist(), W=rig.skin_weights.tolist()), rig_file)


def _read(path: str | Path, keys: tuple[str, ...]) -> dict:
    try:
        record = load_json(path)
    except (OSError, ValueError) as error:
        raise BodyLoadError("schema violation", f"cannot read {path}: {error}") from error
    if not isinstance(record, dict) or any(key not in record for key in keys):
        raise BodyLoadError("schema violation", f"{path} needs the keys {', '.join(keys)}")
    return record


def _array(record: dict, key: str, dtype: type) -> np.ndarray:
    try:
        return np.asarray(record[key], dtype=dtype)
    except (TypeError, ValueError) as error:
        raise BodyLoadError("schema violation", f"{key!r} is not a numeric array") from error


def load_external_body(mesh_file: str | Path, rig_file: str | Path) -> tuple[ProxyMesh, SkeletonRig]:
    """
    Loads a body in the mesh/rig JSON schema and checks every mesh and rig invariant.

    Raises:
        BodyLoadError: naming the failing invariant; nothing is returned on failure.
    """

    mesh_record = _read(mesh_file, ("V", "F"))
    rig_record = _read(rig_file, ("J", "parents", "W"))
    mesh = ProxyMesh(_array(mesh_record, "V", np.float64), _array(mesh_record, "F", np.int64))
    rig = SkeletonRig(
        _array(rig_record, "J", np.float64), _array(rig_record, "parents", np.int64), _array(rig_record, "W", np.float64)
    )
    mesh.validate()
    rig.validate(mesh.num_vertices)
    logger.debug(f"loaded body with {mesh.num_vertices} vertices and {rig.num_joints} joints from {mesh_file}")
    return mesh, rig


def save_pose(pose: BodyPose, path: str | Path) -> None:
    dump_json(pose.to_json(), path)


def load_pose(path: str | Path) -> BodyPose:
    path = Path(path)
    if not path.is_file():
        raise InputFileError(f"pose file {path} does not exist")
    try:
        record = load_json(path)
        return BodyPose(np.asarray(record["theta"], dtype=np.float64), np.asarray(record["t"], dtype=np.float64))
    except (KeyError, TypeError, ValueError) as error:
        raise InputFileError(f"malformed pose file {path}: {error}") from error
