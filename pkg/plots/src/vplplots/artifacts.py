"""
Readers for the laboratory's on-disk artifact formats.

These parse the files as documented interfaces (CSV field maps with
'#'-prefixed headers, binary maps with JSON sidecars, vortex-set and
nodal-line JSON); nothing here imports the physics package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class ArtifactError(ValueError):
    """Missing, malformed, or mutually inconsistent artifact files."""


@dataclass
class MapArtifact:
    grid: dict
    values: np.ndarray  # (ny, nx) complex
    metadata: dict = field(default_factory=dict)

    @property
    def extent(self):
        g = self.grid
        return (g["x_min"], g["x_max"], g["y_min"], g["y_max"])

    def grid_signature(self):
        g = self.grid
        return (g["x_min"], g["x_max"], g["y_min"], g["y_max"], g["nx"], g["ny"], g["t"], g["z"])


def load_map(path) -> MapArtifact:
    path = str(path)
    if path.endswith(".bin"):
        return _load_binary(path)
    return _load_csv(path)


def _load_csv(path) -> MapArtifact:
    grid = None
    meta = {}
    rows = []
    try:
        fh = open(path)
    except OSError as exc:
        raise ArtifactError(f"cannot read map artifact {path!r}: {exc}") from exc
    with fh:
        for line in fh:
            if line.startswith("# grid "):
                grid = json.loads(line[len("# grid "):])
            elif line.startswith("# meta "):
                key, _, val = line[len("# meta "):].rstrip("\n").partition(" ")
                meta[key] = val
            elif line.startswith("#") or line.startswith("x,"):
                continue
            else:
                rows.append(line)
    if grid is None:
        raise ArtifactError(f"{path} lacks the '# grid' header")
    data = np.loadtxt(rows, delimiter=",")
    expected = grid["nx"] * grid["ny"]
    if data.shape != (expected, 6):
        raise ArtifactError(f"{path}: expected {expected} rows of 6 columns")
    values = (data[:, 2] + 1j * data[:, 3]).reshape(grid["ny"], grid["nx"])
    return MapArtifact(grid=grid, values=values, metadata=meta)


def _load_binary(path) -> MapArtifact:
    try:
        with open(path + ".json") as fh:
            sidecar = json.load(fh)
    except OSError as exc:
        raise ArtifactError(f"cannot read sidecar for {path!r}: {exc}") from exc
    values = np.fromfile(path, dtype=sidecar["dtype"]).reshape(*sidecar["shape"])
    return MapArtifact(grid=sidecar["grid"], values=values,
                       metadata=sidecar.get("metadata", {}))


def load_zeros(path) -> dict:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ArtifactError(f"cannot read zeros artifact {path!r}: {exc}") from exc
    if "zeros" not in payload:
        raise ArtifactError(f"{path} is not a vortex-set artifact")
    return payload


def load_nodal(path) -> dict:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ArtifactError(f"cannot read nodal artifact {path!r}: {exc}") from exc
    for part in ("real", "imag"):
        if part not in payload:
            raise ArtifactError(f"{path} lacks the '{part}' polylines")
    return payload


def check_consistent_grids(maps):
    sigs = {m.grid_signature() for m in maps}
    if len(sigs) > 1:
        raise ArtifactError(f"panel grids disagree: {sorted(sigs)}")
