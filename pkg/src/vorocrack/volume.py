"""Raw little-endian volume files with a JSON sidecar.

Volumes are numpy arrays of shape ``(d1, d2, d3)`` in C order, so the flat
index of voxel ``(x, y, z)`` is ``(x * d2 + y) * d3 + z`` (x slowest).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError

FLAVORS = {
    "label": np.dtype("<i4"),
    "binary": np.dtype("u1"),
    "gray": np.dtype("<u2"),
}


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_suffix(path.suffix + ".json")


def save_volume(path: str | Path, data: np.ndarray, flavor: str, voxel_size: float = 1.0, **provenance: Any) -> None:
    if flavor not in FLAVORS:
        raise ConfigError(f"unknown volume flavor {flavor!r}")
    dtype = FLAVORS[flavor]
    arr = np.ascontiguousarray(data, dtype=dtype)
    if flavor == "binary" and np.any(arr > 1):
        raise ConfigError("binary volumes must only hold 0 and 1")
    Path(path).write_bytes(arr.tobytes(order="C"))
    meta = {
        "dims": list(arr.shape),
        "flavor": flavor,
        "dtype": dtype.str,
        "byte_order": "little",
        "layout": "C order, index = (x*d2 + y)*d3 + z, x slowest",
        "voxel_size": voxel_size,
        "provenance": provenance,
    }
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_volume(path: str | Path) -> tuple[np.ndarray, dict[str, Any]]:
    meta = json.loads(sidecar_path(path).read_text())
    dtype = np.dtype(meta["dtype"])
    data = np.frombuffer(Path(path).read_bytes(), dtype=dtype)
    dims = tuple(meta["dims"])
    if data.size != int(np.prod(dims)):
        raise ConfigError(f"{path}: expected {int(np.prod(dims))} voxels, found {data.size}")
    return data.reshape(dims).copy(), meta
