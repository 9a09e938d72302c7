"""Binary field snapshots.

Layout (little endian): magic "ABSF", version u32, N u32, L f64,
field_count u32, then field_count blocks of N x N complex128 coefficients
in row-major k-order.  A JSON sidecar `<file>.json` names the fields in
block order.  Round trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Dict, Sequence, Tuple

import numpy as np

from .spectral import Grid2D, SpectralField

__all__ = ["write_snapshot", "read_snapshot", "MAGIC", "VERSION"]

MAGIC = b"ABSF"
VERSION = 1
_HEADER = struct.Struct("<4sIIdI")


def write_snapshot(path, fields: Sequence[Tuple[str, SpectralField]]) -> None:
    """Write named fields sharing one grid; sidecar goes to `<path>.json`."""
    if not fields:
        raise ValueError("snapshot needs at least one field")
    grid = fields[0][1].grid
    for name, f in fields:
        if f.grid != grid:
            raise ValueError(f"field {name!r} lives on a different grid")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, grid.N, grid.L, len(fields)))
        for _, f in fields:
            fh.write(np.ascontiguousarray(f.coeffs, dtype="<c16").tobytes())
    sidecar = {"format": MAGIC.decode(), "version": VERSION, "fields": [n for n, _ in fields]}
    with open(path.with_name(path.name + ".json"), "w") as fh:
        json.dump(sidecar, fh, sort_keys=True)
        fh.write("\n")


def read_snapshot(path) -> Tuple[Grid2D, Dict[str, SpectralField]]:
    """Read a snapshot back; returns the grid and fields keyed by name."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated snapshot header")
    magic, version, n, box, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    grid = Grid2D(n, box)
    block = n * n * 16
    expected = _HEADER.size + count * block
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    with open(path.with_name(path.name + ".json")) as fh:
        names = json.load(fh)["fields"]
    if len(names) != count:
        raise ValueError(f"{path}: sidecar names {len(names)} fields, file holds {count}")
    out: Dict[str, SpectralField] = {}
    for i, name in enumerate(names):
        start = _HEADER.size + i * block
        coeffs = np.frombuffer(raw[start : start + block], dtype="<c16").reshape(n, n)
        out[name] = SpectralField(grid, coeffs.copy())
    return grid, out
