"""Binary snapshot format: bit-exact round trips and header validation."""

import json
import struct

import numpy as np
import pytest

from aniso.snapshots import MAGIC, VERSION, read_snapshot, write_snapshot
from aniso.spectral import Grid2D
from aniso.verify import random_field


def test_roundtrip_bit_exact(tmp_path, grid32):
    fields = [("v1", random_field(grid32, 1)), ("theta", random_field(grid32, 2))]
    path = tmp_path / "state.absf"
    write_snapshot(path, fields)
    grid, loaded = read_snapshot(path)
    assert grid == grid32
    assert list(loaded) == ["v1", "theta"]
    for name, f in fields:
        assert np.array_equal(loaded[name].coeffs, f.coeffs)


def test_rewrite_identical_bytes(tmp_path, grid16):
    fields = [("theta", random_field(grid16, 3))]
    a, b = tmp_path / "a.absf", tmp_path / "b.absf"
    write_snapshot(a, fields)
    write_snapshot(b, fields)
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.absf.json").read_text() == (tmp_path / "b.absf.json").read_text()


def test_header_layout(tmp_path, grid16):
    path = tmp_path / "s.absf"
    write_snapshot(path, [("f", random_field(grid16, 4))])
    raw = path.read_bytes()
    magic, version, n, box, count = struct.unpack_from("<4sIIdI", raw)
    assert magic == MAGIC and version == VERSION
    assert n == 16 and count == 1
    assert box == grid16.L
    assert len(raw) == 24 + 16 * 16 * 16


def test_sidecar_names(tmp_path, grid16):
    path = tmp_path / "s.absf"
    write_snapshot(path, [("a", random_field(grid16, 5)), ("b", random_field(grid16, 6))])
    side = json.loads((tmp_path / "s.absf.json").read_text())
    assert side["fields"] == ["a", "b"]


def test_bad_magic_rejected(tmp_path, grid16):
    path = tmp_path / "s.absf"
    write_snapshot(path, [("f", random_field(grid16, 7))])
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="magic"):
        read_snapshot(path)


def test_truncated_file_rejected(tmp_path, grid16):
    path = tmp_path / "s.absf"
    write_snapshot(path, [("f", random_field(grid16, 8))])
    path.write_bytes(path.read_bytes()[:-16])
    with pytest.raises(ValueError, match="bytes"):
        read_snapshot(path)


def test_grid_mismatch_between_fields(tmp_path, grid16, grid32):
    with pytest.raises(ValueError, match="different grid"):
        write_snapshot(tmp_path / "x.absf", [("a", random_field(grid16, 1)), ("b", random_field(grid32, 1))])


def test_nonstandard_box_roundtrip(tmp_path):
    grid = Grid2D(16, L=3.5)
    path = tmp_path / "s.absf"
    write_snapshot(path, [("f", random_field(grid, 9))])
    loaded_grid, _ = read_snapshot(path)
    assert loaded_grid.L == 3.5
