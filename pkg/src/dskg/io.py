"""Binary field snapshots and comma-separated time series.

Snapshot layout (all little-endian)::

    b"DSKG" | u32 version | u32 n | u32 N | f64 L | f64 t | f64[N^n] u | f64[N^n] u_t

Time series are plain text: a header naming the columns, then one row per
sample, every float printed with 17 significant digits, LF line endings.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .propagator import StateSnapshot
from .spectral import Field, Grid

MAGIC = b"DSKG"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")


class SnapshotFormatError(ValueError):
    pass


def encode_snapshot(snapshot: StateSnapshot) -> bytes:
    grid = snapshot.u.grid
    head = _HEADER.pack(MAGIC, VERSION, grid.n, grid.N, float(grid.L), float(snapshot.t))
    body = np.concatenate([snapshot.u.samples.ravel(), snapshot.ut.samples.ravel()])
    return head + body.astype("<f8").tobytes()


def decode_snapshot(data: bytes) -> StateSnapshot:
    if len(data) < _HEADER.size:
        raise SnapshotFormatError("file too short for a snapshot header")
    magic, version, n, N, L, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {version}")
    grid = Grid(n, N, L)
    size = N**n
    expected = _HEADER.size + 16 * size
    if len(data) != expected:
        raise SnapshotFormatError(f"expected {expected} bytes, got {len(data)}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(float)
    return StateSnapshot(t, Field(grid, body[:size].reshape(grid.shape)),
                         Field(grid, body[size:].reshape(grid.shape)))


def write_snapshot(path, snapshot: StateSnapshot) -> Path:
    path = Path(path)
    path.write_bytes(encode_snapshot(snapshot))
    return path


def read_snapshot(path) -> StateSnapshot:
    return decode_snapshot(Path(path).read_bytes())


def format_float(x: float) -> str:
    return "%.17g" % x


def format_timeseries(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} entries for {len(columns)} columns")
        lines.append(",".join(format_float(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def write_timeseries(path, columns, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(format_timeseries(columns, rows))
    return path


def read_timeseries(path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.rstrip("\n").split("\n")
    columns = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float)
    return columns, data.reshape(-1, len(columns))
