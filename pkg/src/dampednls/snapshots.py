"""Binary field snapshots.

Layout, all little-endian::

    int64    d                 computational dimension
    int64    n[d]              points per axis
    float64  L                 box length
    float64  t                 time
    int64    N                 problem dimension
    float64  alpha
    int64    mu
    float64  a
    float64  (re, im) pairs    row-major field values
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .model import Field, Grid, ProblemSpec


def write_snapshot(path, u: Field, spec: ProblemSpec) -> Path:
    g = u.grid
    path = Path(path)
    header = struct.pack("<q", g.d) + struct.pack(f"<{g.d}q", *g.shape)
    header += struct.pack("<ddqdqd", g.L, u.t, spec.N, float(spec.alpha), spec.mu, spec.a)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(u.values, dtype="<c16").tobytes())
    return path


def read_snapshot(path) -> tuple[Field, ProblemSpec]:
    raw = Path(path).read_bytes()
    (d,) = struct.unpack_from("<q", raw, 0)
    if d not in (1, 2, 3):
        raise ValueError(f"{path}: bad dimension {d} in snapshot header")
    offset = 8
    shape = struct.unpack_from(f"<{d}q", raw, offset)
    offset += 8 * d
    L, t, N, alpha, mu, a = struct.unpack_from("<ddqdqd", raw, offset)
    offset += 48
    if len(set(shape)) != 1:
        raise ValueError(f"{path}: only isotropic grids are supported, got {shape}")
    count = int(np.prod(shape))
    if len(raw) - offset != 16 * count:
        raise ValueError(f"{path}: expected {count} complex values, file has {(len(raw) - offset) / 16}")
    values = np.frombuffer(raw, dtype="<c16", count=count, offset=offset).reshape(shape)
    grid = Grid(L, shape[0], d)
    return Field(values, grid, t), ProblemSpec(int(N), alpha, int(mu), a)
