"""Binary snapshots of a spectral field.

Layout (little-endian): magic b"BLGL", u32 version, i64 K, i64 J, f64 Ly,
f64 stretch, f64 t, then (re, im) f64 pairs for every coefficient in
xi-major, node-minor order.
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .errors import FormatError, TruncationError, VersionError
from .fields import Grid, SpectralField, stretched_nodes

MAGIC = b"BLGL"
VERSION = 1
_HEADER = struct.Struct("<4sIqqddd")


def encode_snapshot(f: SpectralField, t: float) -> bytes:
    g = f.grid
    head = _HEADER.pack(MAGIC, VERSION, g.K, g.J, g.Ly, g.stretch, float(t))
    body = np.ascontiguousarray(f.coeffs, dtype="<c16").tobytes()
    return head + body


def decode_snapshot(blob: bytes):
    """(field, t) from bytes; the size is checked before anything else is parsed."""
    if len(blob) < _HEADER.size:
        raise TruncationError(f"{len(blob)} bytes is shorter than the {_HEADER.size}-byte header")
    magic, version, K, J, Ly, stretch, t = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise VersionError(f"unsupported snapshot version {version} (expected {VERSION})")
    if K < 1 or J < 2:
        raise FormatError(f"bad grid descriptor K={K}, J={J}")
    need = _HEADER.size + (2 * K + 1) * J * 16
    if len(blob) != need:
        raise TruncationError(f"expected {need} bytes, found {len(blob)}")
    c = np.frombuffer(blob, dtype="<c16", offset=_HEADER.size).reshape(2 * K + 1, J)
    grid = Grid(K, J, Ly, stretch, stretched_nodes(J, Ly, stretch))
    return SpectralField(grid, c.astype(complex)), float(t)


def write_snapshot(path, f: SpectralField, t: float) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(encode_snapshot(f, t))
    os.replace(tmp, path)


def read_snapshot(path):
    with open(path, "rb") as fh:
        return decode_snapshot(fh.read())
