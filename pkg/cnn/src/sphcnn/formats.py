"""Readers for the core package's wire formats.

Implemented against the byte-level contracts: the SPHS signal container
(little-endian, magic SPHS, float64 values face-major in z-order) and
the key-value filter-bank document (fields ell, n, c, A, p, Q).  Face
rasters use the shared z-order convention: each level contributes one
x-bit (0 left) and one y-bit (0 bottom), rows top to bottom.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

FACES = 6


@dataclass(frozen=True)
class Signal:
    level: int
    values: np.ndarray
    peak: float


@dataclass(frozen=True)
class Bank:
    children: int
    directions: int
    bound: float
    highpass: np.ndarray  # (n, ell)
    lowpass: np.ndarray  # (ell,)
    analysis: np.ndarray  # (ell, n+1)

    @property
    def synthesis(self) -> np.ndarray:
        return np.vstack([self.lowpass[np.newaxis, :], self.highpass])


def read_signal(path) -> Signal:
    with open(path, "rb") as fh:
        if fh.read(4) != b"SPHS":
            raise ValueError(f"{path}: not an SPHS container")
        version, level, faces, dtype_tag = struct.unpack("<IIII", fh.read(16))
        if version != 1 or faces != FACES or dtype_tag != 1:
            raise ValueError(f"{path}: unsupported SPHS header")
        (peak,) = struct.unpack("<d", fh.read(8))
        count = FACES * 4 ** level
        raw = fh.read(count * 8)
        if len(raw) != count * 8:
            raise ValueError(f"{path}: truncated SPHS payload")
        values = np.frombuffer(raw, dtype="<f8").copy()
    return Signal(level, values, peak)


def read_bank(path) -> Bank:
    fields = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                key, _, rest = line.partition(" ")
                fields[key] = rest
    ell = int(fields["ell"])
    n = int(fields["n"])
    bound = float(fields["c"])
    highpass = np.array([float(v) for v in fields["A"].split()]).reshape(n, ell)
    lowpass = np.array([float(v) for v in fields["p"].split()])
    analysis = np.array([float(v) for v in fields["Q"].split()]).reshape(ell, n + 1)
    return Bank(ell, n, bound, highpass, lowpass, analysis)


@lru_cache(maxsize=16)
def _zorder_flat(level: int) -> np.ndarray:
    """Raster flat index of each z-order position in a 2**level grid."""
    side = 1 << level
    idx = np.arange(side * side, dtype=np.int64)
    cols = np.zeros_like(idx)
    ybot = np.zeros_like(idx)
    for t in range(level):
        digit = (idx >> (2 * t)) & 3
        cols |= (digit & 1) << t
        ybot |= ((digit >> 1) & 1) << t
    rows = side - 1 - ybot
    return rows * side + cols


def to_faces(signal: Signal) -> np.ndarray:
    """Face rasters (6, side, side) of a z-order signal."""
    side = 1 << signal.level
    flat = _zorder_flat(signal.level)
    grids = np.empty((FACES, side * side))
    grids[:, flat] = signal.values.reshape(FACES, side * side)
    return grids.reshape(FACES, side, side)


def from_faces(grids: np.ndarray) -> np.ndarray:
    """Z-order values of face rasters; inverse of :func:`to_faces`."""
    side = grids.shape[-1]
    level = side.bit_length() - 1
    flat = _zorder_flat(level)
    return grids.reshape(FACES, side * side)[:, flat].reshape(-1)
