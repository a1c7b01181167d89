"""Spherical signals: sampling, serialization, and face rasters.

A signal at level J is one float64 value per partition block, stored
face-major with quadtree (z-order) indexing inside each face.  The
block order is the wire order of the SPHS container and the channel
order every transform in this package assumes.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, FormatError, ImageError
from .sphere import PartitionTree, cached_partition, square_to_sphere

FACES = 6


@dataclass(frozen=True)
class SphericalSignal:
    """Block values over the level-J partition, face-major, z-order.

    `peak` is the reference peak magnitude used for PSNR (kept from the
    clean source through noising).  `provenance` is a free-form note and
    is not serialized.
    """

    level: int
    values: np.ndarray
    peak: float
    provenance: str = None

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        expected = FACES * 4 ** self.level
        if values.shape != (expected,):
            raise DomainError(
                f"level {self.level} signal needs {expected} values, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("signal values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "peak", float(self.peak))
        values.setflags(write=False)

    def with_values(self, values: np.ndarray) -> "SphericalSignal":
        return SphericalSignal(self.level, values, self.peak, self.provenance)


# ---------------------------------------------------------------------------
# Quadtree (z-order) <-> raster grid index maps


@lru_cache(maxsize=16)
def _zorder_maps(level: int):
    """(rows, cols) of each z-order index in a 2**level square raster.

    Child digits pack one x-bit (0 left, 1 right) and one y-bit
    (0 bottom, 1 top) per level, most significant level first; raster
    rows run top to bottom.
    """
    side = 1 << level
    idx = np.arange(side * side, dtype=np.int64)
    cols = np.zeros_like(idx)
    ybot = np.zeros_like(idx)
    for t in range(level):
        digit = (idx >> (2 * t)) & 3
        cols |= (digit & 1) << t
        ybot |= ((digit >> 1) & 1) << t
    rows = side - 1 - ybot
    return rows, cols


@lru_cache(maxsize=16)
def _raster_to_zorder(level: int):
    """Permutation p with grid.ravel()[p[i]] = z-order value i inverse."""
    side = 1 << level
    rows, cols = _zorder_maps(level)
    flat = rows * side + cols
    inverse = np.empty_like(flat)
    inverse[flat] = np.arange(flat.size)
    return flat, inverse


def rasterize(signal: SphericalSignal) -> np.ndarray:
    """Arrange a signal as six 2^J x 2^J grids (top row first)."""
    side = 1 << signal.level
    flat, _ = _raster_to_zorder(signal.level)
    grids = np.empty((FACES, side * side))
    per_face = signal.values.reshape(FACES, side * side)
    grids[:, flat] = per_face
    return grids.reshape(FACES, side, side)


def derasterize(grids: np.ndarray, peak: float, provenance: str = None) -> SphericalSignal:
    """Inverse of :func:`rasterize`; exact round trip."""
    grids = np.asarray(grids, dtype=np.float64)
    if grids.ndim != 3 or grids.shape[0] != FACES or grids.shape[1] != grids.shape[2]:
        raise DomainError(f"expected (6, side, side) grids, got {grids.shape}")
    side = grids.shape[1]
    level = side.bit_length() - 1
    if 1 << level != side:
        raise DomainError(f"face side {side} is not a power of two")
    flat, _ = _raster_to_zorder(level)
    values = grids.reshape(FACES, side * side)[:, flat].reshape(-1)
    return SphericalSignal(level, values, peak, provenance)


def plane_to_grids(plane: np.ndarray, level: int) -> np.ndarray:
    """Rasterize one face-major z-order plane (no signal wrapper)."""
    side = 1 << level
    flat, _ = _raster_to_zorder(level)
    grids = np.empty((FACES, side * side))
    grids[:, flat] = plane.reshape(FACES, side * side)
    return grids.reshape(FACES, side, side)


def grids_to_plane(grids: np.ndarray) -> np.ndarray:
    side = grids.shape[1]
    level = side.bit_length() - 1
    flat, _ = _raster_to_zorder(level)
    return grids.reshape(FACES, side * side)[:, flat].reshape(-1)


# ---------------------------------------------------------------------------
# Equirectangular sampling


def _bilinear(grid: np.ndarray, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
    # Columns wrap in longitude, rows clamp at the poles.
    height, width = grid.shape
    x0 = np.floor(fx).astype(np.int64)
    y0 = np.floor(fy).astype(np.int64)
    wx = fx - x0
    wy = fy - y0
    x1 = (x0 + 1) % width
    x0 %= width
    y0c = np.clip(y0, 0, height - 1)
    y1c = np.clip(y0 + 1, 0, height - 1)
    top = grid[y0c, x0] * (1 - wx) + grid[y0c, x1] * wx
    bot = grid[y1c, x0] * (1 - wx) + grid[y1c, x1] * wx
    return top * (1 - wy) + bot * wy


def sample_equirect(grid: np.ndarray, level: int,
                    tree: PartitionTree = None) -> SphericalSignal:
    """Sample an equirectangular image at the level-J block centers.

    Longitude [-pi, pi) maps to columns left to right, latitude
    [pi/2, -pi/2] to rows top to bottom; values interpolate bilinearly
    between pixel centers.  The signal's peak is the grid's largest
    absolute value.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2 or grid.size == 0:
        raise ImageError("equirectangular grid must be a nonempty 2-D array")
    if tree is None or tree.depth < level:
        tree = cached_partition(level)
    height, width = grid.shape
    points = tree.block_points(level)  # (6, 4^J, 3)
    lon = np.arctan2(points[..., 1], points[..., 0])
    lat = np.arcsin(np.clip(points[..., 2], -1.0, 1.0))
    fx = (lon + np.pi) / (2.0 * np.pi) * width - 0.5
    fy = (0.5 * np.pi - lat) / np.pi * height - 0.5
    values = _bilinear(grid, fx.ravel(), fy.ravel())
    return SphericalSignal(level, values, float(np.max(np.abs(grid))))


# ---------------------------------------------------------------------------
# Signal container (magic SPHS)

_SPHS_MAGIC = b"SPHS"


def write_signal(signal: SphericalSignal, path) -> None:
    """Little-endian container: magic, version, level, face count,
    dtype tag (1 = float64), peak, then the value block."""
    with open(path, "wb") as fh:
        fh.write(_SPHS_MAGIC)
        fh.write(struct.pack("<IIIId", 1, signal.level, FACES, 1, signal.peak))
        fh.write(np.ascontiguousarray(signal.values, dtype="<f8").tobytes())


def read_signal(path) -> SphericalSignal:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _SPHS_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected SPHS")
        version, level, faces, dtype_tag = struct.unpack("<IIII", fh.read(16))
        if version != 1 or faces != FACES or dtype_tag != 1:
            raise FormatError(
                f"{path}: unsupported header (version={version}, faces={faces}, "
                f"dtype={dtype_tag})")
        (peak,) = struct.unpack("<d", fh.read(8))
        count = FACES * 4 ** level
        raw = fh.read(count * 8)
        if len(raw) != count * 8:
            raise FormatError(f"{path}: truncated value block")
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes")
        values = np.frombuffer(raw, dtype="<f8").copy()
    return SphericalSignal(level, values, peak)


# ---------------------------------------------------------------------------
# PGM raster export / import

def write_pgm(path, grid: np.ndarray) -> None:
    """8-bit binary PGM (P5, maxval 255) of one face raster.

    Values are mapped affinely from [min, max] to [0, 255]; a constant
    grid maps to 0.
    """
    grid = np.asarray(grid, dtype=np.float64)
    lo = float(grid.min())
    hi = float(grid.max())
    if hi > lo:
        scaled = np.round((grid - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros_like(grid)
    data = scaled.astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{grid.shape[1]} {grid.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read binary (P5) or ascii (P2) PGM into a float array."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    magic = tokens[0]
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise ImageError(f"{path}: bad PGM header") from exc
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        itemsize = 1 if maxval < 256 else 2
        raw = data[pos : pos + width * height * itemsize]
        if len(raw) != width * height * itemsize:
            raise ImageError(f"{path}: truncated PGM payload")
        dtype = np.uint8 if itemsize == 1 else ">u2"
        pixels = np.frombuffer(raw, dtype=dtype)
    elif magic == b"P2":
        pixels = np.array(data[pos:].split(), dtype=np.float64)
        if pixels.size != width * height:
            raise ImageError(f"{path}: ascii PGM pixel count mismatch")
    else:
        raise ImageError(f"{path}: not a PGM file (magic {magic!r})")
    return pixels.astype(np.float64).reshape(height, width)


def export_faces(signal: SphericalSignal, directory) -> list:
    """Write face1..face6.pgm plus a JSON sidecar with the value range."""
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    grids = rasterize(signal)
    paths = []
    for face in range(FACES):
        path = directory / f"face{face + 1}.pgm"
        write_pgm(path, grids[face])
        paths.append(path)
    sidecar = {
        "level": signal.level,
        "min": float(signal.values.min()),
        "max": float(signal.values.max()),
        "f_max": signal.peak,
    }
    with open(directory / "faces.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def load_image(path) -> np.ndarray:
    """Load a grayscale image (PGM natively, PNG via Pillow) as floats.

    Color inputs are rejected; the pipeline is grayscale only.
    """
    text = str(path)
    if text.lower().endswith((".pgm", ".pnm")):
        return read_pgm(path)
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover
        raise ImageError("Pillow is required for non-PGM images") from exc
    try:
        with Image.open(path) as img:
            if img.mode not in ("L", "I", "I;16", "F"):
                raise ImageError(
                    f"{path}: mode {img.mode} is not grayscale; convert first")
            return np.asarray(img, dtype=np.float64)
    except ImageError:
        raise
    except Exception as exc:
        raise ImageError(f"{path}: unreadable image ({exc})") from exc
