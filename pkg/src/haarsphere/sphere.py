"""Equal-area quadtree partition of the 2-sphere.

One cube face is parametrized by the square [-1,1]^2 through the radial
chart (x, y) -> (x, y, 1)/sqrt(x^2+y^2+1); the other five faces reuse
the same rectangles under fixed rotations.  Every split solves for the
interior coordinates that make all four children cover the same
spherical area, using the closed-form patch area (an arctan expression)
and bisection, so no quadrature happens at build time.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import struct

import numpy as np

from .errors import (
    BracketError,
    DepthLimitError,
    DomainError,
    FormatError,
)

FACE_AREA = 2.0 * np.pi / 3.0  # solid angle of one cube face, 4*pi/6
MAX_DEPTH = 12
_BISECT_WIDTH = 1e-14

# Rotations carrying the +z chart onto the six face centers
# (+z, +x, -x, +y, -y, -z).  All are signed permutations with det 1, so
# they preserve spherical area exactly.
FACE_ROTATIONS = np.array([
    [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
    [[0, 0, 1], [1, 0, 0], [0, 1, 0]],
    [[0, 0, -1], [-1, 0, 0], [0, 1, 0]],
    [[-1, 0, 0], [0, 0, 1], [0, 1, 0]],
    [[1, 0, 0], [0, 0, -1], [0, 1, 0]],
    [[1, 0, 0], [0, -1, 0], [0, 0, -1]],
], dtype=np.float64)


def square_to_sphere(x, y):
    """Map parameter-square points onto the +z face of the unit sphere.

    Accepts scalars or arrays; returns unit vectors stacked on the last
    axis.  Raises DomainError for points outside [-1,1]^2.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(np.abs(x) > 1.0 + 1e-12) or np.any(np.abs(y) > 1.0 + 1e-12):
        raise DomainError("point outside the parameter square [-1,1]^2")
    norm = np.sqrt(x * x + y * y + 1.0)
    return np.stack([x / norm, y / norm, 1.0 / norm], axis=-1)


def _corner_term(a, b):
    # Mixed antiderivative of the area density (x^2+y^2+1)^(-3/2).
    return np.arctan(a * b / np.sqrt(a * a + b * b + 1.0))


def patch_area(x_l, x_r, y_b, y_t):
    """Spherical area of the chart image of [x_l,x_r] x [y_b,y_t].

    Closed form: inclusion-exclusion of arctan(ab/sqrt(a^2+b^2+1)) over
    the four corners.  Vectorized over array inputs.
    """
    return (_corner_term(x_r, y_t) - _corner_term(x_l, y_t)
            - _corner_term(x_r, y_b) + _corner_term(x_l, y_b))


@dataclass(frozen=True)
class ParamRect:
    """Axis-aligned rectangle in the parameter square."""

    x_l: float
    x_r: float
    y_b: float
    y_t: float

    def __post_init__(self):
        if not (self.x_l < self.x_r and self.y_b < self.y_t):
            raise DomainError(f"degenerate rectangle {self}")
        for v in (self.x_l, self.x_r, self.y_b, self.y_t):
            if abs(v) > 1.0 + 1e-12:
                raise DomainError(f"rectangle leaves the parameter square: {self}")

    @property
    def area(self) -> float:
        return float(patch_area(self.x_l, self.x_r, self.y_b, self.y_t))

    def as_array(self) -> np.ndarray:
        return np.array([self.x_l, self.x_r, self.y_b, self.y_t])


def _bisect_area(area_of, lo, hi, target):
    """Vectorized bisection for area_of(t) == target, strictly increasing.

    `lo`, `hi`, `target` are equal-length arrays; the bracket must
    satisfy area_of(lo) < target < area_of(hi).  Final interval width
    <= 1e-14.
    """
    lo = np.array(lo, dtype=np.float64)
    hi = np.array(hi, dtype=np.float64)
    f_lo = area_of(lo)
    f_hi = area_of(hi)
    if np.any(f_lo >= target) or np.any(f_hi <= target):
        raise BracketError("equal-area target not bracketed; invalid rectangle")
    for _ in range(64):
        if np.max(hi - lo) <= _BISECT_WIDTH:
            break
        mid = 0.5 * (lo + hi)
        below = area_of(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _split_arrays(rects: np.ndarray, target: float):
    """Split each rect (rows x_l,x_r,y_b,y_t) into 4 equal-area children.

    Returns an array of shape (4*len, 4) with children interleaved in
    quadtree order: left-bottom, right-bottom, left-top, right-top.
    """
    x_l, x_r, y_b, y_t = rects.T
    cut_x = _bisect_area(lambda t: patch_area(x_l, t, y_b, y_t),
                         x_l, x_r, 2.0 * target)
    cut_y1 = _bisect_area(lambda t: patch_area(x_l, cut_x, y_b, t),
                          y_b, y_t, target)
    cut_y2 = _bisect_area(lambda t: patch_area(cut_x, x_r, y_b, t),
                          y_b, y_t, target)
    children = np.empty((rects.shape[0], 4, 4), dtype=np.float64)
    children[:, 0] = np.stack([x_l, cut_x, y_b, cut_y1], axis=1)
    children[:, 1] = np.stack([cut_x, x_r, y_b, cut_y2], axis=1)
    children[:, 2] = np.stack([x_l, cut_x, cut_y1, y_t], axis=1)
    children[:, 3] = np.stack([cut_x, x_r, cut_y2, y_t], axis=1)
    return children.reshape(-1, 4)


def split_equal_area(rect: ParamRect, target_child_area: float):
    """Interior cut coordinates making four children of equal area.

    Returns (cut_x, cut_y_left, cut_y_right): the vertical cut and the
    two horizontal cuts of the left and right halves.  The rectangle's
    own area must equal 4 * target within 1e-9.
    """
    if abs(rect.area - 4.0 * target_child_area) > 1e-9:
        raise DomainError(
            f"rectangle area {rect.area:.12g} != 4 * {target_child_area:.12g}")
    children = _split_arrays(rect.as_array()[np.newaxis, :], target_child_area)
    cut_x = float(children[0, 1])
    cut_y1 = float(children[0, 3])
    cut_y2 = float(children[1, 3])
    return cut_x, cut_y1, cut_y2


@dataclass(frozen=True)
class PartitionTree:
    """Face-1 rectangles per level plus the six face rotations.

    `level_rects[j]` has shape (4**j, 4) with columns x_l, x_r, y_b,
    y_t, in quadtree order.  Immutable after build.
    """

    depth: int
    level_rects: tuple

    def __post_init__(self):
        for arr in self.level_rects:
            arr.setflags(write=False)

    @property
    def rotations(self) -> np.ndarray:
        return FACE_ROTATIONS

    def rect(self, level: int, index: int) -> ParamRect:
        r = self.level_rects[level][index]
        return ParamRect(*r)

    def areas(self, level: int) -> np.ndarray:
        """Spherical areas of all face-1 blocks at a level."""
        x_l, x_r, y_b, y_t = self.level_rects[level].T
        return patch_area(x_l, x_r, y_b, y_t)

    def centers(self, level: int) -> np.ndarray:
        """Parameter-square midpoints of all face-1 blocks at a level."""
        rects = self.level_rects[level]
        return np.stack([0.5 * (rects[:, 0] + rects[:, 1]),
                         0.5 * (rects[:, 2] + rects[:, 3])], axis=1)

    def block_points(self, level: int) -> np.ndarray:
        """Sphere points of all block centers, shape (6, 4**level, 3)."""
        ctr = self.centers(level)
        face1 = square_to_sphere(ctr[:, 0], ctr[:, 1])
        return np.einsum("fij,bj->fbi", FACE_ROTATIONS, face1)


def build_partition(depth: int) -> PartitionTree:
    """Build the equal-area tree for face 1 down to `depth`.

    Splitting is vectorized per level; children depend only on their
    parent rectangle.  Depth is capped at 12 as a memory guard.
    """
    if depth < 0:
        raise DepthLimitError("depth must be nonnegative")
    if depth > MAX_DEPTH:
        raise DepthLimitError(f"depth {depth} exceeds the maximum {MAX_DEPTH}")
    levels = [np.array([[-1.0, 1.0, -1.0, 1.0]])]
    for j in range(depth):
        target = FACE_AREA / 4.0 ** (j + 1)
        levels.append(_split_arrays(levels[j], target))
    return PartitionTree(depth, tuple(levels))


@lru_cache(maxsize=4)
def cached_partition(depth: int) -> PartitionTree:
    """Shared immutable tree instances for repeat callers."""
    return build_partition(depth)


def locate(points: np.ndarray):
    """Face index (0-based) and parameter coordinates of sphere points.

    Each unit vector is assigned to the face of its largest-magnitude
    coordinate; ties sit on face boundaries and resolve to the first
    matching face in (+z, +x, -x, +y, -y, -z) order.
    """
    points = np.asarray(points, dtype=np.float64)
    ax, ay, az = np.abs(points[..., 0]), np.abs(points[..., 1]), np.abs(points[..., 2])
    faces = np.empty(points.shape[:-1], dtype=np.int64)
    z_major = (az >= ax) & (az >= ay)
    x_major = ~z_major & (ax >= ay)
    y_major = ~z_major & ~x_major
    faces[z_major] = np.where(points[..., 2][z_major] >= 0, 0, 5)
    faces[x_major] = np.where(points[..., 0][x_major] >= 0, 1, 2)
    faces[y_major] = np.where(points[..., 1][y_major] >= 0, 3, 4)
    local = np.einsum("...ji,...j->...i", FACE_ROTATIONS[faces], points)
    params = local[..., :2] / local[..., 2:3]
    return faces, params


# ---------------------------------------------------------------------------
# Partition cache file (magic SPHP)

_SPHP_MAGIC = b"SPHP"


def write_partition(tree: PartitionTree, path) -> None:
    """Binary little-endian cache: magic, version, depth, then per level
    the face-1 rectangles as 4 float64 each in quadtree order."""
    with open(path, "wb") as fh:
        fh.write(_SPHP_MAGIC)
        fh.write(struct.pack("<II", 1, tree.depth))
        for level in range(tree.depth + 1):
            arr = np.ascontiguousarray(tree.level_rects[level], dtype="<f8")
            fh.write(arr.tobytes())


def read_partition(path) -> PartitionTree:
    """Read a cache written by :func:`write_partition`."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _SPHP_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected SPHP")
        version, depth = struct.unpack("<II", fh.read(8))
        if version != 1:
            raise FormatError(f"{path}: unsupported version {version}")
        if depth > MAX_DEPTH:
            raise FormatError(f"{path}: depth {depth} exceeds maximum {MAX_DEPTH}")
        levels = []
        for j in range(depth + 1):
            count = 4 ** j
            raw = fh.read(count * 4 * 8)
            if len(raw) != count * 4 * 8:
                raise FormatError(f"{path}: truncated at level {j}")
            levels.append(np.frombuffer(raw, dtype="<f8").reshape(count, 4).copy())
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes")
    return PartitionTree(depth, tuple(levels))
