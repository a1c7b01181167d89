"""Multilevel framelet decomposition and reconstruction.

Both directions work on raw coefficient arrays laid out root-major with
z-order inside each root block, so one level step is a reshape to
sibling groups followed by a single matrix product: analysis applies
the columns of the left-inverse matrix, synthesis the rows of the
stacked [lowpass; highpass] matrix.  Work per step shrinks geometrically,
so a full decomposition is linear in the input length.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, FormatError, LevelRangeError
from .filterbank import FilterBank
from .signals import FACES, SphericalSignal

_SPHC_MAGIC = b"SPHC"


def infer_level(length: int, children: int, roots: int) -> int:
    """Level J with roots * children**J == length, or raise."""
    if length % roots:
        raise DimensionMismatch(f"length {length} not divisible by {roots} roots")
    per_root = length // roots
    level = 0
    while per_root > 1:
        if per_root % children:
            raise DimensionMismatch(
                f"length {length} is not {roots} * {children}**J for any J")
        per_root //= children
        level += 1
    return level


@dataclass(frozen=True)
class FrameletCoefficients:
    """Lowpass block plus per-level highpass planes.

    `highpass[j - coarse_level]` holds level j in shape (directions,
    blocks at level j); each direction plane is contiguous and in the
    same z-order as the signal.
    """

    coarse_level: int
    fine_level: int
    roots: int
    lowpass: np.ndarray
    highpass: tuple

    def __post_init__(self):
        if not 0 <= self.coarse_level < self.fine_level:
            raise LevelRangeError(
                f"need 0 <= coarse {self.coarse_level} < fine {self.fine_level}")
        object.__setattr__(self, "lowpass",
                           np.ascontiguousarray(self.lowpass, dtype=np.float64))
        object.__setattr__(self, "highpass",
                           tuple(np.ascontiguousarray(h, dtype=np.float64)
                                 for h in self.highpass))
        if len(self.highpass) != self.fine_level - self.coarse_level:
            raise DimensionMismatch("one highpass stack per level is required")

    def validate_for(self, bank: FilterBank) -> None:
        ell = bank.children
        if self.lowpass.shape != (self.roots * ell ** self.coarse_level,):
            raise DimensionMismatch(
                f"lowpass shape {self.lowpass.shape} wrong for level {self.coarse_level}")
        for j, planes in zip(range(self.coarse_level, self.fine_level), self.highpass):
            want = (bank.directions, self.roots * ell ** j)
            if planes.shape != want:
                raise DimensionMismatch(
                    f"level {j} highpass shape {planes.shape}, expected {want}")

    def level_planes(self, level: int) -> np.ndarray:
        return self.highpass[level - self.coarse_level]


def decompose(values: np.ndarray, bank: FilterBank, coarse_level: int,
              roots: int = FACES) -> FrameletCoefficients:
    """Run the analysis filter bank from the signal's level down to
    `coarse_level`.

    Each sibling group of ell values is mapped to one lowpass value and
    n highpass values through the columns of the bank's left inverse;
    groups are contiguous in z-order so the step is one reshape and one
    matmul.  Total work is O(len(values)).
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise DimensionMismatch("signal must be a flat array")
    fine = infer_level(values.shape[0], bank.children, roots)
    if not 0 <= coarse_level < fine:
        raise LevelRangeError(
            f"need 0 <= coarse {coarse_level} < fine {fine}")
    analysis_t = np.ascontiguousarray(bank.analysis.T)
    stacks = []
    current = values
    for level in range(fine - 1, coarse_level - 1, -1):
        grouped = current.reshape(-1, bank.children)
        # (n+1, groups): row 0 is the next lowpass, the rest are the
        # direction planes already in their storage layout.
        out = analysis_t @ grouped.T
        current = out[0]
        stacks.append(out[1:])
    stacks.reverse()
    return FrameletCoefficients(coarse_level, fine, roots, current, tuple(stacks))


def reconstruct(coeffs: FrameletCoefficients, bank: FilterBank) -> np.ndarray:
    """Run the synthesis filter bank back up to the fine level.

    Children of each block are the rows of [lowpass; highpass] applied
    to that block's lowpass value and its n detail values.
    """
    coeffs.validate_for(bank)
    current = coeffs.lowpass
    for level in range(coeffs.coarse_level, coeffs.fine_level):
        planes = coeffs.level_planes(level)
        children = planes.T @ bank.highpass  # (blocks, ell)
        children += current[:, np.newaxis] * bank.lowpass
        current = children.reshape(-1)
    return current


def decompose_signal(signal: SphericalSignal, bank: FilterBank,
                     coarse_level: int) -> FrameletCoefficients:
    return decompose(signal.values, bank, coarse_level, roots=FACES)


def reconstruct_signal(coeffs: FrameletCoefficients, bank: FilterBank,
                       peak: float, provenance: str = None) -> SphericalSignal:
    values = reconstruct(coeffs, bank)
    return SphericalSignal(coeffs.fine_level, values, peak, provenance)


def count_ops(fine_level: int, coarse_level: int, children: int,
              directions: int):
    """Exact additions and multiplications of the analysis kernel for
    one root block of children**fine_level values.

    Mirrors the level loop in :func:`decompose`: a sibling group costs
    (n+1)*ell multiplies and (n+1)*(ell-1) additions for the dense
    product with the left-inverse matrix.
    """
    if not 0 <= coarse_level < fine_level:
        raise LevelRangeError(
            f"need 0 <= coarse {coarse_level} < fine {fine_level}")
    adds = 0
    mults = 0
    per_group_mults = (directions + 1) * children
    per_group_adds = (directions + 1) * (children - 1)
    for level in range(fine_level - 1, coarse_level - 1, -1):
        groups = children ** level
        mults += groups * per_group_mults
        adds += groups * per_group_adds
    return adds, mults


# ---------------------------------------------------------------------------
# Coefficient container (magic SPHC)


def write_coefficients(coeffs: FrameletCoefficients, path) -> None:
    """Little-endian container: magic, version, coarse level, fine
    level, direction count, then the lowpass block and per level the
    direction planes."""
    with open(path, "wb") as fh:
        fh.write(_SPHC_MAGIC)
        n = coeffs.highpass[0].shape[0]
        fh.write(struct.pack("<IIII", 1, coeffs.coarse_level, coeffs.fine_level, n))
        fh.write(np.ascontiguousarray(coeffs.lowpass, dtype="<f8").tobytes())
        for planes in coeffs.highpass:
            fh.write(np.ascontiguousarray(planes, dtype="<f8").tobytes())


def read_coefficients(path) -> FrameletCoefficients:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _SPHC_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected SPHC")
        version, coarse, fine, n = struct.unpack("<IIII", fh.read(16))
        if version != 1:
            raise FormatError(f"{path}: unsupported version {version}")
        if not 0 <= coarse < fine:
            raise FormatError(f"{path}: bad level range {coarse}..{fine}")

        def read_block(count):
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise FormatError(f"{path}: truncated block")
            return np.frombuffer(raw, dtype="<f8").copy()

        lowpass = read_block(FACES * 4 ** coarse)
        stacks = []
        for level in range(coarse, fine):
            blocks = FACES * 4 ** level
            stacks.append(read_block(n * blocks).reshape(n, blocks))
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes")
    return FrameletCoefficients(coarse, fine, FACES, lowpass, tuple(stacks))
