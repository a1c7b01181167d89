"""Haar-type tight framelet filter banks on hierarchical partitions.

A bank couples a highpass matrix (one row per framelet direction, one
column per child block), a strictly positive unit lowpass weight vector,
and an analysis matrix that is a left inverse of the stacked synthesis
matrix.  Tightness means the highpass matrix reproduces itself through
its own Gram triple product up to the frame bound.

Two generic constructions are provided (stacked distinct permutations of
a zero-sum vector, and scaled products of column-orthonormal factors)
plus the concrete banks used throughout: the quad Haar basis, the
classical dyadic pair, the 3-child simplex bank, a non-equal-area
example, and the 6x4 spherical bank with frame bound 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .errors import (
    DimensionMismatch,
    FormatError,
    InvalidFilterBank,
    NotOrthonormal,
    NotZeroSum,
    RankDeficient,
)

# Absolute max-norm tolerance for all matrix identities.  Shipped banks
# are exact rationals times square roots, so doubles leave headroom.
IDENTITY_TOL = 1e-12


def validate_tight(highpass: np.ndarray, bound: float) -> bool:
    """Check the tight-frame identity  H = (1/bound) H H^T H.

    Parameters
    ----------
    highpass : ndarray, shape (n, ell)
        Framelet coefficient matrix, one row per direction.
    bound : float
        Candidate frame bound, > 0.

    Returns
    -------
    bool
        True iff the identity holds entrywise within 1e-12.
    """
    highpass = np.asarray(highpass, dtype=np.float64)
    if highpass.size == 0:
        raise DimensionMismatch("highpass matrix is empty")
    if bound <= 0:
        raise InvalidFilterBank(f"frame bound must be positive, got {bound}")
    triple = highpass @ highpass.T @ highpass
    return float(np.max(np.abs(highpass - triple / bound))) <= IDENTITY_TOL


def validate_left_inverse(analysis: np.ndarray, lowpass: np.ndarray,
                          highpass: np.ndarray) -> bool:
    """Check  analysis @ [lowpass^T; highpass] == identity within 1e-12.

    `analysis` is ell x (n+1), `lowpass` length ell, `highpass` n x ell.
    An empty highpass (n = 0) is allowed; the stacked matrix is then the
    lowpass row alone.
    """
    analysis = np.asarray(analysis, dtype=np.float64)
    lowpass = np.asarray(lowpass, dtype=np.float64)
    highpass = np.asarray(highpass, dtype=np.float64)
    if lowpass.ndim != 1:
        raise DimensionMismatch("lowpass weights must be a vector")
    ell = lowpass.shape[0]
    if highpass.ndim != 2 or highpass.shape[1] != ell:
        raise DimensionMismatch(
            f"highpass must have {ell} columns, got shape {highpass.shape}")
    n = highpass.shape[0]
    if analysis.shape != (ell, n + 1):
        raise DimensionMismatch(
            f"analysis must have shape ({ell}, {n + 1}), got {analysis.shape}")
    stacked = np.vstack([lowpass[np.newaxis, :], highpass])
    resid = analysis @ stacked - np.eye(ell)
    return float(np.max(np.abs(resid))) <= IDENTITY_TOL


@dataclass(frozen=True)
class FilterBank:
    """Immutable filter bank validated at construction.

    Fields
    ------
    highpass : (n, ell) framelet coefficients.
    lowpass : (ell,) strictly positive, unit 2-norm weights.
    analysis : (ell, n+1) left inverse of the synthesis stack.
    bound : frame bound, > 0.
    """

    highpass: np.ndarray
    lowpass: np.ndarray
    analysis: np.ndarray
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "highpass",
                           np.ascontiguousarray(self.highpass, dtype=np.float64))
        object.__setattr__(self, "lowpass",
                           np.ascontiguousarray(self.lowpass, dtype=np.float64))
        object.__setattr__(self, "analysis",
                           np.ascontiguousarray(self.analysis, dtype=np.float64))
        object.__setattr__(self, "bound", float(self.bound))
        self._check()
        self.highpass.setflags(write=False)
        self.lowpass.setflags(write=False)
        self.analysis.setflags(write=False)

    def _check(self):
        if not validate_tight(self.highpass, self.bound):
            raise InvalidFilterBank("tight-frame identity violated")
        if not validate_left_inverse(self.analysis, self.lowpass, self.highpass):
            raise InvalidFilterBank("left-inverse identity violated")
        if np.any(self.lowpass <= 0):
            raise InvalidFilterBank("lowpass weights must be strictly positive")
        if abs(np.linalg.norm(self.lowpass) - 1.0) > IDENTITY_TOL:
            raise InvalidFilterBank("lowpass weights must have unit 2-norm")
        leak = float(np.max(np.abs(self.highpass @ self.lowpass)))
        if leak > IDENTITY_TOL:
            raise InvalidFilterBank(
                f"highpass rows must annihilate the lowpass weights (|Hp|={leak:.2e})")

    @property
    def children(self) -> int:
        """Number of child blocks per parent (ell)."""
        return self.lowpass.shape[0]

    @property
    def directions(self) -> int:
        """Number of framelets per block (n)."""
        return self.highpass.shape[0]

    @property
    def synthesis(self) -> np.ndarray:
        """The stacked synthesis matrix [lowpass^T; highpass], (n+1) x ell."""
        return np.vstack([self.lowpass[np.newaxis, :], self.highpass])


@dataclass(frozen=True)
class PartitionSchema:
    """Uniform branching description of a hierarchical partition.

    `fractions` are the child-area shares of every split (all equal to
    1/branching in the area-regular case); their square roots are the
    lowpass weights of Haar banks living on the partition.
    """

    branching: int
    depth: int
    fractions: tuple = field(default=None)

    def __post_init__(self):
        if self.branching < 2:
            raise DimensionMismatch("branching must be at least 2")
        if self.depth < 0:
            raise DimensionMismatch("depth must be nonnegative")
        if self.fractions is None:
            object.__setattr__(
                self, "fractions",
                tuple(1.0 / self.branching for _ in range(self.branching)))
        else:
            object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))
        if len(self.fractions) != self.branching:
            raise DimensionMismatch("need one area fraction per child")
        if abs(sum(self.fractions) - 1.0) > IDENTITY_TOL:
            raise InvalidFilterBank("child area fractions must sum to 1")

    def lowpass_weights(self) -> np.ndarray:
        """Square roots of the child-area fractions."""
        return np.sqrt(np.asarray(self.fractions, dtype=np.float64))


def check_orthonormal_basis(bank: FilterBank) -> bool:
    """True iff the bank generates an orthonormal basis: bound 1 and
    every framelet row of unit norm (unit diagonal of the row Gram)."""
    if abs(bank.bound - 1.0) > IDENTITY_TOL:
        return False
    gram_diag = np.sum(bank.highpass * bank.highpass, axis=1)
    return float(np.max(np.abs(gram_diag - 1.0))) <= IDENTITY_TOL


def pseudo_inverse_analysis(lowpass: np.ndarray, highpass: np.ndarray) -> np.ndarray:
    """Moore-Penrose left inverse of the synthesis stack via normal equations.

    The stack has full column rank for any valid bank, so
    (S^T S)^{-1} S^T is well defined and reproduces the printed analysis
    matrices of the shipped banks exactly (to rounding).
    """
    stacked = np.vstack([np.asarray(lowpass, dtype=np.float64)[np.newaxis, :],
                         np.asarray(highpass, dtype=np.float64)])
    gram = stacked.T @ stacked
    return np.linalg.solve(gram, stacked.T)


def recover_bound(highpass: np.ndarray) -> float:
    """Recover the frame bound from  H H^T H = bound * H.

    Uses the first entry of magnitude > 1e-9 (row-major order), then
    verifies the scaling globally.
    """
    highpass = np.asarray(highpass, dtype=np.float64)
    triple = highpass @ highpass.T @ highpass
    anchors = np.argwhere(np.abs(highpass) > 1e-9)
    if anchors.size == 0:
        raise InvalidFilterBank("cannot recover a frame bound from a zero matrix")
    k, i = anchors[0]
    bound = float(triple[k, i] / highpass[k, i])
    if bound <= 0 or not validate_tight(highpass, bound):
        raise InvalidFilterBank(
            f"matrix is not tight for any single bound (candidate {bound})")
    return bound


def build_from_permutations(generator) -> FilterBank:
    """Bank whose highpass rows are all distinct permutations of `generator`.

    The generator must sum to zero and its distinct permutations must
    span the ell-1 dimensional zero-sum subspace.  Rows are sorted
    lexicographically for determinism; lowpass weights are uniform
    (equal-area split) and the analysis matrix is the pseudo-inverse.
    """
    w = np.asarray(generator, dtype=np.float64)
    if w.ndim != 1 or w.size < 2:
        raise DimensionMismatch("generator must be a vector of length >= 2")
    ell = w.size
    if ell > 8:
        raise DimensionMismatch("generator longer than 8 is not supported")
    if abs(float(w.sum())) > IDENTITY_TOL:
        raise NotZeroSum(f"generator entries sum to {w.sum():.3e}, expected 0")
    rows = sorted(set(permutations(w.tolist())))
    highpass = np.array(rows, dtype=np.float64)
    if np.linalg.matrix_rank(highpass) != ell - 1:
        raise RankDeficient(
            f"permutations of the generator have rank != {ell - 1}")
    bound = recover_bound(highpass)
    lowpass = np.full(ell, 1.0 / math.sqrt(ell))
    analysis = pseudo_inverse_analysis(lowpass, highpass)
    return FilterBank(highpass, lowpass, analysis, bound)


def build_from_uv(left: np.ndarray, right: np.ndarray, lowpass: np.ndarray,
                  scale: float, complete: bool = False) -> FilterBank:
    """Bank with highpass (1/sqrt(scale)) * right @ left^T.

    `left` (ell x m) and `right` (n x m) must have orthonormal columns
    and the resulting highpass must annihilate `lowpass`.  The stored
    frame bound is recovered from the matrix itself (it equals 1/scale;
    for the shipped example scale = 1 so they coincide).

    When m < ell - 1 the product rows span too small a detail space and
    no left inverse of the stacked matrix exists.  With `complete` the
    missing directions are appended as scaled orthonormal rows (signs
    fixed by a positive leading entry); otherwise this raises.
    """
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    lowpass = np.asarray(lowpass, dtype=np.float64)
    if left.ndim != 2 or right.ndim != 2 or left.shape[1] != right.shape[1]:
        raise DimensionMismatch("factors must share their column count")
    ell, m = left.shape
    n = right.shape[0]
    if not (n + 1 >= ell >= m):
        raise DimensionMismatch(f"need n+1 >= ell >= m, got n={n}, ell={ell}, m={m}")
    for name, factor in (("left", left), ("right", right)):
        resid = factor.T @ factor - np.eye(m)
        if float(np.max(np.abs(resid))) > IDENTITY_TOL:
            raise NotOrthonormal(f"{name} factor columns are not orthonormal")
    highpass = (right @ left.T) / math.sqrt(scale)
    leak = float(np.max(np.abs(highpass @ lowpass)))
    if leak > IDENTITY_TOL:
        raise InvalidFilterBank(
            f"highpass does not annihilate the lowpass weights (|Hp|={leak:.2e})")
    bound = recover_bound(highpass)
    stacked = np.vstack([lowpass[np.newaxis, :], highpass])
    missing = ell - np.linalg.matrix_rank(stacked)
    if missing:
        if not complete:
            raise RankDeficient(
                f"detail rows plus lowpass span only {ell - missing} of {ell} "
                "child directions; no left inverse exists (pass complete=True "
                "to append the missing directions)")
        highpass = np.vstack([highpass, _complement_rows(stacked, missing, bound)])
    analysis = pseudo_inverse_analysis(lowpass, highpass)
    return FilterBank(highpass, lowpass, analysis, bound)


def _complement_rows(stacked: np.ndarray, missing: int, bound: float) -> np.ndarray:
    """Scaled orthonormal basis of the subspace `stacked` rows miss."""
    _, _, vt = np.linalg.svd(stacked)
    rows = vt[-missing:]
    signs = np.sign(rows[np.arange(missing), np.argmax(np.abs(rows) > 1e-9, axis=1)])
    return math.sqrt(bound) * rows * signs[:, np.newaxis]


# ---------------------------------------------------------------------------
# Shipped banks


def quad_haar_bank() -> FilterBank:
    """4-child orthonormal Haar bank (sign patterns of the 2x2 tensor basis)."""
    highpass = 0.5 * np.array([
        [1, 1, -1, -1],
        [1, -1, 1, -1],
        [1, -1, -1, 1],
    ], dtype=np.float64)
    lowpass = np.full(4, 0.5)
    analysis = np.hstack([lowpass[:, np.newaxis], highpass.T])
    return FilterBank(highpass, lowpass, analysis, 1.0)


def dyadic_haar_bank() -> FilterBank:
    """Classical 2-child Haar orthonormal pair."""
    s = 1.0 / math.sqrt(2.0)
    highpass = np.array([[s, -s]])
    lowpass = np.array([s, s])
    analysis = np.hstack([lowpass[:, np.newaxis], highpass.T])
    return FilterBank(highpass, lowpass, analysis, 1.0)


def simplex_bank() -> FilterBank:
    """3-child bank from permutations of (2,-1,-1)/3; frame bound 1."""
    highpass = np.array([
        [2, -1, -1],
        [-1, 2, -1],
        [-1, -1, 2],
    ], dtype=np.float64) / 3.0
    lowpass = np.full(3, 1.0 / math.sqrt(3.0))
    analysis = pseudo_inverse_analysis(lowpass, highpass)
    return FilterBank(highpass, lowpass, analysis, 1.0)


def unequal_area_bank() -> FilterBank:
    """Non-equal-area 4-child bank built from orthonormal factors.

    The two-factor product spans a 2-dimensional detail space, one
    short of splitting the 4-child span, so a completing direction is
    appended; the first three highpass rows are the bare product.
    """
    sqrt5 = math.sqrt(5.0)
    left = np.array([
        [1.0 / sqrt5, 0.0],
        [-2.0 / sqrt5, 0.0],
        [0.0, 3.0 / 5.0],
        [0.0, -4.0 / 5.0],
    ])
    sqrt3 = math.sqrt(3.0)
    sqrt2 = math.sqrt(2.0)
    right = np.array([
        [1.0 / sqrt3, 1.0 / sqrt2],
        [1.0 / sqrt3, -1.0 / sqrt2],
        [1.0 / sqrt3, 0.0],
    ])
    lowpass = np.array([2.0, 1.0, 4.0, 3.0]) / math.sqrt(30.0)
    return build_from_uv(left, right, lowpass, 1.0, complete=True)


def spherical_bank() -> FilterBank:
    """The 6x4 directional bank used on the sphere partition; bound 2.

    Rows are pairwise child differences (horizontal, vertical, diagonal,
    anti-diagonal and the two mixed pairs), scaled to unit norm.  The
    analysis matrix [p, H^T/2] is the pseudo-inverse of the synthesis
    stack.
    """
    s = 1.0 / math.sqrt(2.0)
    highpass = np.array([
        [s, -s, 0, 0],
        [s, 0, -s, 0],
        [s, 0, 0, -s],
        [0, s, -s, 0],
        [0, s, 0, -s],
        [0, 0, s, -s],
    ])
    lowpass = np.full(4, 0.5)
    analysis = np.hstack([lowpass[:, np.newaxis], highpass.T / 2.0])
    return FilterBank(highpass, lowpass, analysis, 2.0)


def shipped_banks() -> dict:
    """All banks shipped with the package, keyed by name."""
    return {
        "quad_haar": quad_haar_bank(),
        "dyadic_haar": dyadic_haar_bank(),
        "simplex": simplex_bank(),
        "unequal_area": unequal_area_bank(),
        "spherical": spherical_bank(),
    }


# ---------------------------------------------------------------------------
# Filter-bank document (text key-value export consumed by the CNN package)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_bank_document(bank: FilterBank, path) -> None:
    """Write the key-value UTF-8 document: ell, n, c, A, p, Q.

    Numeric fields use 17 significant digits, which round-trips float64
    exactly; rewriting a parsed document is byte-identical.
    """
    lines = [
        f"ell {bank.children}",
        f"n {bank.directions}",
        f"c {_fmt(bank.bound)}",
        "A " + " ".join(_fmt(v) for v in bank.highpass.ravel()),
        "p " + " ".join(_fmt(v) for v in bank.lowpass),
        "Q " + " ".join(_fmt(v) for v in bank.analysis.ravel()),
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_bank_document(path) -> FilterBank:
    """Parse a filter-bank document written by :func:`write_bank_document`."""
    fields = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, _, rest = line.partition(" ")
            fields[key] = rest
    try:
        ell = int(fields["ell"])
        n = int(fields["n"])
        bound = float(fields["c"])
        highpass = np.array([float(v) for v in fields["A"].split()]).reshape(n, ell)
        lowpass = np.array([float(v) for v in fields["p"].split()])
        analysis = np.array([float(v) for v in fields["Q"].split()]).reshape(ell, n + 1)
    except (KeyError, ValueError) as exc:
        raise FormatError(f"malformed filter-bank document {path}: {exc}") from exc
    return FilterBank(highpass, lowpass, analysis, bound)
