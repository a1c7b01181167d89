"""Exception hierarchy shared across the package.

Each class corresponds to one failure mode the CLI maps to a distinct
exit code; library code raises these instead of bare ValueError so
callers can discriminate.
"""


class HaarError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(HaarError):
    """Operands have incompatible or empty shapes."""


class RankDeficient(HaarError):
    """A permutation-stacked highpass matrix does not have rank ell-1."""


class NotZeroSum(HaarError):
    """Generating vector entries do not sum to zero."""


class NotOrthonormal(HaarError):
    """Matrix columns expected to be orthonormal are not."""


class InvalidFilterBank(HaarError):
    """A filter-bank identity (tightness, left inverse, Ap=0, p>0) fails."""


class DomainError(HaarError):
    """A point or rectangle lies outside the parameter square."""


class BracketError(HaarError):
    """Bisection target is not bracketed by the interval endpoints."""


class DepthLimitError(HaarError):
    """Requested partition depth exceeds the supported maximum."""


class LevelRangeError(HaarError):
    """Decomposition levels violate 0 <= coarse < fine."""


class FormatError(HaarError):
    """A binary container or filter-bank document is malformed."""


class ImageError(HaarError):
    """An input image is empty, unreadable, or unsupported."""
