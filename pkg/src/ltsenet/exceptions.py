"""Exception hierarchy shared across the package."""


class LtsEnetError(Exception):
    """Base class for all package-specific errors."""


class DegenerateColumnError(LtsEnetError, ValueError):
    """A design column is identically zero and cannot be normalized."""


class SubsetTooLargeError(LtsEnetError, ValueError):
    """The number of h-subsets exceeds the enumeration cap; use the C-step solver."""


class SolverError(LtsEnetError, RuntimeError):
    """An inner convex solve failed to converge within its iteration budget."""


class RankDeficiencyError(LtsEnetError, ValueError):
    """The trimmed Gram matrix is rank deficient; the low-dimensional bound is invalid."""


class UndefinedBoundError(LtsEnetError, ValueError):
    """The prediction bound is undefined because the true coefficient l1 norm is zero."""
