"""Data model and trimmed elastic-net objective.

The loss keeps the h smallest squared residuals and divides by the full
sample size n, not by h (many LTS codebases divide by h; this one does
not).  Both penalty terms sum over every coefficient, including the
intercept, unless ``penalize_intercept`` is switched off.

All values here are immutable after construction and safe to share
across workers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateColumnError

__all__ = [
    "Dataset",
    "TrimPenaltyConfig",
    "TrimSet",
    "residuals",
    "trim_weights",
    "penalty_value",
    "objective",
    "trimmed_seminorm",
    "normalize_columns",
    "denormalize_coefficients",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def _check_beta(beta: np.ndarray, p: int) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1 or beta.shape[0] != p:
        raise ValueError(f"coefficient vector must have length {p}, got shape {beta.shape}")
    if not np.all(np.isfinite(beta)):
        raise ValueError("coefficient vector contains non-finite entries")
    return beta


@dataclass(frozen=True)
class Dataset:
    """Regression sample: design matrix with leading intercept column, plus response.

    Parameters
    ----------
    x : ndarray of shape (n, p)
        Design matrix whose first column is identically 1.
    y : ndarray of shape (n,)
        Response vector.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 2:
            raise ValueError("x must be a 2-D array")
        if y.ndim != 1:
            raise ValueError("y must be a 1-D array")
        n, p = x.shape
        if n < 1 or p < 2:
            raise ValueError(f"need n >= 1 and p >= 2, got n={n}, p={p}")
        if y.shape[0] != n:
            raise ValueError(f"x has {n} rows but y has length {y.shape[0]}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("x and y must be finite")
        if not np.all(x[:, 0] == 1.0):
            raise ValueError("first column of x must be identically 1 (intercept)")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @classmethod
    def from_features(cls, features: np.ndarray, y: np.ndarray) -> "Dataset":
        """Build a Dataset by prepending an intercept column to raw features."""
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features[:, None]
        ones = np.ones((features.shape[0], 1))
        return cls(np.hstack([ones, features]), y)


@dataclass(frozen=True)
class TrimPenaltyConfig:
    """Trimming size, penalty weights and solver tolerances.

    ``h`` is the number of squared residuals kept by the loss; the robust
    regime is ceil(n/2) <= h < n, and h = n is the untrimmed edge case.
    ``gamma`` is the exponent of the first penalty (objective evaluation
    supports gamma >= 1; the solvers require gamma == 1).
    """

    h: int
    lambda1: float = 0.0
    lambda2: float = 0.0
    gamma: float = 1.0
    tol: float = 1e-8
    max_iter: int = 10_000
    penalize_intercept: bool = True

    def __post_init__(self):
        if int(self.h) != self.h or self.h < 1:
            raise ValueError(f"h must be a positive integer, got {self.h}")
        object.__setattr__(self, "h", int(self.h))
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda1 and lambda2 must be nonnegative")
        if not (np.isfinite(self.lambda1) and np.isfinite(self.lambda2)):
            raise ValueError("lambda1 and lambda2 must be finite")
        if self.gamma < 1:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        object.__setattr__(self, "max_iter", int(self.max_iter))


@dataclass(frozen=True)
class TrimSet:
    """Subset of exactly h rows kept by the trimmed loss.

    ``indices`` are the sorted kept row indices; ``weights`` is the
    equivalent 0/1 vector of length n (the diagonal of the selection
    matrix), with weights[i] == 1 iff i is kept.
    """

    indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        w = np.asarray(self.weights, dtype=float)
        if idx.ndim != 1 or w.ndim != 1:
            raise ValueError("indices and weights must be 1-D")
        n = w.shape[0]
        if idx.size == 0 or idx.size > n:
            raise ValueError("need 1 <= h <= n kept rows")
        if np.any(idx < 0) or np.any(idx >= n):
            raise ValueError("row indices out of range")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("indices must be strictly increasing")
        expected = np.zeros(n)
        expected[idx] = 1.0
        if not np.array_equal(w, expected):
            raise ValueError("weights must be the 0/1 indicator of indices")
        idx_f = np.array(idx)
        idx_f.setflags(write=False)
        object.__setattr__(self, "indices", idx_f)
        object.__setattr__(self, "weights", _frozen(expected))

    @property
    def h(self) -> int:
        return self.indices.shape[0]

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def from_indices(cls, indices, n: int) -> "TrimSet":
        idx = np.sort(np.asarray(indices, dtype=int))
        w = np.zeros(n)
        w[idx] = 1.0
        return cls(idx, w)

    def same_rows(self, other: "TrimSet") -> bool:
        return self.n == other.n and np.array_equal(self.indices, other.indices)


def residuals(data: Dataset, beta: np.ndarray) -> np.ndarray:
    """Residual vector r_i = y_i - x_i @ beta."""
    beta = _check_beta(beta, data.p)
    return data.y - data.x @ beta


def trim_weights(residual_sq: np.ndarray, h: int) -> TrimSet:
    """Select the h smallest squared residuals.

    Ties at the h-th order statistic are broken by smallest row index, so
    the result is a deterministic function of the input vector.

    Parameters
    ----------
    residual_sq : ndarray of shape (n,)
        Squared residuals (any nonnegative values work).
    h : int
        Number of rows to keep, 1 <= h <= n.
    """
    rsq = np.asarray(residual_sq, dtype=float)
    if rsq.ndim != 1:
        raise ValueError("residual_sq must be 1-D")
    n = rsq.shape[0]
    if not (1 <= h <= n):
        raise ValueError(f"h must satisfy 1 <= h <= {n}, got {h}")
    # stable sort keeps equal values in index order, which is exactly the
    # lowest-index tie rule
    order = np.argsort(rsq, kind="stable")
    return TrimSet.from_indices(order[:h], n)


def penalty_value(beta: np.ndarray, cfg: TrimPenaltyConfig) -> float:
    """lambda1 * sum |beta_j|^gamma + lambda2 * sum beta_j^2, honoring intercept exemption."""
    beta = np.asarray(beta, dtype=float)
    if cfg.penalize_intercept:
        b = beta
    else:
        b = beta[1:]
    absb = np.abs(b)
    l1_part = float(np.sum(absb**cfg.gamma)) if cfg.gamma != 1.0 else float(np.sum(absb))
    return cfg.lambda1 * l1_part + cfg.lambda2 * float(np.sum(b * b))


def objective(data: Dataset, beta: np.ndarray, cfg: TrimPenaltyConfig) -> float:
    """Trimmed penalized objective at beta.

    Returns (1/n) * sum of the h smallest squared residuals plus the two
    penalty terms; the kept subset is recomputed from beta.  Note the
    divisor is n, not h.
    """
    r = residuals(data, beta)
    rsq = r * r
    trim = trim_weights(rsq, cfg.h)
    loss = float(np.sum(rsq[trim.indices])) / data.n
    return loss + penalty_value(beta, cfg)


def trimmed_seminorm(data: Dataset, delta: np.ndarray, trim: TrimSet) -> float:
    """(1/n) * sum over kept rows of (x_i @ delta)^2."""
    delta = _check_beta(delta, data.p)
    if trim.n != data.n:
        raise ValueError(f"trim set is over {trim.n} rows but data has {data.n}")
    z = data.x[trim.indices] @ delta
    return float(np.sum(z * z)) / data.n


def normalize_columns(data: Dataset) -> tuple[Dataset, np.ndarray]:
    """Rescale design columns so every column norm ratio ||x_j||_2 / sqrt(n) is <= 1.

    Only columns whose ratio exceeds 1 are shrunk (with a warning);
    compliant columns are never up-scaled.  The intercept column has
    ratio exactly 1 and is left alone.

    Returns
    -------
    (Dataset, ndarray)
        The rescaled dataset and the per-column scale factors applied,
        so that ``denormalize_coefficients`` maps coefficients fitted on
        the rescaled design back to the original scale.
    """
    norms = np.linalg.norm(data.x, axis=0) / np.sqrt(data.n)
    if np.any(norms == 0.0):
        bad = int(np.nonzero(norms == 0.0)[0][0])
        raise DegenerateColumnError(f"column {bad} is identically zero")
    scales = np.where(norms > 1.0, 1.0 / norms, 1.0)
    if np.all(scales == 1.0):
        return data, scales
    n_scaled = int(np.sum(scales < 1.0))
    warnings.warn(
        f"{n_scaled} design column(s) exceeded the unit norm ratio and were rescaled",
        UserWarning,
        stacklevel=2,
    )
    return Dataset(data.x * scales, data.y), scales


def denormalize_coefficients(beta: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """Map coefficients fitted on the rescaled design back to original units.

    If column j was multiplied by scales[j], the original-scale
    coefficient is scales[j] * beta_j, which leaves every prediction
    x_i @ beta unchanged.
    """
    beta = np.asarray(beta, dtype=float)
    scales = np.asarray(scales, dtype=float)
    if beta.shape != scales.shape:
        raise ValueError("beta and scales must have the same length")
    return beta * scales
