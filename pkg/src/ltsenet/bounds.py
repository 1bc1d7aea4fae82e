"""Closed-form finite-sample bound quantities for the trimmed elastic net.

Everything here is a pure function of scalars or small arrays.  L always
enters through its logarithm (log_L = log C(n, h)); the binomial count
itself is never materialized since it overflows 64-bit integers long
before n reaches 100.

The tail quantiles depend on how the failure probability delta is split
across events.  With a known noise scale the split constant is 4; when
sigma is estimated from data a share of delta is spent on the estimate
and the constant becomes 6 (``sigma_estimated=True``).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaln

from .core import Dataset, TrimPenaltyConfig, TrimSet, penalty_value, residuals, trimmed_seminorm, trim_weights
from .exceptions import RankDeficiencyError, UndefinedBoundError

__all__ = [
    "log_binomial",
    "subgaussian_max_quantile",
    "chi_square_band_quantiles",
    "select_lambdas",
    "prediction_error_bound",
    "prediction_constant",
    "lasso_prediction_error_bound",
    "cone_slack",
    "cone_condition_gap",
    "trimmed_design",
    "incoherence_check",
    "worst_case_incoherence",
    "min_incoherence_k",
    "trimmed_mse",
    "estimation_bound_lowdim",
    "estimation_bound_highdim",
    "base_inequality_slack",
    "BoundInputs",
    "BoundReport",
    "compute_bound_report",
]


def _split_constant(sigma_estimated: bool) -> float:
    return 6.0 if sigma_estimated else 4.0


def log_binomial(n: int, h: int) -> float:
    """log C(n, h) via log-gamma."""
    if not (0 <= h <= n):
        raise ValueError(f"need 0 <= h <= n, got h={h}, n={n}")
    return float(gammaln(n + 1) - gammaln(h + 1) - gammaln(n - h + 1))


def _check_delta(delta: float) -> None:
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def subgaussian_max_quantile(
    sigma: float,
    n: int,
    p: int,
    log_L: float,
    delta: float,
    sigma_estimated: bool = False,
) -> float:
    """Quantile q1 = 2 sigma sqrt(2 log(4 p L / delta) / n).

    Dominates, with probability 1 - delta/2 jointly over all L kept-row
    patterns, the largest scaled correlation between the noise and any
    design column.
    """
    _check_delta(delta)
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    c = _split_constant(sigma_estimated)
    log_term = math.log(c) + math.log(p) + log_L - math.log(delta)
    return 2.0 * sigma * math.sqrt(2.0 * log_term / n)


def chi_square_band_quantiles(
    h: int,
    log_L: float,
    delta: float,
    sigma_estimated: bool = False,
) -> tuple[float, float]:
    """Quantiles (q2, q3) bounding chi-square(h) fluctuation around h.

    With t = log(4 L / delta):  q2 = 2 sqrt(t) (sqrt(h) + sqrt(t)) bounds
    the upside, and q3 = q2 - 2t = 2 sqrt(h t) bounds the downside.
    """
    _check_delta(delta)
    c = _split_constant(sigma_estimated)
    t = math.log(c) + log_L - math.log(delta)
    q2 = 2.0 * math.sqrt(t) * (math.sqrt(h) + math.sqrt(t))
    q3 = q2 - 2.0 * t
    return q2, q3


def select_lambdas(q1: float, lambda2: float | None = None) -> tuple[float, float]:
    """Penalty selection rule lambda1 = 2 q1 with lambda2 <= q1.

    ``lambda2`` defaults to q1, the largest admissible value; an explicit
    override (e.g. 0 for the pure-lasso estimation-bound regime) must not
    exceed q1.
    """
    if q1 <= 0:
        raise ValueError(f"q1 must be positive, got {q1}")
    lam1 = 2.0 * q1
    if lambda2 is None:
        return lam1, q1
    if lambda2 < 0 or lambda2 > q1:
        raise ValueError(f"lambda2 override must satisfy 0 <= lambda2 <= q1 = {q1}, got {lambda2}")
    return lam1, float(lambda2)


def prediction_constant(sigma: float, n: int, q1: float, q2: float, norm_beta0: float) -> float:
    """The constant 2 n q1 (2 + ||b0||_1) / sigma^2 + 2 q2 / ||b0||_1."""
    if norm_beta0 <= 0:
        raise UndefinedBoundError("the constant is undefined when ||beta0||_1 = 0")
    if sigma <= 0:
        raise ValueError("sigma must be positive for the constant form; use prediction_error_bound")
    return 2.0 * n * q1 * (2.0 + norm_beta0) / sigma**2 + 2.0 * q2 / norm_beta0


def prediction_error_bound(sigma: float, n: int, q1: float, q2: float, norm_beta0: float) -> float:
    """High-probability bound on the trimmed squared prediction error.

    Equals (sigma^2 / n) ||b0||_1 times ``prediction_constant``, expanded
    to 2 q1 ||b0||_1 (2 + ||b0||_1) + 2 sigma^2 q2 / n so that sigma = 0
    is handled without a 0/0.
    """
    if norm_beta0 < 0:
        raise ValueError("norm_beta0 must be nonnegative")
    if norm_beta0 == 0:
        raise UndefinedBoundError("prediction bound undefined when ||beta0||_1 = 0")
    return 2.0 * q1 * norm_beta0 * (2.0 + norm_beta0) + 2.0 * sigma**2 * q2 / n


def lasso_prediction_error_bound(sigma: float, n: int, lambda1: float, q2: float, norm_beta0: float) -> float:
    """Sharper form 2 lambda1 ||b0||_1 + 2 sigma^2 q2 / n available when lambda2 = 0."""
    if norm_beta0 <= 0:
        raise UndefinedBoundError("prediction bound undefined when ||beta0||_1 = 0")
    return 2.0 * lambda1 * norm_beta0 + 2.0 * sigma**2 * q2 / n


def cone_slack(sigma_hat: float, q2: float, n: int, lam: float) -> tuple[float, float]:
    """(eta, zeta) with eta = 4 sigma_hat^2 q2 / n and zeta = eta / lambda."""
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    eta = 4.0 * sigma_hat**2 * q2 / n
    return eta, eta / lam


def cone_condition_gap(
    beta_hat: np.ndarray,
    beta0: np.ndarray,
    support: np.ndarray,
    eta: float,
    lam: float,
) -> float:
    """||d_off||_1 - 3 ||d_on||_1 - eta/lambda for d = beta_hat - beta0.

    Nonpositive iff the error vector satisfies the slackened cone
    condition; ``support`` holds the 0-based coordinates of the true
    nonzeros.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    if beta_hat.shape != beta0.shape:
        raise ValueError("coefficient vectors must have equal length")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    p = beta_hat.shape[0]
    support = np.asarray(support, dtype=int)
    if support.size and (support.min() < 0 or support.max() >= p):
        raise ValueError("support indices out of range")
    mask = np.zeros(p, dtype=bool)
    mask[support] = True
    delta = beta_hat - beta0
    on = float(np.sum(np.abs(delta[mask])))
    off = float(np.sum(np.abs(delta[~mask])))
    return off - 3.0 * on - eta / lam


def trimmed_design(data: Dataset, trim: TrimSet) -> np.ndarray:
    """The n x p design with dropped rows zeroed (selection matrix times design)."""
    return data.x * trim.weights[:, None]


def incoherence_check(x_star: np.ndarray, k: int) -> tuple[float, bool]:
    """Largest entry of |X'X / n - I| and whether it is within 1/(32 k).

    ``x_star`` is the full-shape design with dropped rows zeroed, so the
    divisor is the total row count n, not the kept count.
    """
    if k < 1 or int(k) != k:
        raise ValueError(f"k must be a positive integer, got {k}")
    x_star = np.asarray(x_star, dtype=float)
    n, p = x_star.shape
    dev_mat = x_star.T @ x_star / n - np.eye(p)
    deviation = float(np.max(np.abs(dev_mat)))
    return deviation, deviation <= 1.0 / (32.0 * k)


def worst_case_incoherence(
    data: Dataset,
    h: int,
    k: int,
    enumerate_cap: int = 20_000,
    n_samples: int = 1_000,
    seed: int = 0,
) -> tuple[float, bool]:
    """Largest incoherence deviation over kept-row patterns of size h.

    Enumerates all C(n, h) patterns when that count is within
    ``enumerate_cap``; otherwise samples ``n_samples`` random patterns.
    """
    n = data.n
    worst = 0.0
    if math.comb(n, h) <= enumerate_cap:
        patterns = itertools.combinations(range(n), h)
    else:
        rng = np.random.default_rng(seed)
        patterns = (np.sort(rng.choice(n, size=h, replace=False)) for _ in range(n_samples))
    for idx in patterns:
        trim = TrimSet.from_indices(idx, n)
        dev, _ = incoherence_check(trimmed_design(data, trim), k)
        if dev > worst:
            worst = dev
    return worst, worst <= 1.0 / (32.0 * k)


def min_incoherence_k(p: int, s0: int) -> int:
    """Smallest admissible incoherence integer k >= max(s0, (p - s0)/20).

    Uses the conservative max form of the requirement.
    """
    if s0 < 0 or p < s0:
        raise ValueError("need 0 <= s0 <= p")
    return max(1, s0, math.ceil((p - s0) / 20.0))


def trimmed_mse(data: Dataset, beta_hat: np.ndarray, beta0: np.ndarray, trim: TrimSet) -> float:
    """Trimmed squared prediction error (1/n) sum over kept rows of (x_i @ (bhat - b0))^2."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    return trimmed_seminorm(data, beta_hat - beta0, trim)


def estimation_bound_lowdim(mse: float, x_star: np.ndarray) -> float:
    """mse / gamma_min(X'X / n); valid when the trimmed Gram matrix has full rank p."""
    x_star = np.asarray(x_star, dtype=float)
    n, p = x_star.shape
    a = x_star.T @ x_star / n
    eigs = np.linalg.eigvalsh(a)
    gamma_min = float(eigs[0])
    if p > n or gamma_min <= 1e-12 * max(1.0, float(eigs[-1])):
        raise RankDeficiencyError(
            f"trimmed Gram matrix is rank deficient (min eigenvalue {gamma_min:.3e}); bound invalid"
        )
    return mse / gamma_min


def estimation_bound_highdim(mse: float, k: int, zeta: float) -> float:
    """(8/3) mse + zeta^2 / (6 k); the incoherence-based estimation bound."""
    if k < 1 or int(k) != k:
        raise ValueError(f"k must be a positive integer, got {k}")
    return (8.0 / 3.0) * mse + zeta**2 / (6.0 * k)


def base_inequality_slack(
    data: Dataset,
    beta_hat: np.ndarray,
    beta0: np.ndarray,
    errors: np.ndarray,
    cfg: TrimPenaltyConfig,
) -> float:
    """Right minus left side of the trimmed basic inequality, term by term.

    The left side is the trimmed squared prediction error at the kept
    rows of beta_hat; the right side combines the noise/fit cross term,
    the difference of kept noise masses at beta0 versus beta_hat, and the
    penalty gap.  Nonnegative whenever beta_hat achieves an objective no
    worse than beta0, so a minimizer satisfies it deterministically.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if errors.shape != (data.n,):
        raise ValueError("errors must have length n")
    n = data.n
    trim_hat = trim_weights(residuals(data, beta_hat) ** 2, cfg.h)
    trim_0 = trim_weights(residuals(data, beta0) ** 2, cfg.h)
    delta = beta_hat - beta0
    lhs = trimmed_seminorm(data, delta, trim_hat)
    rows = trim_hat.indices
    cross = 2.0 / n * float(errors[rows] @ (data.x[rows] @ delta))
    noise_gap = (
        float(np.sum(errors[trim_0.indices] ** 2)) - float(np.sum(errors[rows] ** 2))
    ) / n
    pen_gap = penalty_value(beta0, cfg) - penalty_value(beta_hat, cfg)
    return cross + noise_gap + pen_gap - lhs


@dataclass(frozen=True)
class BoundInputs:
    """Scalar inputs from which every closed-form bound is computed."""

    n: int
    p: int
    h: int
    sigma: float
    delta: float
    beta0: np.ndarray
    log_L: float

    def __post_init__(self):
        _check_delta(self.delta)
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        lo = math.ceil(self.n / 2)
        if not (lo <= self.h <= self.n):
            raise ValueError(f"h must satisfy ceil(n/2) <= h <= n, got {self.h}")
        expected = log_binomial(self.n, self.h)
        if abs(self.log_L - expected) > 1e-12 * max(1.0, abs(expected)):
            raise ValueError(f"log_L = {self.log_L} does not match log C(n, h) = {expected}")
        object.__setattr__(self, "beta0", np.asarray(self.beta0, dtype=float))

    @classmethod
    def create(cls, n: int, p: int, h: int, sigma: float, delta: float, beta0) -> "BoundInputs":
        return cls(n=n, p=p, h=h, sigma=sigma, delta=delta, beta0=np.asarray(beta0, dtype=float), log_L=log_binomial(n, h))

    @property
    def norm_beta0(self) -> float:
        return float(np.sum(np.abs(self.beta0)))


@dataclass(frozen=True)
class BoundReport:
    """Every closed-form quantity plus the inputs that produced it.

    Data-dependent fields (mse, incoherence deviation, estimation bounds)
    are None when no fitted design was supplied.  ``delta_split`` records
    which delta-splitting constant set was used (4 known sigma, 6
    estimated).
    """

    n: int
    p: int
    h: int
    sigma: float
    delta: float
    norm_beta0: float
    log_L: float
    delta_split: float
    q1: float
    q2: float
    q3: float
    lambda1: float
    lambda2: float
    C_const: float | None
    prediction_bound: float
    lasso_prediction_bound: float | None
    eta: float
    zeta: float
    k: int | None
    incoherence_deviation: float | None
    incoherence_holds: bool | None
    mse: float | None
    estimation_bound: float | None
    estimation_bound_lowdim: float | None
    lasso_regime: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def compute_bound_report(
    inputs: BoundInputs,
    lambda2: float | None = None,
    sigma_estimated: bool = False,
    sigma_hat: float | None = None,
    k: int | None = None,
    x_star: np.ndarray | None = None,
    mse: float | None = None,
) -> BoundReport:
    """Assemble a full report from scalar inputs and optional fit artifacts.

    ``sigma_hat`` defaults to ``inputs.sigma`` (known-noise mode).  When a
    trimmed design ``x_star`` and realized ``mse`` are supplied together
    with ``k``, the incoherence check and estimation bounds are filled
    in; otherwise those fields stay None.
    """
    q1 = subgaussian_max_quantile(
        inputs.sigma, inputs.n, inputs.p, inputs.log_L, inputs.delta, sigma_estimated
    )
    q2, q3 = chi_square_band_quantiles(inputs.h, inputs.log_L, inputs.delta, sigma_estimated)
    lam1, lam2 = select_lambdas(q1, lambda2) if q1 > 0 else (0.0, 0.0 if lambda2 is None else lambda2)
    b = inputs.norm_beta0
    pred = prediction_error_bound(inputs.sigma, inputs.n, q1, q2, b)
    c_const = prediction_constant(inputs.sigma, inputs.n, q1, q2, b) if inputs.sigma > 0 else None
    lasso_regime = lam2 == 0.0
    lasso_bound = (
        lasso_prediction_error_bound(inputs.sigma, inputs.n, lam1, q2, b) if lasso_regime else None
    )
    s_hat = inputs.sigma if sigma_hat is None else sigma_hat
    if lam1 > 0:
        eta, zeta = cone_slack(s_hat, q2, inputs.n, lam1)
    else:
        eta, zeta = 0.0, 0.0
    deviation = holds = None
    est_hd = est_ld = None
    if x_star is not None and k is not None:
        deviation, holds = incoherence_check(x_star, k)
        if mse is not None and holds:
            est_hd = estimation_bound_highdim(mse, k, zeta)
        if mse is not None:
            try:
                est_ld = estimation_bound_lowdim(mse, x_star)
            except RankDeficiencyError:
                est_ld = None
    return BoundReport(
        n=inputs.n,
        p=inputs.p,
        h=inputs.h,
        sigma=inputs.sigma,
        delta=inputs.delta,
        norm_beta0=b,
        log_L=inputs.log_L,
        delta_split=_split_constant(sigma_estimated),
        q1=q1,
        q2=q2,
        q3=q3,
        lambda1=lam1,
        lambda2=lam2,
        C_const=c_const,
        prediction_bound=pred,
        lasso_prediction_bound=lasso_bound,
        eta=eta,
        zeta=zeta,
        k=k,
        incoherence_deviation=deviation,
        incoherence_holds=holds,
        mse=mse,
        estimation_bound=est_hd,
        estimation_bound_lowdim=est_ld,
        lasso_regime=lasso_regime,
    )
