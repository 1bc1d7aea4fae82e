"""Elastic-net least squares restricted to a fixed row subset.

This is the inner engine of both the exact and C-step trimmed solvers.
The loss keeps the (1/n) scaling of the outer objective (n = full sample
size, not the subset size) so subset minimizers compose exactly with it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, TrimSet, _check_beta

__all__ = ["SubproblemSolution", "soft_threshold", "kkt_residual", "solve_enet_on_subset"]


@dataclass
class SubproblemSolution:
    """Outcome of one restricted convex solve.

    ``kkt_residual`` is always recomputed by an independent gradient
    evaluation after the solver finishes; ``converged`` implies it is
    within the requested tolerance.  ``used_min_norm`` flags the
    unpenalized rank-deficient case, which is solved by minimum-norm
    least squares instead of descent.
    """

    beta: np.ndarray
    kkt_residual: float
    iterations: int
    converged: bool
    used_min_norm: bool = False
    objective_path: list[float] = field(default_factory=list)


def soft_threshold(z: float, t: float) -> float:
    """sign(z) * max(|z| - t, 0); the scalar l1 proximal map."""
    if t < 0:
        raise ValueError(f"threshold must be nonnegative, got {t}")
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def _penalty_vectors(p: int, lambda1: float, lambda2: float, penalize_intercept: bool):
    l1 = np.full(p, lambda1)
    l2 = np.full(p, lambda2)
    if not penalize_intercept:
        l1[0] = 0.0
        l2[0] = 0.0
    return l1, l2


def kkt_residual(
    data: Dataset,
    trim: TrimSet,
    beta: np.ndarray,
    lambda1: float,
    lambda2: float,
    penalize_intercept: bool = True,
) -> float:
    """Stationarity violation of the restricted problem at beta.

    For beta_j != 0 the condition is
    -(2/n) sum_{i in trim} x_ij r_i + lambda1 sign(beta_j) + 2 lambda2 beta_j = 0;
    for beta_j == 0 the subgradient condition |(2/n) sum x_ij r_i| <= lambda1.
    Returns the largest violation over coordinates, computed from scratch.
    """
    beta = _check_beta(beta, data.p)
    rows = trim.indices
    x_sub = data.x[rows]
    r = data.y[rows] - x_sub @ beta
    grad = -(2.0 / data.n) * (x_sub.T @ r)
    l1, l2 = _penalty_vectors(data.p, lambda1, lambda2, penalize_intercept)
    nonzero = beta != 0.0
    viol = np.where(
        nonzero,
        np.abs(grad + l1 * np.sign(beta) + 2.0 * l2 * beta),
        np.maximum(0.0, np.abs(grad) - l1),
    )
    return float(np.max(viol))


def solve_enet_on_subset(
    data: Dataset,
    trim: TrimSet,
    lambda1: float,
    lambda2: float,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    warm_start: np.ndarray | None = None,
    penalize_intercept: bool = True,
    track_objective: bool = False,
) -> SubproblemSolution:
    """Minimize (1/n) sum_{i in trim} (y_i - x_i @ b)^2 + lambda1 ||b||_1 + lambda2 ||b||_2^2.

    The l1-penalized case runs cyclic coordinate descent with closed-form
    soft-threshold updates; the smooth cases (lambda1 == 0) are solved
    directly by linear algebra, falling back to minimum-norm least
    squares when the restricted Gram matrix is rank deficient.

    Parameters
    ----------
    data : Dataset
    trim : TrimSet
        Rows entering the loss.
    lambda1, lambda2 : float
        Nonnegative penalty weights.
    tol : float
        Convergence requires both the largest coordinate change per sweep
        and the independently recomputed KKT residual to be <= tol.
    max_iter : int
        Sweep budget; on exhaustion the best iterate is returned with
        ``converged=False`` and the caller decides.
    warm_start : ndarray, optional
        Initial coefficients (default zeros).
    penalize_intercept : bool
        When False, coordinate 0 is exempt from both penalties.
    track_objective : bool
        Record the subproblem objective after every sweep (testing hook).
    """
    if lambda1 < 0 or lambda2 < 0 or not (np.isfinite(lambda1) and np.isfinite(lambda2)):
        raise ValueError(f"penalties must be finite and nonnegative, got {lambda1}, {lambda2}")
    if trim.n != data.n:
        raise ValueError(f"trim set is over {trim.n} rows but data has {data.n}")
    n, p = data.n, data.p
    rows = trim.indices
    x_sub = data.x[rows]
    y_sub = data.y[rows]
    l1, l2 = _penalty_vectors(p, lambda1, lambda2, penalize_intercept)

    def final(beta, iters, converged_flag, min_norm=False, path=None):
        kkt = kkt_residual(data, trim, beta, lambda1, lambda2, penalize_intercept)
        return SubproblemSolution(
            beta=beta,
            kkt_residual=kkt,
            iterations=iters,
            converged=bool(converged_flag and kkt <= tol),
            used_min_norm=bool(min_norm),
            objective_path=path or [],
        )

    if lambda1 == 0.0:
        if lambda2 == 0.0:
            beta, _, rank, _ = np.linalg.lstsq(x_sub, y_sub, rcond=None)
            return final(beta, 0, True, min_norm=rank < p)
        gram = (x_sub.T @ x_sub) / n
        lhs = gram + np.diag(l2)
        rhs = (x_sub.T @ y_sub) / n
        try:
            beta = np.linalg.solve(lhs, rhs)
        except np.linalg.LinAlgError:
            beta = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
        return final(beta, 0, True)

    if warm_start is None:
        beta = np.zeros(p)
    else:
        beta = _check_beta(warm_start, p).copy()

    col_sq = np.einsum("ij,ij->j", x_sub, x_sub)
    denom = 2.0 * col_sq / n + 2.0 * l2
    r = y_sub - x_sub @ beta
    path: list[float] = []

    converged = False
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(p):
            bj = beta[j]
            if denom[j] == 0.0:
                # column vanishes on the subset and carries no ridge term;
                # the penalty alone pins the coordinate at zero
                new_bj = 0.0
            else:
                cj = 2.0 * (x_sub[:, j] @ r) / n + 2.0 * col_sq[j] * bj / n
                new_bj = soft_threshold(cj, l1[j]) / denom[j]
            if new_bj != bj:
                r -= x_sub[:, j] * (new_bj - bj)
                beta[j] = new_bj
                delta = abs(new_bj - bj)
                if delta > max_delta:
                    max_delta = delta
        if track_objective:
            pen = float(l1 @ np.abs(beta) + l2 @ (beta * beta))
            path.append(float(r @ r) / n + pen)
        if max_delta <= tol:
            kkt = kkt_residual(data, trim, beta, lambda1, lambda2, penalize_intercept)
            if kkt <= tol:
                converged = True
                break
    return final(beta, sweeps, converged, path=path)
