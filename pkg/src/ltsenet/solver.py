"""Global and heuristic minimization of the trimmed elastic-net objective.

Two routes: exact enumeration of every h-subset (ground truth, guarded by
a combinatorial cap) and a FAST-LTS style multistart of concentration
steps (scalable).  A concentration step ("C-step") recomputes the kept
subset from the current residuals and re-solves the convex restricted
problem warm-started at the current iterate, which never increases the
objective.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .core import Dataset, TrimPenaltyConfig, TrimSet, objective, penalty_value, residuals, trim_weights
from .enet import SubproblemSolution, solve_enet_on_subset
from .exceptions import SolverError, SubsetTooLargeError

__all__ = [
    "FitResult",
    "PathResult",
    "default_h",
    "c_step",
    "fit_exact",
    "fit_cstep",
    "fit_path",
    "lambda_max",
]

# chain controls shared by the C-step solvers
_MAX_CSTEPS = 100
_OBJ_DECREASE_TOL = 1e-10
_TIE_OBJ_TOL = 1e-9
_TIE_BETA_TOL = 1e-6


def default_h(n: int) -> int:
    """Default trimming size ceil(0.75 * n)."""
    if n < 1:
        raise ValueError("n must be positive")
    return math.ceil(0.75 * n)


@dataclass(frozen=True)
class FitResult:
    """A fitted trimmed elastic-net model plus solver diagnostics.

    ``objective_value`` always equals ``objective(data, beta, cfg)`` and
    ``trim`` is recomputed from the final coefficients under the
    canonical lowest-index tie rule.  ``unique_flag`` is set by the exact
    solver only (None otherwise): False means two subsets reached
    objectives within 1e-9 of each other with coefficient vectors more
    than 1e-6 apart in sup norm.
    """

    beta: np.ndarray
    trim: TrimSet
    objective_value: float
    method: str
    starts_used: int
    cstep_iterations: int
    unique_flag: bool | None = None
    seed: int | None = None
    kkt_residual: float = float("nan")
    used_min_norm: bool = False


@dataclass(frozen=True)
class PathResult:
    """Fits along a decreasing lambda1 grid (lambda2 tied by a fixed ratio)."""

    entries: tuple[tuple[float, FitResult], ...]

    def __post_init__(self):
        grid = [lam for lam, _ in self.entries]
        if len(grid) == 0:
            raise ValueError("path must have at least one entry")
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise ValueError("lambda1 grid must be strictly decreasing")

    @property
    def lambda1_grid(self) -> tuple[float, ...]:
        return tuple(lam for lam, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _validate_solver_inputs(data: Dataset, cfg: TrimPenaltyConfig) -> None:
    if cfg.gamma != 1.0:
        raise ValueError(f"solvers require gamma == 1, got {cfg.gamma}")
    lo = math.ceil(data.n / 2)
    if not (lo <= cfg.h <= data.n):
        raise ValueError(f"h must satisfy ceil(n/2) <= h <= n, i.e. {lo} <= h <= {data.n}, got {cfg.h}")


def _solve(data: Dataset, trim: TrimSet, cfg: TrimPenaltyConfig, warm=None) -> SubproblemSolution:
    return solve_enet_on_subset(
        data,
        trim,
        cfg.lambda1,
        cfg.lambda2,
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        warm_start=warm,
        penalize_intercept=cfg.penalize_intercept,
    )


def c_step(data: Dataset, beta: np.ndarray, cfg: TrimPenaltyConfig) -> tuple[np.ndarray, TrimSet]:
    """One concentration step: re-trim at beta, then re-solve on that subset.

    The convex solve is warm-started at beta, so the trimmed objective of
    the output never exceeds that of the input.  Raises SolverError if
    the inner solve does not converge.
    """
    _validate_solver_inputs(data, cfg)
    r = residuals(data, beta)
    trim = trim_weights(r * r, cfg.h)
    sol = _solve(data, trim, cfg, warm=beta)
    if not sol.converged:
        raise SolverError(
            f"restricted solve did not converge within {cfg.max_iter} sweeps "
            f"(kkt residual {sol.kkt_residual:.3e} > tol {cfg.tol:.1e})"
        )
    return sol.beta, trim


def _subset_objective(data: Dataset, sol: SubproblemSolution, trim: TrimSet, cfg: TrimPenaltyConfig) -> float:
    rows = trim.indices
    r = data.y[rows] - data.x[rows] @ sol.beta
    return float(r @ r) / data.n + penalty_value(sol.beta, cfg)


def fit_exact(data: Dataset, cfg: TrimPenaltyConfig, cap: int = 100_000) -> FitResult:
    """Global minimizer by enumerating every h-subset.

    Solves the convex restricted problem on each of the C(n, h) subsets
    and returns the best.  Raises SubsetTooLargeError when C(n, h)
    exceeds ``cap``; use ``fit_cstep`` for such instances.
    """
    _validate_solver_inputs(data, cfg)
    n, p = data.n, data.p
    n_subsets = math.comb(n, cfg.h)
    if n_subsets > cap:
        raise SubsetTooLargeError(
            f"C({n},{cfg.h}) = {n_subsets} subsets exceeds cap {cap}; use fit_cstep instead"
        )
    betas = np.empty((n_subsets, p))
    objs = np.empty(n_subsets)
    best_sol = None
    best_idx = -1
    for k, combo in enumerate(itertools.combinations(range(n), cfg.h)):
        trim = TrimSet.from_indices(combo, n)
        sol = _solve(data, trim, cfg)
        if not sol.converged:
            raise SolverError(f"restricted solve failed on subset {combo}")
        betas[k] = sol.beta
        objs[k] = _subset_objective(data, sol, trim, cfg)
        if best_idx < 0 or objs[k] < objs[best_idx]:
            best_idx = k
            best_sol = sol
    best_beta = betas[best_idx]
    near = np.nonzero(objs <= objs[best_idx] + _TIE_OBJ_TOL)[0]
    gaps = np.max(np.abs(betas[near] - best_beta), axis=1)
    unique = bool(np.all(gaps <= _TIE_BETA_TOL))
    final_trim = trim_weights(residuals(data, best_beta) ** 2, cfg.h)
    return FitResult(
        beta=best_beta,
        trim=final_trim,
        objective_value=objective(data, best_beta, cfg),
        method="exact",
        starts_used=n_subsets,
        cstep_iterations=0,
        unique_flag=unique,
        seed=None,
        kkt_residual=best_sol.kkt_residual,
        used_min_norm=best_sol.used_min_norm,
    )


def _run_chain(data: Dataset, cfg: TrimPenaltyConfig, trim: TrimSet, warm=None):
    """Iterate C-steps from an initial subset until a fixed point.

    Stops when the kept subset stops changing, when the objective
    decrease falls below 1e-10, or after 100 steps.  Returns
    (beta, objective, iterations, last_solution).
    """
    sol = _solve(data, trim, cfg, warm=warm)
    if not sol.converged:
        raise SolverError("restricted solve failed on the initial subset")
    beta = sol.beta
    obj = objective(data, beta, cfg)
    iters = 0
    for _ in range(_MAX_CSTEPS):
        new_trim = trim_weights(residuals(data, beta) ** 2, cfg.h)
        if new_trim.same_rows(trim):
            break
        new_sol = _solve(data, new_trim, cfg, warm=beta)
        if not new_sol.converged:
            raise SolverError("restricted solve failed during concentration steps")
        new_obj = objective(data, new_sol.beta, cfg)
        iters += 1
        decrease = obj - new_obj
        beta, trim, obj, sol = new_sol.beta, new_trim, new_obj, new_sol
        if decrease < _OBJ_DECREASE_TOL:
            break
    return beta, obj, iters, sol


def fit_cstep(
    data: Dataset,
    cfg: TrimPenaltyConfig,
    n_starts: int = 500,
    seed: int = 0,
    warm_start: np.ndarray | None = None,
) -> FitResult:
    """Multistart C-step heuristic from random h-subsets.

    Deterministic given ``seed``: starts are drawn from a seeded
    generator, chains run in order, and ties keep the earliest start.
    An optional ``warm_start`` coefficient vector adds one extra chain,
    so re-feeding a previous fit can only match or improve it.
    """
    _validate_solver_inputs(data, cfg)
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    rng = np.random.default_rng(seed)
    n = data.n
    best = None  # (obj, beta, iters, sol)
    starts = 0
    if warm_start is not None:
        trim0 = trim_weights(residuals(data, warm_start) ** 2, cfg.h)
        best = _pack_chain(_run_chain(data, cfg, trim0, warm=warm_start))
        starts += 1
    for _ in range(n_starts):
        idx = rng.choice(n, size=cfg.h, replace=False)
        trim0 = TrimSet.from_indices(idx, n)
        cand = _pack_chain(_run_chain(data, cfg, trim0))
        starts += 1
        if best is None or cand[0] < best[0]:
            best = cand
    obj, beta, iters, sol = best
    final_trim = trim_weights(residuals(data, beta) ** 2, cfg.h)
    return FitResult(
        beta=beta,
        trim=final_trim,
        objective_value=obj,
        method="cstep",
        starts_used=starts,
        cstep_iterations=iters,
        unique_flag=None,
        seed=seed,
        kkt_residual=sol.kkt_residual,
        used_min_norm=sol.used_min_norm,
    )


def _pack_chain(chain_out):
    beta, obj, iters, sol = chain_out
    return (obj, beta, iters, sol)


def fit_path(
    data: Dataset,
    cfg: TrimPenaltyConfig,
    lambda1_grid,
    lambda2_ratio: float = 0.0,
    n_starts: int = 500,
    seed: int = 0,
) -> PathResult:
    """Solve along a decreasing lambda1 grid with warm starts.

    The largest lambda1 gets a full multistart; each later grid point
    warm-starts from the previous solution plus max(1, n_starts // 5)
    fresh random starts.  lambda2 is tied to lambda1 by ``lambda2_ratio``.
    """
    grid = [float(v) for v in lambda1_grid]
    if len(grid) == 0:
        raise ValueError("lambda1 grid must be nonempty")
    if any(v <= 0 for v in grid):
        raise ValueError("lambda1 grid values must be positive")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("lambda1 grid must be strictly decreasing")
    if lambda2_ratio < 0:
        raise ValueError("lambda2_ratio must be nonnegative")
    entries = []
    prev_beta = None
    for i, lam1 in enumerate(grid):
        cfg_i = replace(cfg, lambda1=lam1, lambda2=lambda2_ratio * lam1)
        if i == 0:
            fr = fit_cstep(data, cfg_i, n_starts=n_starts, seed=seed)
        else:
            fr = fit_cstep(
                data,
                cfg_i,
                n_starts=max(1, n_starts // 5),
                seed=seed + i,
                warm_start=prev_beta,
            )
        prev_beta = fr.beta
        entries.append((lam1, fr))
    return PathResult(tuple(entries))


def lambda_max(data: Dataset, h: int) -> float:
    """Smallest lambda1 at which beta = 0 is a C-step fixed point (all penalized).

    At beta = 0 the kept rows are those with the h smallest |y|; zero
    stays optimal once lambda1 dominates every coordinate of the loss
    gradient there.
    """
    trim = trim_weights(data.y**2, h)
    rows = trim.indices
    grad = 2.0 * (data.x[rows].T @ data.y[rows]) / data.n
    return float(np.max(np.abs(grad)))
