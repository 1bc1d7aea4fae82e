"""Acceptance gate: one pass/fail line per criterion, all tolerances pinned."""

import math
import time

import numpy as np
import pytest

from ltsenet import (
    Dataset,
    SimConfig,
    SolverSettings,
    TrimPenaltyConfig,
    TrimSet,
    c_step,
    chi_square_band_quantiles,
    chi_square_tail_check,
    fit_cstep,
    fit_exact,
    objective,
    prediction_error_bound,
    run_contamination_comparison,
    run_coverage_experiment,
    solve_enet_on_subset,
    subgaussian_max_check,
    subgaussian_max_quantile,
)


def report(criterion, passed, detail):
    line = f"ACCEPTANCE {criterion:>2}: {'PASS' if passed else 'FAIL'} - {detail}"
    print(line)
    assert passed, line


def small_instance(seed, n=8, p=3, noise=0.3):
    rng = np.random.default_rng((41, seed))
    x = np.column_stack([np.ones(n), rng.normal(size=(n, p - 1))])
    y = x @ rng.normal(size=p) + noise * rng.normal(size=n)
    return Dataset(x, y)


@pytest.fixture(scope="module")
def coverage_500():
    cfg = SimConfig(n=100, p=20, s0=3, sigma=1.0, h=75, delta=0.1, n_trials=500, seed=2024)
    start = time.time()
    rep = run_coverage_experiment(cfg, SolverSettings(n_starts=20))
    return rep, time.time() - start


@pytest.fixture(scope="module")
def coverage_500_lasso():
    cfg = SimConfig(n=100, p=20, s0=3, sigma=1.0, h=75, delta=0.1, n_trials=500, seed=2025)
    rep = run_coverage_experiment(cfg, SolverSettings(n_starts=20), lambda2=0.0)
    return rep


def test_criterion_01_oracle_equivalence():
    start = time.time()
    cfg = TrimPenaltyConfig(h=6, lambda1=0.1, lambda2=0.05)
    matches = 0
    never_below = True
    for seed in range(100):
        data = small_instance(seed)
        exact = fit_exact(data, cfg)
        heur = fit_cstep(data, cfg, n_starts=100, seed=seed)
        if heur.objective_value < exact.objective_value - 1e-10:
            never_below = False
        if abs(heur.objective_value - exact.objective_value) <= 1e-8:
            matches += 1
    elapsed = time.time() - start
    report(
        1,
        matches >= 95 and never_below and elapsed < 60,
        f"cstep matched exact on {matches}/100, never below oracle: {never_below}, "
        f"{elapsed:.1f}s (< 60s)",
    )


def test_criterion_02_cstep_monotonicity():
    worst_increase = -np.inf
    for seed in range(1000):
        rng = np.random.default_rng((42, seed))
        n = int(rng.integers(8, 13))
        p = int(rng.integers(2, 4))
        x = np.column_stack([np.ones(n), rng.normal(size=(n, p - 1))])
        y = x @ rng.normal(size=p) + 0.3 * rng.normal(size=n)
        data = Dataset(x, y)
        cfg = TrimPenaltyConfig(
            h=int(rng.integers(math.ceil(n / 2), n + 1)),
            lambda1=float(0.5 * rng.random()),
            lambda2=float(0.5 * rng.random()),
        )
        beta = rng.normal(size=p)
        prev = objective(data, beta, cfg)
        for _ in range(50):
            beta, _ = c_step(data, beta, cfg)
            cur = objective(data, beta, cfg)
            worst_increase = max(worst_increase, cur - prev)
            prev = cur
    report(
        2,
        worst_increase <= 1e-12,
        f"worst objective increase over 1000 x 50 chained c-steps: {worst_increase:.2e} (<= 1e-12)",
    )


def test_criterion_03_uniqueness():
    unique_count = 0
    for seed in range(100):
        data = small_instance(seed + 500)
        fit = fit_exact(data, TrimPenaltyConfig(h=6, lambda1=0.1, lambda2=0.05))
        unique_count += bool(fit.unique_flag)
    # duplicated rows, no penalty: several 4-subsets fit distinct lines exactly
    pts_x = np.array([0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0])
    pts_y = np.array([0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0])
    tied = fit_exact(Dataset.from_features(pts_x[:, None], pts_y), TrimPenaltyConfig(h=4))
    ties_detected = tied.unique_flag is False
    report(
        3,
        unique_count >= 99 and ties_detected,
        f"unique on {unique_count}/100 continuous instances (>= 99); "
        f"duplicated-row ties detected: {ties_detected}",
    )


def test_criterion_04_base_inequality(coverage_500):
    rep, _ = coverage_500
    claim = rep.claim("base_inequality")
    ok = (
        rep.excluded_trials == 0
        and claim.times_held == rep.completed_trials == 500
    )
    report(
        4,
        ok,
        f"basic inequality held on {claim.times_held}/{rep.completed_trials} clean fits "
        f"(slack tolerance -1e-9), {rep.excluded_trials} excluded",
    )


def test_criterion_05_prediction_coverage(coverage_500):
    rep, elapsed = coverage_500
    claim = rep.claim("prediction_bound")
    rate = claim.empirical_rate
    report(
        5,
        rate is not None and rate >= 0.90 and elapsed < 600,
        f"coverage {rate:.3f} (>= 0.90 target, bound loose so ~1.0 expected), "
        f"median realized {rep.median_realized_error:.3f} vs mean bound {rep.mean_bound:.1f}, "
        f"{elapsed:.0f}s (< 600s)",
    )


def test_criterion_06_cone_condition(coverage_500_lasso):
    rep = coverage_500_lasso
    claim = rep.claim("cone_condition")
    rate = claim.empirical_rate
    report(
        6,
        rep.lambda2 == 0.0 and rate is not None and rate >= 0.90,
        f"cone condition held on {claim.times_held}/{rep.completed_trials} "
        f"lasso-regime trials (rate {rate:.3f} >= 0.90)",
    )


def test_criterion_07_chi_square_tails():
    cells = []
    all_ok = True
    for h in (5, 20, 100):
        for t in (1.0, 3.0):
            res = chi_square_tail_check(h, t, reps=100_000, seed=h * 7 + int(t))
            se = math.sqrt(res.bound * (1.0 - res.bound) / res.reps)
            ok = res.upper_rate <= res.bound + 3 * se and res.lower_rate <= res.bound + 3 * se
            all_ok &= ok
            cells.append(f"h={h},t={t:g}:{res.upper_rate:.4f}/{res.lower_rate:.4f}<={res.bound:.4f}")
    report(7, all_ok, "exceedance within exp(-t)+3se in all 6 cells: " + "; ".join(cells))


def test_criterion_08_subgaussian_max():
    res = subgaussian_max_check(n=100, p=10, h=75, sigma=1.0, delta=0.1, reps=10_000, seed=11)
    se = math.sqrt(res.target_level * (1.0 - res.target_level) / res.reps)
    ok = res.empirical_rate <= res.target_level + 3 * se
    report(
        8,
        ok,
        f"empirical rate {res.empirical_rate:.4f} <= level {res.target_level:.4f} + 3se ({3 * se:.4f})",
    )


def test_criterion_09_robustness():
    cfg = SimConfig(
        n=100, p=20, s0=3, sigma=1.0, h=75, n_trials=100, seed=777,
        contamination_fraction=0.2, contamination_magnitude=600.0,
    )
    rep = run_contamination_comparison(cfg, SolverSettings(n_starts=20))
    ok = (
        rep.excluded_trials == 0
        and rep.n_trials_outliers_excluded == 100
        and rep.trimmed_wins >= 95
    )
    report(
        9,
        ok,
        f"outliers excluded in {rep.n_trials_outliers_excluded}/100 trials (need 100), "
        f"trimmed beat untrimmed in {rep.trimmed_wins}/100 (>= 95); "
        f"median errors {rep.median_error_trimmed:.3f} vs {rep.median_error_untrimmed:.3f}",
    )


def test_criterion_10_formula_spot_checks():
    q1 = subgaussian_max_quantile(1.0, 100, 10, 0.0, 0.1)
    q2, q3 = chi_square_band_quantiles(100, 0.0, 0.1)
    bound = prediction_error_bound(1.0, 100, q1, q2, 1.0)
    checks = {
        "q1": (q1, 0.69234),
        "q2": (q2, 45.79),
        "q3": (q3, 38.41),
        "prediction_bound": (bound, 5.0699),
    }
    ok = all(abs(got - want) / want <= 1e-3 for got, want in checks.values())
    report(
        10,
        ok,
        ", ".join(f"{k}={got:.5f}~{want}" for k, (got, want) in checks.items())
        + " (all within 1e-3 relative)",
    )


def test_criterion_11_kkt_certification():
    def independent_kkt(data, trim, beta, lam1, lam2):
        rows = trim.indices
        x = np.asarray(data.x[rows])
        r = np.asarray(data.y[rows]) - x @ beta
        worst = 0.0
        for j in range(data.p):
            g = -2.0 * float(x[:, j] @ r) / data.n
            if beta[j] != 0.0:
                worst = max(worst, abs(g + lam1 * np.sign(beta[j]) + 2.0 * lam2 * beta[j]))
            else:
                worst = max(worst, max(0.0, abs(g) - lam1))
        return worst

    tol = 1e-8
    worst = 0.0
    n_checked = 0
    rng = np.random.default_rng(13)
    for seed in range(40):
        data = small_instance(seed, n=12, p=3)
        lam1 = float(rng.choice([0.0, 0.02, 0.1, 0.5]))
        lam2 = float(rng.choice([0.0, 0.02, 0.1]))
        h = int(rng.integers(6, 13))
        trim = TrimSet.from_indices(np.sort(rng.choice(12, h, replace=False)), 12)
        sol = solve_enet_on_subset(data, trim, lam1, lam2, tol=tol)
        assert sol.converged
        worst = max(worst, independent_kkt(data, trim, sol.beta, lam1, lam2))
        n_checked += 1
    # final solutions of full solver runs carry the same certificate
    for seed in range(10):
        data = small_instance(seed + 300, n=10, p=3)
        cfg = TrimPenaltyConfig(h=8, lambda1=0.05, lambda2=0.02)
        fe = fit_exact(data, cfg)
        fc = fit_cstep(data, cfg, n_starts=30, seed=seed)
        worst = max(worst, fe.kkt_residual, fc.kkt_residual)
        n_checked += 2
    report(
        11,
        worst <= tol,
        f"worst independently re-verified KKT residual {worst:.2e} <= tol 1e-8 "
        f"over {n_checked} solutions",
    )
