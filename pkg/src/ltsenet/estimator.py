"""Scikit-learn estimator facade over the trimmed elastic-net solvers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .core import Dataset, TrimPenaltyConfig, denormalize_coefficients, normalize_columns
from .solver import default_h, fit_cstep, fit_exact

__all__ = ["LTSElasticNet"]


class LTSElasticNet(RegressorMixin, BaseEstimator):
    """Robust sparse linear regression by trimmed elastic net.

    Minimizes the sum of the h smallest squared residuals (divided by the
    full sample size) plus l1 and squared-l2 penalties.  Rows with the
    largest residuals are trimmed away, so up to n - h gross outliers in
    the response leave the fit untouched.  The intercept is added
    internally; pass raw feature matrices as with any scikit-learn
    regressor.

    Parameters
    ----------
    h : int, optional
        Rows kept by the trimmed loss; defaults to ceil(0.75 * n) at fit
        time.  Must satisfy ceil(n/2) <= h <= n.
    lambda1 : float, default=0.0
        l1 penalty weight.
    lambda2 : float, default=0.0
        Squared-l2 penalty weight.
    method : {"cstep", "exact"}, default="cstep"
        "cstep" runs a seeded multistart of concentration steps; "exact"
        enumerates every h-subset (guarded by ``cap``).
    n_starts : int, default=500
        Random starts for the "cstep" method.
    seed : int, default=0
        Seed for the random starts; fits are deterministic given it.
    tol : float, default=1e-8
        KKT/convergence tolerance of the inner convex solves.
    max_iter : int, default=10000
        Sweep budget of the inner convex solves.
    penalize_intercept : bool, default=True
        Whether the intercept coordinate enters the penalties.
    normalize : bool, default=False
        Rescale design columns to unit norm ratio before fitting and map
        the coefficients back afterwards.
    cap : int, default=100000
        Enumeration guard for the "exact" method.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Fitted feature coefficients (original scale).
    intercept_ : float
        Fitted intercept.
    trim_indices_ : ndarray of shape (h,)
        0-based indices of the rows kept by the final fit.
    objective_ : float
        Value of the trimmed penalized objective at the solution.
    result_ : FitResult
        Full solver output including diagnostics.

    Examples
    --------
    >>> import numpy as np
    >>> rng = np.random.default_rng(0)
    >>> X = rng.normal(size=(60, 3))
    >>> y = 2.0 + X @ np.array([1.0, 0.0, -1.0]) + 0.01 * rng.normal(size=60)
    >>> y[:5] += 100.0  # gross outliers
    >>> model = LTSElasticNet(h=45, lambda1=1e-4, n_starts=50).fit(X, y)
    >>> bool(np.all(model.trim_indices_ >= 5))
    True
    """

    def __init__(
        self,
        h=None,
        lambda1=0.0,
        lambda2=0.0,
        method="cstep",
        n_starts=500,
        seed=0,
        tol=1e-8,
        max_iter=10_000,
        penalize_intercept=True,
        normalize=False,
        cap=100_000,
    ):
        self.h = h
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.method = method
        self.n_starts = n_starts
        self.seed = seed
        self.tol = tol
        self.max_iter = max_iter
        self.penalize_intercept = penalize_intercept
        self.normalize = normalize
        self.cap = cap

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        if self.method not in ("cstep", "exact"):
            raise ValueError(f"method must be 'cstep' or 'exact', got {self.method!r}")
        data = Dataset.from_features(X, y)
        scales = None
        if self.normalize:
            data, scales = normalize_columns(data)
        h = default_h(data.n) if self.h is None else int(self.h)
        cfg = TrimPenaltyConfig(
            h=h,
            lambda1=self.lambda1,
            lambda2=self.lambda2,
            tol=self.tol,
            max_iter=self.max_iter,
            penalize_intercept=self.penalize_intercept,
        )
        if self.method == "exact":
            result = fit_exact(data, cfg, cap=self.cap)
        else:
            result = fit_cstep(data, cfg, n_starts=self.n_starts, seed=self.seed)
        beta = result.beta
        if scales is not None:
            beta = denormalize_coefficients(beta, scales)
        self.intercept_ = float(beta[0])
        self.coef_ = np.array(beta[1:])
        self.trim_indices_ = np.array(result.trim.indices)
        self.objective_ = result.objective_value
        self.result_ = result
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features but the model was fitted with {self.n_features_in_}"
            )
        return self.intercept_ + X @ self.coef_
