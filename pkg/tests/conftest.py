import math

import numpy as np
import pytest

from ltsenet import Dataset, TrimPenaltyConfig


def random_instance(seed, n=8, p=3, noise=0.2, outlier_rows=0, outlier_shift=50.0):
    """Small random regression instance with optional gross response outliers."""
    rng = np.random.default_rng(seed)
    features = rng.normal(size=(n, p - 1))
    beta_true = rng.normal(size=p)
    x = np.column_stack([np.ones(n), features])
    y = x @ beta_true + noise * rng.normal(size=n)
    if outlier_rows:
        rows = rng.choice(n, size=outlier_rows, replace=False)
        y[rows] += outlier_shift * rng.choice([-1.0, 1.0], size=outlier_rows)
    return Dataset(x, y), beta_true


def random_config(seed, n, lam_scale=0.5):
    rng = np.random.default_rng(seed)
    h = int(rng.integers(math.ceil(n / 2), n + 1))
    return TrimPenaltyConfig(
        h=h,
        lambda1=float(lam_scale * rng.random()),
        lambda2=float(lam_scale * rng.random()),
    )


@pytest.fixture
def four_point_data():
    """Three collinear points on y = x plus one gross outlier."""
    return Dataset.from_features(
        np.array([[0.0], [1.0], [2.0], [10.0]]),
        np.array([0.0, 1.0, 2.0, 0.0]),
    )
