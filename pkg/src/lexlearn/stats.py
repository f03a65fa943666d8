"""Ordinary least squares with AIC, for comparing simulation variants.

The AIC is the Gaussian-likelihood form without small-sample correction,

    aic = n * ln(rss / n) + 2k,

with k counting the intercept. Only relative comparisons are consumed, so
additive constants are dropped.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InputError
from .linalg import LeastSquaresConfig, as_matrix, as_vector, solve_least_squares


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray  # intercept first, then one slope per predictor
    rss: float
    n: int
    k: int
    aic: float


def aic_value(n, rss, k):
    """aic = n * ln(rss / n) + 2k; -inf for a perfect fit."""
    if rss < 0:
        raise InputError(f"rss must be >= 0, got {rss}")
    return -math.inf if rss == 0.0 else n * math.log(rss / n) + 2 * k


def ols_fit(predictors, response):
    """Fit response ~ intercept + predictors by least squares.

    ``predictors`` is (n, p) without an intercept column (one is added).
    A rank-deficient design (e.g. a duplicated constant predictor) raises
    SingularMatrixError.
    """
    x = as_matrix(predictors, "predictors")
    y = as_vector(response, "response")
    n, p = x.shape
    if y.shape[0] != n:
        raise InputError(f"{n} predictor rows vs {y.shape[0]} responses")
    k = p + 1
    if n <= k:
        raise InputError(f"need n > k, got n={n}, k={k}")
    design = np.column_stack([np.ones(n), x])
    beta = solve_least_squares(design, y[:, None],
                               LeastSquaresConfig(ridge_lambda=0.0))[:, 0]
    residuals = y - design @ beta
    rss = float(residuals @ residuals)
    return OlsFit(coefficients=beta, rss=rss, n=n, k=k,
                  aic=aic_value(n, rss, k))


def compare_aic(fit_a, fit_b):
    """Signed AIC difference, a minus b; negative means a fits better."""
    return fit_a.aic - fit_b.aic
