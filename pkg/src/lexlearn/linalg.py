"""Dense-matrix substrate: products, weighted ridge least squares, Pearson correlation.

Matrices are plain ``numpy.ndarray`` objects, 2-D, float64, row-major. Every
public operation validates shapes and guarantees a finite result. All
accumulation happens in double precision.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .exceptions import InputError, ShapeError, SingularMatrixError

# Relative jitter used when no explicit ridge penalty is requested; scaled by
# the trace of the normal-equations matrix so it is unit-free.
AUTO_RIDGE_SCALE = 1e-8


def as_matrix(a, name="matrix"):
    """Coerce to a finite, 2-D, row-major float64 array."""
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={out.ndim}")
    if not np.all(np.isfinite(out)):
        raise InputError(f"{name} contains non-finite values")
    return out


def as_vector(v, name="vector"):
    """Coerce to a finite 1-D float64 array."""
    out = np.ascontiguousarray(v, dtype=np.float64)
    if out.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got ndim={out.ndim}")
    if not np.all(np.isfinite(out)):
        raise InputError(f"{name} contains non-finite values")
    return out


def matmul(a, b):
    """Matrix product a @ b with explicit shape checking."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    out = a @ b
    if not np.all(np.isfinite(out)):
        raise InputError("matrix product overflowed to non-finite values")
    return out


@dataclass
class LeastSquaresConfig:
    """Options for :func:`solve_least_squares`.

    ridge_lambda: non-negative penalty on the squared Frobenius norm of the
        solution. ``None`` (the default) applies a tiny trace-scaled jitter
        that keeps the normal equations positive definite; pass ``0.0``
        explicitly for exact unregularised least squares.
    weights: optional per-row non-negative weights (token counts). At least
        one weight must be positive.
    """

    ridge_lambda: float | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.ridge_lambda is not None and self.ridge_lambda < 0:
            raise InputError(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")
        if self.weights is not None:
            w = as_vector(self.weights, "weights")
            if np.any(w < 0):
                raise InputError("weights must be non-negative")
            if not np.any(w > 0):
                raise InputError("at least one weight must be positive")
            self.weights = w


def solve_least_squares(x, y, cfg=None):
    """Solve min_B sum_i w_i ||x_i B - y_i||^2 + lambda ||B||_F^2.

    Uses the normal equations (x'Wx + lambda I) factored by Cholesky. With
    lambda > 0 the solution is unique; with an explicit lambda of 0 a singular
    system raises :class:`SingularMatrixError` advising a ridge penalty.
    """
    if cfg is None:
        cfg = LeastSquaresConfig()
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    if x.shape[0] != y.shape[0]:
        raise ShapeError(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
    w = cfg.weights
    if w is not None and w.shape[0] != x.shape[0]:
        raise ShapeError(f"weights length {w.shape[0]} != {x.shape[0]} rows")

    xw = x if w is None else x * w[:, None]
    gram = x.T @ xw
    rhs = xw.T @ y

    lam = cfg.ridge_lambda
    if lam is None:
        trace = float(np.trace(gram))
        if trace <= 0.0:
            raise SingularMatrixError(
                "normal equations have zero trace (all-zero design after "
                "weighting); pass a positive ridge_lambda"
            )
        lam = AUTO_RIDGE_SCALE * trace / gram.shape[0]
    if lam > 0:
        gram = gram + lam * np.eye(gram.shape[0])

    try:
        factor = cho_factor(gram, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(
            "normal equations are singular; set ridge_lambda > 0 to regularise"
        ) from exc
    solution = cho_solve(factor, rhs)
    if not np.all(np.isfinite(solution)):
        raise SingularMatrixError(
            "least-squares solve produced non-finite values; set "
            "ridge_lambda > 0 to regularise"
        )
    return solution


def pearson(u, v):
    """Pearson correlation of two equal-length vectors.

    Returns 0.0 when either vector has zero variance, so constant
    predictions rank last instead of propagating NaNs.
    """
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    if u.shape[0] != v.shape[0]:
        raise ShapeError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    if u.shape[0] < 2:
        raise ShapeError("pearson needs vectors of length >= 2")
    uc = u - u.mean()
    vc = v - v.mean()
    su = np.sqrt(uc @ uc)
    sv = np.sqrt(vc @ vc)
    if su == 0.0 or sv == 0.0:
        return 0.0
    return float(np.clip((uc @ vc) / (su * sv), -1.0, 1.0))


def pearson_rows(a, b):
    """Row-by-row Pearson correlation matrix.

    Entry (i, j) is the correlation of row i of ``a`` with row j of ``b``.
    Zero-variance rows correlate 0 with everything.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"column mismatch: {a.shape[1]} vs {b.shape[1]}")
    if a.shape[1] < 2:
        raise ShapeError("pearson needs vectors of length >= 2")
    ac = a - a.mean(axis=1, keepdims=True)
    bc = b - b.mean(axis=1, keepdims=True)
    an = np.sqrt((ac * ac).sum(axis=1))
    bn = np.sqrt((bc * bc).sum(axis=1))
    # Zero-variance rows get norm 1 so the division is safe; the numerator is
    # already 0 for them.
    an_safe = np.where(an == 0.0, 1.0, an)
    bn_safe = np.where(bn == 0.0, 1.0, bn)
    corr = (ac / an_safe[:, None]) @ (bc / bn_safe[:, None]).T
    return np.clip(corr, -1.0, 1.0)
