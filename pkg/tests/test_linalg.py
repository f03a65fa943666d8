import numpy as np
import pytest

from lexlearn.exceptions import InputError, ShapeError, SingularMatrixError
from lexlearn.linalg import (LeastSquaresConfig, matmul, pearson,
                             pearson_rows, solve_least_squares)


def matmul_oracle(a, b):
    """Element-by-element triple loop."""
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


class TestMatmul:
    def test_identity(self):
        s = np.arange(9.0).reshape(3, 3) + 1
        np.testing.assert_array_equal(matmul(np.eye(3), s), s)

    def test_forced_by_definition(self):
        out = matmul(np.array([[1.0, 0.0], [0.0, 2.0]]),
                     np.array([[3.0], [4.0]]))
        np.testing.assert_array_equal(out, [[3.0], [8.0]])

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(5, 4))
        b = rng.normal(size=(4, 3))
        np.testing.assert_allclose(matmul(a, b), matmul_oracle(a, b),
                                   rtol=1e-12)

    def test_shape_error_names_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 2\)"):
            matmul(np.zeros((2, 3)), np.zeros((2, 2)))

    def test_associativity(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            a = rng.normal(size=(4, 3))
            b = rng.normal(size=(3, 5))
            c = rng.normal(size=(5, 2))
            np.testing.assert_allclose(matmul(matmul(a, b), c),
                                       matmul(a, matmul(b, c)), atol=1e-9)

    def test_rejects_non_finite(self):
        with pytest.raises(InputError):
            matmul(np.array([[np.nan, 0.0]]), np.zeros((2, 1)))


class TestSolveLeastSquares:
    def test_identity_design(self):
        y = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        b = solve_least_squares(np.eye(3), y,
                                LeastSquaresConfig(ridge_lambda=0.0))
        np.testing.assert_allclose(b, y, atol=1e-12)

    def test_unweighted_mean(self):
        b = solve_least_squares(np.array([[1.0], [1.0]]),
                                np.array([[0.0], [2.0]]),
                                LeastSquaresConfig(ridge_lambda=0.0))
        np.testing.assert_allclose(b, [[1.0]], atol=1e-12)

    def test_weighted_mean_exact(self):
        # Hand evaluation of the weighted normal equations:
        # (3*1 + 1*1) B = 3*0 + 1*2  ->  B = 0.5
        b = solve_least_squares(
            np.array([[1.0], [1.0]]), np.array([[0.0], [2.0]]),
            LeastSquaresConfig(ridge_lambda=0.0,
                               weights=np.array([3.0, 1.0])))
        assert b[0, 0] == pytest.approx(0.5, abs=1e-14)

    def test_singular_without_ridge(self):
        x = np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]])
        y = np.array([[1.0], [2.0], [3.0]])
        with pytest.raises(SingularMatrixError, match="ridge"):
            solve_least_squares(x, y, LeastSquaresConfig(ridge_lambda=0.0))

    def test_auto_jitter_handles_wide_design(self):
        rng = np.random.default_rng(3)
        x = (rng.random(size=(5, 12)) < 0.4).astype(float)
        y = rng.normal(size=(5, 2))
        b = solve_least_squares(x, y)  # default config: tiny jitter
        assert np.all(np.isfinite(b))

    def test_residual_orthogonality_unweighted(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            x = rng.normal(size=(12, 8))
            y = rng.normal(size=(12, 3))
            b = solve_least_squares(x, y,
                                    LeastSquaresConfig(ridge_lambda=0.0))
            resid = x.T @ (x @ b - y)
            scale = max(1.0, np.abs(x.T @ y).max())
            assert np.abs(resid).max() < 1e-8 * scale

    def test_residual_orthogonality_weighted_and_ridged(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            x = rng.normal(size=(10, 6))
            y = rng.normal(size=(10, 2))
            w = rng.random(10) + 0.1
            lam = 0.3
            b = solve_least_squares(
                x, y, LeastSquaresConfig(ridge_lambda=lam, weights=w))
            resid = x.T @ (w[:, None] * (x @ b - y)) + lam * b
            scale = max(1.0, np.abs(x.T @ (w[:, None] * y)).max())
            assert np.abs(resid).max() < 1e-8 * scale

    def test_constant_weights_match_unweighted(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(9, 4))
        y = rng.normal(size=(9, 2))
        plain = solve_least_squares(x, y,
                                    LeastSquaresConfig(ridge_lambda=0.0))
        scaled = solve_least_squares(
            x, y, LeastSquaresConfig(ridge_lambda=0.0,
                                     weights=np.full(9, 5.0)))
        np.testing.assert_allclose(scaled, plain, atol=1e-10)

    def test_config_validation(self):
        with pytest.raises(InputError):
            LeastSquaresConfig(ridge_lambda=-1.0)
        with pytest.raises(InputError):
            LeastSquaresConfig(weights=np.array([-1.0, 1.0]))
        with pytest.raises(InputError):
            LeastSquaresConfig(weights=np.zeros(3))

    def test_row_count_mismatch(self):
        with pytest.raises(ShapeError):
            solve_least_squares(np.zeros((3, 2)), np.zeros((4, 1)))


def pearson_oracle(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    uc, vc = u - u.mean(), v - v.mean()
    return float((uc * vc).sum() /
                 np.sqrt((uc * uc).sum() * (vc * vc).sum()))


class TestPearson:
    def test_self_correlation(self):
        assert pearson([1.0, 2.0, 5.0], [1.0, 2.0, 5.0]) == pytest.approx(1.0)

    def test_exact_negative(self):
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_matches_direct_formula(self):
        u, v = [1.0, 2.0, 4.0], [2.0, 2.0, 5.0]
        assert pearson(u, v) == pytest.approx(pearson_oracle(u, v), abs=1e-14)

    def test_zero_variance_is_zero(self):
        assert pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]) == 0.0
        assert pearson([1.0, 2.0, 3.0], [0.0, 0.0, 0.0]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            pearson([1.0, 2.0], [1.0, 2.0, 3.0])
        with pytest.raises(ShapeError):
            pearson([1.0], [2.0])

    def test_affine_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            u = rng.normal(size=6)
            v = rng.normal(size=6)
            a, b = rng.random() + 0.5, rng.normal()
            assert pearson(a * u + b, v) == pytest.approx(pearson(u, v),
                                                          abs=1e-12)


class TestPearsonRows:
    def test_matches_scalar_pearson(self):
        rng = np.random.default_rng(8)
        a = rng.normal(size=(4, 5))
        b = rng.normal(size=(3, 5))
        corr = pearson_rows(a, b)
        for i in range(4):
            for j in range(3):
                assert corr[i, j] == pytest.approx(pearson(a[i], b[j]),
                                                   abs=1e-12)

    def test_zero_variance_rows(self):
        a = np.array([[1.0, 1.0, 1.0]])
        b = np.array([[1.0, 2.0, 3.0]])
        assert pearson_rows(a, b)[0, 0] == 0.0
