import numpy as np
import pytest

from lexlearn.exceptions import FileFormatError, InputError, ShapeError
from lexlearn.linear_map import (LinearMapping, estimate_endstate,
                                 estimate_frequency_informed, load_mapping,
                                 predict, save_mapping, widrow_hoff_step)


def squared_error(mapping, c, t):
    diff = t - c @ mapping.weights
    return float(diff @ diff)


class TestEstimateEndstate:
    def test_identity_input(self):
        t = np.array([[1.0, 2.0], [3.0, 4.0]])
        m = estimate_endstate(np.eye(2), t, ridge=0.0)
        np.testing.assert_allclose(m.weights, t, atol=1e-12)
        assert m.provenance == "endstate"

    def test_duplicate_rows_predict_mean(self):
        c = np.array([[1.0], [1.0]])
        t = np.array([[0.0, 4.0], [2.0, 0.0]])
        m = estimate_endstate(c, t, ridge=0.0)
        np.testing.assert_allclose(predict(m, c),
                                   [[1.0, 2.0], [1.0, 2.0]], atol=1e-12)

    def test_matches_pseudo_inverse_oracle(self, toy_invertible):
        c, s = toy_invertible
        m = estimate_endstate(c, s, ridge=0.0)
        oracle = np.linalg.pinv(c) @ s
        np.testing.assert_allclose(predict(m, c), c @ oracle, atol=1e-8)


class TestEstimateFrequencyInformed:
    def test_equal_frequencies_match_endstate(self, toy_invertible):
        c, s = toy_invertible
        el = estimate_endstate(c, s, ridge=0.0)
        fil = estimate_frequency_informed(c, s, [7] * 6, ridge=0.0)
        np.testing.assert_allclose(fil.weights, el.weights, atol=1e-10)
        assert fil.provenance == "frequency_informed"

    def test_shared_cue_weighted_mean(self):
        c = np.array([[1.0], [1.0]])
        t = np.array([[0.0], [2.0]])
        m = estimate_frequency_informed(c, t, [3, 1], ridge=0.0)
        assert m.weights[0, 0] == pytest.approx(0.5, abs=1e-14)

    def test_doubling_frequencies_is_invariant(self, toy_invertible):
        c, s = toy_invertible
        freqs = np.array([5.0, 1.0, 9.0, 2.0, 4.0, 8.0])
        a = estimate_frequency_informed(c, s, freqs, ridge=0.0)
        b = estimate_frequency_informed(c, s, 2 * freqs, ridge=0.0)
        np.testing.assert_allclose(a.weights, b.weights, atol=1e-10)

    def test_all_zero_frequencies_rejected(self, toy_invertible):
        c, s = toy_invertible
        with pytest.raises(InputError):
            estimate_frequency_informed(c, s, [0] * 6)


class TestWidrowHoff:
    def test_hand_computed_single_step(self):
        m = LinearMapping(weights=np.zeros((2, 1)))
        c = np.array([1.0, 0.0])
        t = np.array([1.0])
        before = squared_error(m, c, t)
        widrow_hoff_step(m, c, t, eta=0.1)
        np.testing.assert_allclose(m.weights, [[0.1], [0.0]], atol=1e-15)
        assert before == pytest.approx(1.0)
        assert squared_error(m, c, t) == pytest.approx(0.81, abs=1e-12)
        assert m.provenance == "incremental"

    def test_zero_error_fixed_point(self):
        m = LinearMapping(weights=np.array([[2.0], [0.0]]))
        snapshot = m.weights.copy()
        widrow_hoff_step(m, np.array([1.0, 0.0]), np.array([2.0]), eta=0.5)
        np.testing.assert_array_equal(m.weights, snapshot)

    def test_zero_eta_is_identity(self):
        m = LinearMapping(weights=np.array([[1.0], [1.0]]))
        snapshot = m.weights.copy()
        widrow_hoff_step(m, np.array([1.0, 1.0]), np.array([5.0]), eta=0.0)
        np.testing.assert_array_equal(m.weights, snapshot)

    def test_monotone_descent_to_tolerance(self):
        rng = np.random.default_rng(21)
        c = (rng.random(8) < 0.5).astype(float)
        c[0] = 1.0  # ensure a nonzero cue row
        t = rng.normal(size=3)
        eta = 1.9 / (c @ c)
        m = LinearMapping(weights=rng.normal(size=(8, 3)))
        previous = squared_error(m, c, t)
        for step in range(10_000):
            widrow_hoff_step(m, c, t, eta=eta)
            current = squared_error(m, c, t)
            assert current <= previous + 1e-15
            previous = current
            if current < 1e-6:
                break
        assert previous < 1e-6

    def test_cycling_converges_to_endstate(self, toy_invertible):
        c, s = toy_invertible
        endstate = estimate_endstate(c, s, ridge=0.0)
        target_preds = predict(endstate, c)
        m = LinearMapping(weights=np.zeros((6, 4)))
        for _ in range(4000):
            for i in range(6):
                widrow_hoff_step(m, c[i], s[i], eta=0.05)
        preds = predict(m, c)
        for i in range(6):
            r = np.corrcoef(preds[i], target_preds[i])[0, 1]
            assert r > 0.999

    def test_inactive_cue_rows_untouched(self):
        rng = np.random.default_rng(22)
        m = LinearMapping(weights=rng.normal(size=(5, 2)))
        snapshot = m.weights.copy()
        c = np.array([1.0, 0.0, 1.0, 0.0, 0.0])
        widrow_hoff_step(m, c, np.array([1.0, -1.0]), eta=0.1)
        inactive = c == 0.0
        np.testing.assert_array_equal(m.weights[inactive],
                                      snapshot[inactive])
        assert not np.array_equal(m.weights[~inactive], snapshot[~inactive])

    def test_shape_checks(self):
        m = LinearMapping(weights=np.zeros((2, 1)))
        with pytest.raises(ShapeError):
            widrow_hoff_step(m, np.array([1.0]), np.array([1.0]))
        with pytest.raises(ShapeError):
            widrow_hoff_step(m, np.array([1.0, 0.0]), np.array([1.0, 2.0]))


class TestPersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(23)
        m = LinearMapping(weights=rng.normal(size=(4, 3)),
                          direction="production",
                          provenance="frequency_informed")
        path = tmp_path / "m.bin"
        save_mapping(path, m)
        loaded = load_mapping(path)
        np.testing.assert_array_equal(loaded.weights, m.weights)
        assert loaded.direction == "production"
        assert loaded.provenance == "frequency_informed"

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 40)
        with pytest.raises(FileFormatError, match="magic"):
            load_mapping(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "short.bin"
        path.write_bytes(b"LX")
        with pytest.raises(FileFormatError):
            load_mapping(path)


class TestMappingValidation:
    def test_unknown_direction(self):
        with pytest.raises(InputError):
            LinearMapping(weights=np.zeros((1, 1)), direction="sideways")

    def test_unknown_provenance(self):
        with pytest.raises(InputError):
            LinearMapping(weights=np.zeros((1, 1)), provenance="dreamt")
