import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from skimage.metrics import structural_similarity

from spfbench.errors import ConfigError, DimensionError
from spfbench.metrics import EvalSeries, accumulated_error, mse, ssim, ssim_with_flag, step_count_above
from spfbench.noise import (NoiseSpec, add_noise_to_input, correlated_fields, matern_correlation,
                            sample_correlated_noise)
from spfbench.physics import FieldState, GridSpec


def sk_ssim(x, y, R):
    return structural_similarity(x, y, data_range=R, gaussian_weights=True, sigma=1.5,
                                 use_sample_covariance=False)


class TestSsim:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_reference(self, seed):
        r = np.random.default_rng(seed)
        x = r.normal(size=(20, 24))
        y = x + 0.3 * r.normal(size=x.shape)
        R = float(y.max() - y.min())
        assert ssim(x, y) == pytest.approx(sk_ssim(x, y, R), abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31))
    def test_self_is_one(self, seed):
        x = np.random.default_rng(seed).normal(size=(2, 16, 16))
        assert ssim(x, x) == 1.0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31))
    def test_symmetric_with_fixed_range(self, seed):
        r = np.random.default_rng(seed)
        x, y = r.normal(size=(2, 16, 16))
        assert ssim(x, y, data_range=4.0) == pytest.approx(ssim(y, x, data_range=4.0), abs=1e-14)

    def test_negated_checkerboard(self):
        i, j = np.indices((16, 16))
        x = np.where((i + j) % 2, 1.0, -1.0)
        assert ssim(-x, x) < 0

    def test_constant_truth_flag(self):
        v, flag = ssim_with_flag(np.zeros((12, 12)), np.zeros((12, 12)))
        assert flag and v == 1.0

    def test_too_small(self):
        with pytest.raises(DimensionError):
            ssim(np.zeros((8, 8)), np.zeros((8, 8)))

    def test_field_state(self, rng):
        g = GridSpec(12, 12, 1.0, 1.0, 1.0)
        a = FieldState.from_stack(g, ("u", "h"), rng.normal(size=(2, 12, 12)))
        assert ssim(a, a) == 1.0

    def test_channel_mean(self, rng):
        x, y = rng.normal(size=(2, 2, 14, 14))
        assert ssim(x, y) == pytest.approx(0.5 * (ssim(x[0], y[0]) + ssim(x[1], y[1])), abs=1e-15)


def scan_oracle(s, thr):
    n = 0
    for v in s:
        if v < thr:
            break
        n += 1
    return n


class TestStepCount:
    def test_against_scan(self):
        r = np.random.default_rng(0)
        for _ in range(100):
            s = np.clip(1.0 - np.cumsum(r.uniform(0, 0.02, 60)) + r.normal(0, 0.05, 60), 0, 1)
            assert step_count_above(s) == scan_oracle(s, 0.8)

    def test_cases(self):
        assert step_count_above([0.9, 0.85, 0.7, 0.9]) == 2
        assert step_count_above([0.9, 0.85, 0.7, 0.9], stop_at_first=False) == 3
        assert step_count_above([0.5]) == 0
        assert step_count_above([0.8, 0.8]) == 2

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=50))
    def test_property(self, s):
        assert step_count_above(s) == scan_oracle(s, 0.8)


class TestErrors:
    def test_mse(self):
        assert mse([1.0, 2.0], [0.0, 0.0]) == 2.5

    def test_accumulated(self):
        assert np.array_equal(accumulated_error([1.0, 2.0, 3.0]), [1.0, 3.0, 6.0])

    def test_eval_series(self):
        e = EvalSeries.from_rollout([1, 2, 3], [0.1, 0.2, 0.3], [0.9, 0.85, 0.7])
        assert e.acc_error[-1] == pytest.approx(0.6)
        assert e.steps_above() == 2
        assert np.isnan(e.energy_pred).all()
        assert len(e.rows()) == 3

    def test_eval_series_steps(self):
        with pytest.raises(DimensionError):
            EvalSeries.from_rollout([1, 1], [0.1, 0.2], [1.0, 1.0])


class TestMatern:
    def test_zero(self):
        assert matern_correlation(0.0, 4.0) == 1.0

    def test_value(self):
        assert matern_correlation(1.0, 4.0) == pytest.approx(1.25 * np.exp(-0.25), rel=1e-15)

    def test_monotone(self):
        r = np.linspace(0, 20, 50)
        assert np.all(np.diff(matern_correlation(r, 3.0)) < 0)

    def test_bad_args(self):
        with pytest.raises(ConfigError):
            matern_correlation(1.0, 0.0)
        with pytest.raises(ConfigError):
            matern_correlation(-1.0, 1.0)


@pytest.fixture(scope="module")
def fields():
    return correlated_fields((8, 8), 4.0, np.random.default_rng(0), 10_000)


class TestNoise:
    def test_lag_correlation(self, fields):
        a, b = fields[:, :-1, :].ravel(), fields[:, 1:, :].ravel()
        assert abs(np.corrcoef(a, b)[0, 1] - 1.25 * np.exp(-0.25)) <= 0.05

    def test_unit_variance(self, fields):
        assert abs(fields.var() - 1.0) < 0.05
        assert abs(fields.mean()) < 0.05

    def test_deterministic(self):
        s = NoiseSpec(4.0, 0.1, seed=3)
        assert np.array_equal(sample_correlated_noise((8, 8), s), sample_correlated_noise((8, 8), s))

    def test_linear_in_amplitude(self):
        s = NoiseSpec(4.0, 1.0, seed=3)
        a = sample_correlated_noise((8, 8), s)
        b = sample_correlated_noise((8, 8), s.scaled(0.25))
        assert np.allclose(b, 0.25 * a, atol=1e-15)

    def test_tiled_large_grid(self):
        f = correlated_fields((70, 66), 2.0, np.random.default_rng(0), 2)
        assert f.shape == (2, 70, 66) and np.isfinite(f).all()

    def test_zero_amplitude_identity(self, rng):
        x = rng.normal(size=(3, 2, 8, 8))
        y, n = add_noise_to_input(x, NoiseSpec(4.0, 0.0))
        assert np.array_equal(x, y) and n == 0 and y is not x

    def test_clamp_depth(self):
        x = np.zeros((2, 8, 8))
        y, n = add_noise_to_input(x, NoiseSpec(4.0, 1.0, 1), channel_names=("u", "h"))
        assert n > 0 and y[1].min() >= 1e-6
        assert (y[0] < 0).any()

    def test_field_state(self, rng):
        g = GridSpec(8, 8, 1.0, 1.0, 1.0)
        st_ = FieldState.from_stack(g, ("u", "v", "h"), np.ones((3, 8, 8)))
        out, n = add_noise_to_input(st_, NoiseSpec(4.0, 0.01, 2))
        assert isinstance(out, FieldState) and n == 0
        assert 0 < np.abs(out.stack() - 1).max() < 0.1

    def test_bad_spec(self):
        with pytest.raises(ConfigError):
            NoiseSpec(amplitude=-1.0)
