import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dropcal.errors import DomainError, FitFailureError
from dropcal.prob_core import LogitSampleSet, nll, nll_and_grad_array, softmax
from dropcal.temp_fit import FitConfig, fit_temperature, fit_temperature_array, nll_grad_t


def sample_labels(logits, t, rng):
    """Draw labels from softmax(logits / t) for an (n, C) array."""
    p = softmax(logits / t)
    return (p.cumsum(axis=1) > rng.random((logits.shape[0], 1))).argmax(axis=1)


def scaled_generator(scale, n=5000, n_classes=10, seed=0):
    rng = np.random.default_rng(seed)
    z = rng.normal(0.0, 5.0, size=(n, n_classes))
    return z[:, None, :], sample_labels(z, scale, rng)


def central_difference(logits, labels, t, h):
    return (nll_and_grad_array(logits, labels, t + h)[0] - nll_and_grad_array(logits, labels, t - h)[0]) / (2 * h)


class TestFitConfig:
    def test_defaults(self):
        cfg = FitConfig()
        assert (cfg.t_min, cfg.t_max, cfg.grid_points) == (0.05, 10.0, 50)

    def test_grid_contains_one_and_bounds(self):
        g = FitConfig().grid()
        assert g[0] == 0.05 and g[-1] == 10.0 and 1.0 in g
        assert np.all(np.diff(g) > 0)

    @pytest.mark.parametrize("kw", [dict(t_min=0.0), dict(t_min=2.0, t_max=1.0), dict(grid_points=2)])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            FitConfig(**kw)


class TestFitTemperature:
    def test_unit_temperature_recovered(self):
        z, y = scaled_generator(1.0)
        assert 0.95 <= fit_temperature_array(z, y).t <= 1.05

    def test_doubled_logits(self):
        z, y = scaled_generator(1.0)
        assert 1.9 <= fit_temperature_array(2.0 * z, y).t <= 2.1

    def test_single_set(self):
        param = fit_temperature([LogitSampleSet([[2.0, -1.0, 0.5]], 1)])
        assert math.isfinite(param.t) and math.isfinite(param.fit_nll)
        assert 0.05 <= param.t <= 10.0

    def test_empty(self):
        with pytest.raises(DomainError):
            fit_temperature([])

    def test_all_grid_points_non_finite(self, monkeypatch):
        import dropcal.temp_fit

        monkeypatch.setattr(dropcal.temp_fit, "_nll_and_grad", lambda *a: (float("nan"), 0.0))
        with pytest.raises(FitFailureError):
            fit_temperature([LogitSampleSet([[0.0, 1.0]], 0)])

    def test_stationary_at_interior_optimum(self):
        rng = np.random.default_rng(4)
        z = rng.normal(0.0, 3.0, size=(500, 25, 4))
        y = sample_labels(z.mean(axis=1), 1.5, rng)
        param = fit_temperature_array(z, y)
        value, grad = nll_and_grad_array(z, y, param.t)
        assert abs(grad) < 1e-3 * abs(value)
        assert param.fit_nll == pytest.approx(value, rel=1e-12)

    def test_not_worse_than_grid_or_identity(self):
        rng = np.random.default_rng(8)
        z = rng.normal(0.0, 2.0, size=(300, 10, 3))
        y = rng.integers(0, 3, size=300)
        cfg = FitConfig()
        param = fit_temperature_array(z, y, cfg)
        grid_scores = [nll_and_grad_array(z, y, t)[0] for t in cfg.grid()]
        assert param.fit_nll <= min(grid_scores)
        assert param.fit_nll <= nll_and_grad_array(z, y, 1.0)[0]

    def test_deterministic(self):
        z, y = scaled_generator(2.0, n=500)
        assert fit_temperature_array(z, y) == fit_temperature_array(z.copy(), y.copy())

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.3, 3.0), st.integers(0, 1000))
    def test_scale_equivariance(self, c, seed):
        z, y = scaled_generator(1.0, n=400, n_classes=4, seed=seed)
        cfg = FitConfig(t_min=0.01, t_max=100.0)
        base = fit_temperature_array(z, y, cfg).t
        scaled = fit_temperature_array(c * z, y, cfg).t
        assert math.log(scaled) == pytest.approx(math.log(c * base), abs=3 * cfg.refine_tolerance)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**31))
    def test_range_respected(self, seed):
        rng = np.random.default_rng(seed)
        z = rng.normal(0, rng.uniform(0.1, 20), size=(50, 3, 3))
        y = rng.integers(0, 3, size=50)
        cfg = FitConfig(t_min=0.5, t_max=2.0)
        assert 0.5 <= fit_temperature_array(z, y, cfg).t <= 2.0


class TestGradient:
    def test_symmetric_two_class_is_flat(self):
        sets = [LogitSampleSet([[a, a], [a, a]], i % 2) for i, a in enumerate([0.0, 1.5, -3.0])]
        for t in (0.1, 1.0, 7.0):
            assert nll_grad_t(sets, t) == 0.0
            assert nll(sets, t) == pytest.approx(3 * math.log(2))

    def test_finite_differences(self, kernels):
        rng = np.random.default_rng(21)
        for _ in range(50):
            n, n_passes, c = rng.integers(1, 40), rng.integers(1, 30), rng.integers(2, 8)
            z = rng.normal(0.0, rng.uniform(0.5, 5.0), size=(n, n_passes, c))
            y = rng.integers(0, c, size=n)
            t = rng.uniform(0.1, 5.0)
            grad = nll_and_grad_array(z, y, t)[1]
            fd = central_difference(z, y, t, 1e-4 * t)
            assert grad == pytest.approx(fd, rel=1e-5, abs=1e-9)
