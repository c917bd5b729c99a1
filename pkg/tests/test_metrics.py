import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from semforecast.errors import DegenerateError
from semforecast.evaluate import diebold_mariano, nrmse, rmse


def _dm_loop_oracle(e1, e2, h):
    n = len(e1)
    d = [a * a - b * b for a, b in zip(e1, e2)]
    mean = sum(d) / n
    gamma = []
    for k in range(h):
        gamma.append(sum((d[t] - mean) * (d[t - k] - mean) for t in range(k, n)) / n)
    lrv = gamma[0] + 2 * sum(gamma[1:])
    if lrv <= 0:
        lrv = gamma[0]
    stat = mean / math.sqrt(lrv / n)
    return stat, 0.5 * math.erfc(-stat / math.sqrt(2))


def test_rmse_two_points():
    assert rmse([3, -4]) == math.sqrt(12.5)


def test_nrmse_definition():
    assert nrmse(2.0, [0.0, 4.0, 10.0]) == 0.2


def test_rmse_empty_is_error():
    with pytest.raises(ValueError):
        rmse([])


def test_nrmse_constant_test_series():
    with pytest.raises(DegenerateError):
        nrmse(1.0, [3.0, 3.0, 3.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=2, max_size=30))
def test_nrmse_times_range_is_rmse(ys):
    y = np.asarray(ys)
    if np.ptp(y) == 0:
        return
    r = rmse(y - y.mean())
    assert nrmse(r, y) * (y.max() - y.min()) == pytest.approx(r, rel=1e-15)


def test_identical_errors_are_degenerate(rng):
    e = rng.normal(size=50)
    with pytest.raises(DegenerateError, match="degenerate loss differential"):
        diebold_mariano(e, e.copy())


def test_biased_forecast_is_detected():
    rng = np.random.default_rng(2024)
    e1 = 0.1 * rng.normal(size=200)
    e2 = e1 + 1.0
    res = diebold_mariano(e1, e2, h=1)
    stat, p = _dm_loop_oracle(e1.tolist(), e2.tolist(), 1)
    assert res.statistic == pytest.approx(stat, rel=1e-10)
    assert res.p_value < 0.01
    assert res.p_value == pytest.approx(p, rel=1e-8, abs=1e-300)


@pytest.mark.parametrize("h", [1, 2, 4])
def test_statistic_matches_loop_oracle(h):
    rng = np.random.default_rng(h)
    e = rng.normal(size=(120, 2))
    e[:, 0] = np.convolve(e[:, 0], [1, 0.6, 0.3], mode="same")
    res = diebold_mariano(e[:, 0], e[:, 1], h=h)
    stat, p = _dm_loop_oracle(e[:, 0].tolist(), e[:, 1].tolist(), h)
    assert res.statistic == pytest.approx(stat, rel=1e-10)
    assert res.p_value == pytest.approx(p, rel=1e-9)
    assert res.p_value == pytest.approx(norm.cdf(stat), rel=1e-12)
    assert (res.horizon, res.n) == (h, 120)


def test_negative_long_run_variance_falls_back_to_lag_zero():
    d_sign = np.array([1.0, -1.0] * 10)
    e2 = np.ones(20)
    e1 = np.sqrt(1.0 + 0.5 * d_sign + 0.2)
    res = diebold_mariano(e1, e2, h=2)
    stat, _ = _dm_loop_oracle(e1.tolist(), e2.tolist(), 1)
    assert res.statistic == pytest.approx(stat, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 5))
def test_swapping_series_negates_statistic(seed, h):
    rng = np.random.default_rng(seed)
    e1, e2 = rng.normal(size=40), rng.normal(size=40) * 1.3
    a, b = diebold_mariano(e1, e2, h), diebold_mariano(e2, e1, h)
    assert a.statistic == -b.statistic


def test_input_validation(rng):
    with pytest.raises(ValueError, match="at least 10"):
        diebold_mariano(np.ones(5), np.zeros(5))
    with pytest.raises(ValueError, match="equal length"):
        diebold_mariano(np.ones(12), np.zeros(11))
    with pytest.raises(ValueError):
        diebold_mariano(rng.normal(size=12), rng.normal(size=12), h=0)
