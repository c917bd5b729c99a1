"""Forecast accuracy metrics and the Diebold-Mariano test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ..errors import DegenerateError


def rmse(errors) -> float:
    e = np.asarray(errors, dtype=float).ravel()
    if e.size == 0:
        raise ValueError("rmse of an empty error vector is undefined")
    return math.sqrt(float(np.mean(e ** 2)))


def nrmse(rmse_value: float, y_test) -> float:
    """RMSE divided by the range of the test-window target."""
    y = np.asarray(y_test, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("empty test series")
    span = float(y.max() - y.min())
    if not span > 0:
        raise DegenerateError("test series is constant; NRMSE undefined")
    return rmse_value / span


@dataclass(frozen=True)
class DMResult:
    statistic: float
    p_value: float
    horizon: int
    n: int

    def to_dict(self):
        return {"statistic": self.statistic, "p_value": self.p_value,
                "horizon": self.horizon, "n": self.n}


def diebold_mariano(e1, e2, h: int = 1) -> DMResult:
    """Test whether forecast 1 has lower squared-error loss than forecast 2.

    Uses ``d_t = e1_t^2 - e2_t^2``, a rectangular-kernel long-run variance
    with autocovariances up to lag ``h - 1``, and a normal approximation.
    The returned p-value is one-sided: small values favour model 1. If the
    truncated long-run variance is not positive, the lag-0 variance is used.
    """
    e1 = np.asarray(e1, dtype=float).ravel()
    e2 = np.asarray(e2, dtype=float).ravel()
    if e1.shape != e2.shape:
        raise ValueError("error series must have equal length")
    n = e1.size
    if n < 10:
        raise ValueError(f"Diebold-Mariano needs at least 10 paired errors, got {n}")
    if h < 1:
        raise ValueError("h must be >= 1")
    d = e1 ** 2 - e2 ** 2
    dbar = float(np.mean(d))
    dc = d - dbar
    gamma0 = float(dc @ dc) / n
    lrv = gamma0
    for k in range(1, min(h, n)):
        lrv += 2.0 * float(dc[k:] @ dc[:-k]) / n
    if not lrv > 0:
        lrv = gamma0
    if not lrv > 0:
        raise DegenerateError("degenerate loss differential: zero long-run variance")
    stat = dbar / math.sqrt(lrv / n)
    return DMResult(stat, float(norm.cdf(stat)), h, n)
