"""Aligning text features, lagged indicator values and forecast targets."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ..errors import DatasetError
from ..textpipe import parse_period_label


@dataclass(frozen=True)
class ForecastTask:
    """Direct forecast of ``Y[i + horizon]``, or of ``Y[i+1] - Y[i]`` when ``delta``."""

    name: str = "task"
    horizon: int = 1
    delta: bool = False

    def __post_init__(self):
        if not self.delta and self.horizon < 1:
            raise ValueError("horizon must be >= 1 unless in delta mode")

    @property
    def label(self) -> str:
        return "delta" if self.delta else f"h{self.horizon}"

    @property
    def dm_horizon(self) -> int:
        return 1 if self.delta else self.horizon


@dataclass(frozen=True, eq=False)
class SupervisedDataset:
    """One row per usable forecast origin ``i``.

    ``text`` holds the period-``i`` feature row (or None), ``lags`` holds
    ``Y[i-1], ..., Y[i-l]`` for the requested lag orders, ``y`` the target.
    """

    text: np.ndarray | None
    lags: np.ndarray
    y: np.ndarray
    rows: np.ndarray
    lag_orders: tuple[int, ...] = ()
    periods: tuple[str, ...] | None = None
    feature_names: tuple[str, ...] | None = None

    def __len__(self):
        return self.y.shape[0]

    def subset(self, idx) -> "SupervisedDataset":
        idx = np.asarray(idx)
        return replace(
            self,
            text=None if self.text is None else self.text[idx],
            lags=self.lags[idx], y=self.y[idx], rows=self.rows[idx],
            periods=None if self.periods is None else tuple(np.asarray(self.periods)[idx]))


def make_supervised_dataset(features, y, lags: Sequence[int] = (), horizon: int = 1,
                            delta: bool = False, periods: Sequence[str] | None = None,
                            feature_names: Sequence[str] | None = None) -> SupervisedDataset:
    """Build the aligned design for a direct forecast.

    Origins without every requested lag, or without a target, are dropped
    from features, lags and target alike.
    """
    y = np.asarray(y, dtype=float).ravel()
    n = y.shape[0]
    if features is not None:
        features = np.asarray(features, dtype=float)
        if features.shape[0] != n:
            raise DatasetError(f"features have {features.shape[0]} rows, series has {n}")
    if periods is not None and len(periods) != n:
        raise DatasetError("need one period label per observation")
    lag_orders = tuple(sorted(set(int(k) for k in lags)))
    if lag_orders and lag_orders[0] < 1:
        raise DatasetError("lag orders must be >= 1")
    if not delta and horizon < 1:
        raise DatasetError("horizon must be >= 1 unless in delta mode")

    first = lag_orders[-1] if lag_orders else 0
    step = 1 if delta else horizon
    rows = np.arange(first, n - step)
    if rows.size == 0:
        raise DatasetError(
            f"no usable rows: {n} observations, max lag {first}, "
            f"{'delta' if delta else f'horizon {horizon}'} leaves none")
    target = y[rows + 1] - y[rows] if delta else y[rows + horizon]
    lag_mat = (np.column_stack([y[rows - k] for k in lag_orders]) if lag_orders
               else np.empty((rows.size, 0)))
    return SupervisedDataset(
        None if features is None else features[rows],
        lag_mat, target, rows, lag_orders,
        None if periods is None else tuple(periods[i] for i in rows),
        None if feature_names is None else tuple(feature_names))


def load_indicator(path) -> tuple[str, tuple[str, ...], np.ndarray]:
    """Read a ``period,value`` CSV; returns ``(resolution, labels, values)`` sorted by period."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["period", "value"]:
            raise DatasetError(f"{path}: expected header 'period,value'")
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                res, ordinal = parse_period_label(row[0])
                value = float(row[1])
            except (ValueError, IndexError) as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from None
            if not np.isfinite(value):
                raise DatasetError(f"{path}:{lineno}: non-finite value")
            rows.append((ordinal, res, row[0].strip(), value))
    if not rows:
        raise DatasetError(f"{path}: no observations")
    if len({r[1] for r in rows}) != 1:
        raise DatasetError(f"{path}: mixed monthly and quarterly labels")
    rows.sort()
    if len({r[0] for r in rows}) != len(rows):
        raise DatasetError(f"{path}: duplicate periods")
    return rows[0][1], tuple(r[2] for r in rows), np.array([r[3] for r in rows])


def align_indicator(periods: Sequence[str], labels: Sequence[str], values) -> tuple[slice, np.ndarray]:
    """Restrict a feature calendar and an indicator to their common, gap-free span.

    Returns the slice of ``periods`` covered and the indicator values on it.
    """
    lookup = dict(zip(labels, np.asarray(values, dtype=float)))
    hit = [i for i, p in enumerate(periods) if p in lookup]
    if not hit:
        raise DatasetError("indicator and corpus calendars do not overlap")
    lo, hi = hit[0], hit[-1] + 1
    if hi - lo != len(hit):
        missing = [periods[i] for i in range(lo, hi) if periods[i] not in lookup]
        raise DatasetError(f"indicator has gaps inside the corpus span: {missing[:5]}")
    return slice(lo, hi), np.array([lookup[periods[i]] for i in range(lo, hi)])
