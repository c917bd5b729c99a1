"""Hyperparameter tuning by time-slice CV and chronological backtests."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import SemForecastError
from ..lexicon import ConstructIndexSets
from .cv import CvPlan, time_slice_folds
from .dataset import ForecastTask, SupervisedDataset, make_supervised_dataset
from .metrics import DMResult, diebold_mariano, nrmse, rmse
from .models import ModelFamily, Observer, fit_pipeline, regularization_key

logger = logging.getLogger(__name__)

TRAIN_FRACTION = 0.6
# CV-RMSE values within this relative distance of the minimum count as ties.
_TIE_RTOL = 1e-12


class TuningError(SemForecastError, RuntimeError):
    pass


@dataclass
class TuneResult:
    best: dict
    best_rmse: float
    table: list[dict]


def tune(ds: SupervisedDataset, family: ModelFamily, grid=None, plan: CvPlan = CvPlan(),
         constructs: ConstructIndexSets | None = None,
         observer: Observer | None = None) -> TuneResult:
    """Mean validation RMSE over time-slice folds for every grid point.

    The minimum wins; ties go to the more regularized point. A grid point
    that fails on any fold is recorded with its error and skipped.
    """
    grid = family.default_grid() if grid is None else list(grid)
    if not grid:
        raise ValueError("empty hyperparameter grid")
    folds = time_slice_folds(len(ds), plan)
    splits = [(ds.subset(f.train), ds.subset(f.val)) for f in folds]
    table = []
    for params in grid:
        try:
            scores = []
            for tr, va in splits:
                fitted = fit_pipeline(family, params, tr, constructs, observer)
                scores.append(rmse(va.y - fitted.predict(va)))
            table.append({"params": params, "cv_rmse": float(np.mean(scores)), "error": None})
        except (SemForecastError, ValueError, np.linalg.LinAlgError) as exc:
            table.append({"params": params, "cv_rmse": None,
                          "error": f"{type(exc).__name__}: {exc}"})
    ok = [row for row in table if row["cv_rmse"] is not None and math.isfinite(row["cv_rmse"])]
    if not ok:
        causes = sorted({row["error"] for row in table})
        raise TuningError(f"{family.name}: every grid point failed: " + "; ".join(causes))
    low = min(row["cv_rmse"] for row in ok)
    ties = [row for row in ok if row["cv_rmse"] <= low * (1 + _TIE_RTOL)]
    best = min(ties, key=lambda row: regularization_key(row["params"]))
    return TuneResult(best["params"], best["cv_rmse"], table)


@dataclass
class HorizonResult:
    label: str
    horizon: int
    delta: bool
    rmse: float
    nrmse: float | None
    best_params: dict
    cv_rmse: float
    n_train: int
    n_test: int
    test_rows: np.ndarray
    test_periods: tuple[str, ...] | None
    y_test: np.ndarray
    y_pred: np.ndarray
    dm: DMResult | None = None
    dm_baseline: str | None = None
    dm_note: str | None = None
    cv_table: list[dict] = field(default_factory=list)
    decomposition: object = None
    fitted: object = None

    @property
    def errors(self) -> np.ndarray:
        return self.y_test - self.y_pred

    def compare(self, baseline: "HorizonResult", baseline_name: str) -> DMResult:
        if not np.array_equal(self.test_rows, baseline.test_rows):
            raise ValueError("baseline was evaluated on different test periods")
        self.dm = diebold_mariano(self.errors, baseline.errors, 1 if self.delta else self.horizon)
        self.dm_baseline = baseline_name
        return self.dm

    def to_dict(self, include_series: bool = True):
        d = {
            "label": self.label, "horizon": self.horizon, "delta": self.delta,
            "rmse": self.rmse, "nrmse": self.nrmse,
            "best_params": self.best_params, "cv_rmse": self.cv_rmse,
            "n_train": self.n_train, "n_test": self.n_test,
            "dm": None if self.dm is None else self.dm.to_dict(),
            "dm_baseline": self.dm_baseline, "dm_note": self.dm_note,
            "cv_table": self.cv_table,
        }
        if include_series:
            d["test_periods"] = (list(self.test_periods) if self.test_periods is not None
                                 else self.test_rows.tolist())
            d["y_test"] = self.y_test.tolist()
            d["y_pred"] = self.y_pred.tolist()
        return d


@dataclass
class ForecastReport:
    model: str
    category: str
    task: str
    entries: dict[str, HorizonResult] = field(default_factory=dict)
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "model": self.model, "category": self.category, "task": self.task,
            "seed": self.seed, "extra": self.extra,
            "horizons": {k: v.to_dict() for k, v in self.entries.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)

    def flat_rows(self):
        for label, r in self.entries.items():
            yield {
                "task": self.task, "model": self.model, "category": self.category,
                "horizon": label, "rmse": r.rmse, "nrmse": r.nrmse,
                "dm_statistic": None if r.dm is None else r.dm.statistic,
                "dm_p_value": None if r.dm is None else r.dm.p_value,
                "dm_baseline": r.dm_baseline,
                "params": json.dumps(r.best_params, sort_keys=True),
            }


def split_point(n_rows: int, train_fraction: float = TRAIN_FRACTION) -> int:
    return int(math.floor(train_fraction * n_rows))


def backtest(features, y, task: ForecastTask, family: ModelFamily, plan: CvPlan = CvPlan(), *,
             constructs: ConstructIndexSets | None = None, grid=None,
             baseline: HorizonResult | None = None, baseline_name: str = "baseline",
             periods=None, feature_names=None, train_fraction: float = TRAIN_FRACTION,
             test_start: int | None = None, observer: Observer | None = None,
             seed: int | None = None) -> ForecastReport:
    """Tune on the first 60% of usable rows, refit there, score the last 40%.

    ``test_start`` (an origin period index) pins the split so that models
    with different lag orders share the same test periods.
    """
    ds = make_supervised_dataset(features if family.uses_text else None, y, family.lags,
                                 task.horizon, task.delta, periods, feature_names)
    if test_start is None:
        n_train = split_point(len(ds), train_fraction)
    else:
        n_train = int(np.searchsorted(ds.rows, test_start))
    if n_train < 2 or n_train >= len(ds):
        raise ValueError(f"split leaves {n_train} training and {len(ds) - n_train} test rows")
    train = ds.subset(np.arange(n_train))
    test = ds.subset(np.arange(n_train, len(ds)))

    tuned = tune(train, family, grid, plan, constructs, observer)
    fitted = fit_pipeline(family, tuned.best, train, constructs, observer)
    pred = fitted.predict(test)
    err = test.y - pred
    score = rmse(err)
    try:
        norm_score = nrmse(score, test.y)
    except SemForecastError:
        norm_score = None

    result = HorizonResult(
        task.label, task.horizon, task.delta, score, norm_score, tuned.best, tuned.best_rmse,
        len(train), len(test), test.rows, test.periods, test.y, pred,
        cv_table=tuned.table, fitted=fitted)
    if family.source == "path":
        result.decomposition = fitted.decompose(test)
    if baseline is not None:
        result.compare(baseline, baseline_name)
    return ForecastReport(family.name, family.category, task.name, {task.label: result}, seed)
