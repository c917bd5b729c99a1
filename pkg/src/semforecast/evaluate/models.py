"""Model families and their leakage-safe fit/predict pipelines.

A family name combines a feature source, an estimator and a lag variant,
e.g. ``ar6``, ``path-lasso6``, ``semantic-pcr1``, ``tfidf-enet``,
``lsa-ridge6``. The trailing digit selects lag orders: none, ``1`` or ``6``
(lags 1 to 6).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from itertools import product
from typing import Callable

import numpy as np

from ..errors import DegenerateError, ModelTypeError
from ..lexicon import ConstructIndexSets
from ..pathmodel import PathModelSpec, fit_path_model, fit_semantic_features
from ..reduce import fit_reducer, fit_standardizer
from ..regress import PenaltyConfig, fit_linear, fit_ols
from .dataset import SupervisedDataset

logger = logging.getLogger(__name__)

SOURCES = ("ar", "tfidf", "pca", "lsa", "semantic", "path")
ESTIMATORS = ("ols", "lasso", "ridge", "enet", "pcr", "plsr")

ALPHA_GRID = tuple(float(a) for a in np.logspace(-4, 2, 13))
MIX_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)
COMPONENT_GRID = (2, 5, 10, 20)

_NAME_RE = re.compile(r"^(?:(ar)(\d+)|([a-z]+)-([a-z]+)(\d*))$")

# observer(stage, rows) is told which dataset origins each fitted component saw
Observer = Callable[[str, np.ndarray], None]


@dataclass(frozen=True)
class ModelFamily:
    source: str
    estimator: str = "ols"
    lags: tuple[int, ...] = ()

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown feature source {self.source!r}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.source == "ar" and (self.estimator != "ols" or not self.lags):
            raise ValueError("AR baselines are OLS on at least one lag")
        if self.source == "path" and self.estimator not in ("ols", "lasso", "ridge", "enet"):
            raise ValueError("path models take an ols/lasso/ridge/enet inner estimator")
        if self.source == "tfidf" and self.estimator == "ols":
            raise ValueError("OLS on the full tf-idf matrix is not identifiable; regularize")

    @classmethod
    def parse(cls, name: str) -> "ModelFamily":
        m = _NAME_RE.match(name.strip().lower())
        if m is None:
            raise ValueError(f"cannot parse model family {name!r}")
        if m.group(1):
            return cls("ar", "ols", _lag_variant(m.group(2)))
        return cls(m.group(3), m.group(4), _lag_variant(m.group(5)))

    @property
    def name(self) -> str:
        suffix = "" if not self.lags else str(max(self.lags))
        if self.source == "ar":
            return f"ar{suffix}"
        return f"{self.source}-{self.estimator}{suffix}"

    @property
    def uses_text(self) -> bool:
        return self.source != "ar"

    @property
    def category(self) -> str:
        return {"ar": "Benchmark: lags", "path": "Semantic path model",
                "semantic": "Semantic features"}.get(self.source, "High-dimensional input")

    def default_grid(self) -> list[dict]:
        est = _estimator_grid(self.estimator)
        if self.source in ("pca", "lsa"):
            return [{"n_components": k, **g} for k, g in product(COMPONENT_GRID, est)]
        return est


def _lag_variant(text: str) -> tuple[int, ...]:
    if not text:
        return ()
    top = int(text)
    if top < 1:
        raise ValueError("lag variant must be >= 1")
    return (1,) if top == 1 else tuple(range(1, top + 1))


def _estimator_grid(est: str) -> list[dict]:
    if est == "ols":
        return [{}]
    if est == "lasso":
        return [{"alpha1": a} for a in ALPHA_GRID]
    if est == "ridge":
        return [{"alpha2": a} for a in ALPHA_GRID]
    if est == "enet":
        return [{"alpha": a, "mix": m} for a, m in product(ALPHA_GRID, MIX_GRID)]
    return [{"k": k} for k in COMPONENT_GRID]


def penalty_of(params: dict) -> PenaltyConfig:
    if "alpha" in params:
        return PenaltyConfig.from_mixing(params["alpha"], params["mix"])
    return PenaltyConfig(params.get("alpha1", 0.0), params.get("alpha2", 0.0))


def regularization_key(params: dict) -> tuple:
    """Sort key: larger alpha1, then larger alpha2, then fewer components first."""
    pen = penalty_of(params) if any(k.startswith("alpha") for k in params) else PenaltyConfig()
    k = params.get("k", 0) + params.get("n_components", 0)
    return (-pen.alpha1, -pen.alpha2, k)


def _estimator_params(params: dict) -> dict:
    return {k: v for k, v in params.items() if k != "n_components"}


class FittedPipeline:
    """Preprocessing plus estimator fitted on one training slice."""

    def __init__(self, family, params, predict_fn, model=None, lag_std=None, text_std=None):
        self.family = family
        self.params = params
        self._predict = predict_fn
        self.model = model
        self.lag_std = lag_std
        self.text_std = text_std

    def predict(self, ds: SupervisedDataset) -> np.ndarray:
        return self._predict(ds)

    def decompose(self, ds: SupervisedDataset):
        if self.family.source != "path":
            raise ModelTypeError("decomposition requires a path model")
        return self.model.decompose(self._path_design(ds))

    def _path_design(self, ds):
        parts = [self.text_std.transform(ds.text)]
        if self.lag_std is not None:
            parts.append(self.lag_std.transform(ds.lags))
        return np.hstack(parts)


def _notify(observer, stage, ds):
    if observer is not None:
        observer(stage, ds.rows)


def _lag_part(ds, observer):
    if ds.lags.shape[1] == 0:
        return None, None
    _notify(observer, "lag_standardizer", ds)
    S = fit_standardizer(ds.lags)
    return S, S.transform(ds.lags)


def _active_constructs(constructs: ConstructIndexSets, Xs: np.ndarray):
    """Keep constructs with at least one term varying in this training slice."""
    out = []
    for name, idx in constructs.items():
        if np.any(Xs[:, idx].std(axis=0) > 0):
            out.append((name, tuple(int(j) for j in idx)))
        else:
            logger.debug("construct %r has no varying term in this slice; skipped", name)
    if not out:
        raise DegenerateError("no construct has a varying term in the training slice")
    return tuple(out)


def fit_pipeline(family: ModelFamily, params: dict, ds: SupervisedDataset,
                 constructs: ConstructIndexSets | None = None,
                 observer: Observer | None = None) -> FittedPipeline:
    """Fit every preprocessing step and the estimator on ``ds`` only."""
    lag_std, lag_z = _lag_part(ds, observer)

    if family.source == "ar":
        _notify(observer, "estimator", ds)
        model = fit_ols(ds.lags, ds.y, rank_check=False)
        return FittedPipeline(family, params, lambda d: model.predict(d.lags), model)

    if ds.text is None:
        raise ValueError(f"{family.name} needs text features")

    def with_lags(F, d=None):
        if lag_std is None:
            return F
        L = lag_z if d is None else lag_std.transform(d.lags)
        return np.hstack([F, L])

    if family.source in ("path", "semantic"):
        if constructs is None:
            raise ValueError(f"{family.name} needs lexicon construct index sets")
        _notify(observer, "text_standardizer", ds)
        S = fit_standardizer(ds.text)
        Xs = S.transform(ds.text)
        active = _active_constructs(constructs, Xs)
        _notify(observer, "outer_weights", ds)
        if family.source == "path":
            p = Xs.shape[1]
            lag_names = [f"lag{k}" for k in ds.lag_orders]
            spec = PathModelSpec(
                active + tuple((nm, (p + c,)) for c, nm in enumerate(lag_names)),
                inner=family.estimator,
                penalty=penalty_of(params) if family.estimator != "ols" else PenaltyConfig(),
                fixed=tuple(lag_names))
            _notify(observer, "estimator", ds)
            model = fit_path_model(with_lags(Xs), ds.y, spec)
            fp = FittedPipeline(family, params, None, model, lag_std, S)
            fp._predict = lambda d: model.predict(fp._path_design(d))
            return fp
        spec = PathModelSpec(active)
        _notify(observer, "estimator", ds)
        model = fit_semantic_features(Xs, ds.y, spec, (family.estimator, params),
                                      extra=lag_z)
        return FittedPipeline(
            family, params,
            lambda d: model.predict(S.transform(d.text),
                                    None if lag_std is None else lag_std.transform(d.lags)),
            model, lag_std, S)

    if family.source == "tfidf":
        _notify(observer, "text_standardizer", ds)
        S = fit_standardizer(ds.text)
        _notify(observer, "estimator", ds)
        model = fit_linear(family.estimator, with_lags(S.transform(ds.text)), ds.y, **params)
        return FittedPipeline(
            family, params, lambda d: model.predict(with_lags(S.transform(d.text), d)),
            model, lag_std, S)

    # pca / lsa: reduce, standardize the scores, then fit
    k = int(params["n_components"])
    if family.source == "pca":
        _notify(observer, "text_standardizer", ds)
        S = fit_standardizer(ds.text)
        pre = S.transform
    else:
        S = None
        pre = lambda X: np.asarray(X, dtype=float)  # noqa: E731
    _notify(observer, "reducer", ds)
    R = fit_reducer(pre(ds.text), family.source, k)
    T = R.transform(pre(ds.text))
    _notify(observer, "score_standardizer", ds)
    TS = fit_standardizer(T)
    _notify(observer, "estimator", ds)
    model = fit_linear(family.estimator, with_lags(TS.transform(T)), ds.y,
                       **_estimator_params(params))
    return FittedPipeline(
        family, params,
        lambda d: model.predict(with_lags(TS.transform(R.transform(pre(d.text))), d)),
        model, lag_std, S)
