"""Semantic path models: dictionary-constrained projections onto latent constructs.

Each construct ``i`` owns a term subset ``I_i`` and a score
``z_i = sum_{j in I_i} phi_ij x_j``. Outer weights ``phi`` are estimated by
PLS path modeling (Mode A) against the response; the forecast is the inner
linear model ``psi_0 + sum_i psi_i z_i``, estimated by OLS or by the
penalized coordinate-descent solver from :mod:`semforecast.regress`.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AlignmentError, ConvergenceError, DegenerateError
from .lexicon import ConstructIndexSets
from .regress import LinearModel, PenaltyConfig, fit_elastic_net, fit_linear, fit_ols

logger = logging.getLogger(__name__)

INNER_ESTIMATORS = ("ols", "lasso", "ridge", "enet")
SCHEMES = ("centroid", "factorial")

# A construct score whose standard deviation drops below this has collapsed.
_COLLAPSE_TOL = 1e-12


@dataclass(frozen=True)
class PathModelSpec:
    """Structure and estimation settings for a semantic path model.

    ``constructs`` pairs each construct name with its column indices.
    Names listed in ``fixed`` are single-indicator constructs (e.g. lag
    columns) whose outer weight is held at one unit of standard deviation.
    """

    constructs: tuple[tuple[str, tuple[int, ...]], ...]
    inner: str = "ols"
    penalty: PenaltyConfig = PenaltyConfig()
    scheme: str = "centroid"
    tol: float = 1e-6
    max_iter: int = 300
    fixed: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.constructs:
            raise ValueError("a path model needs at least one construct")
        names = [n for n, _ in self.constructs]
        if len(set(names)) != len(names):
            raise ValueError("construct names must be unique")
        for name, idx in self.constructs:
            if len(idx) == 0:
                raise ValueError(f"construct {name!r} has an empty index set")
            if name in self.fixed and len(idx) != 1:
                raise ValueError(f"fixed construct {name!r} must have exactly one column")
        if self.inner not in INNER_ESTIMATORS:
            raise ValueError(f"inner estimator must be one of {INNER_ESTIMATORS}")
        if self.inner == "ols" and (self.penalty.alpha1 or self.penalty.alpha2):
            raise ValueError("OLS inner model takes no penalty")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")

    @classmethod
    def from_index_sets(cls, sets: ConstructIndexSets, extra: dict[str, int] | None = None,
                        **kwargs) -> "PathModelSpec":
        """Build from bound lexicon sets; ``extra`` maps fixed construct names to columns."""
        constructs = [(n, tuple(int(j) for j in idx)) for n, idx in sets.items()]
        fixed = []
        for name, col in (extra or {}).items():
            constructs.append((name, (int(col),)))
            fixed.append(name)
        return cls(tuple(constructs), fixed=tuple(fixed), **kwargs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.constructs)


@dataclass(frozen=True, eq=False)
class OuterWeights:
    """Converged outer weights; ``weights[i]`` is aligned with ``indices[i]``."""

    names: tuple[str, ...]
    indices: tuple[np.ndarray, ...]
    weights: tuple[np.ndarray, ...]
    x_center: np.ndarray
    n_iter: int
    converged: bool
    delta: float
    feature_names: tuple[str, ...] | None = None

    @property
    def n_features(self) -> int:
        return self.x_center.shape[0]

    def _check(self, X, columns=None) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise AlignmentError(
                f"expected {self.n_features} feature columns, got {X.shape[1]}")
        if columns is not None and self.feature_names is not None \
                and tuple(columns) != self.feature_names:
            raise AlignmentError("feature columns are not aligned with the training vocabulary")
        return X

    def scores(self, X, columns=None) -> np.ndarray:
        Xc = self._check(X, columns) - self.x_center
        return np.column_stack([Xc[:, idx] @ w for idx, w in zip(self.indices, self.weights)])

    def dense(self) -> np.ndarray:
        """Features x constructs matrix, zero outside each construct's index set."""
        out = np.zeros((self.n_features, len(self.names)))
        for i, (idx, w) in enumerate(zip(self.indices, self.weights)):
            out[idx, i] = w
        return out

    def to_dict(self):
        return {
            "names": list(self.names),
            "indices": [i.tolist() for i in self.indices],
            "weights": [w.tolist() for w in self.weights],
            "x_center": self.x_center.tolist(),
            "n_iter": self.n_iter, "converged": self.converged, "delta": self.delta,
            "feature_names": None if self.feature_names is None else list(self.feature_names),
        }

    @classmethod
    def from_dict(cls, d):
        fn = d.get("feature_names")
        return cls(tuple(d["names"]),
                   tuple(np.asarray(i, dtype=np.int64) for i in d["indices"]),
                   tuple(np.asarray(w, dtype=float) for w in d["weights"]),
                   np.asarray(d["x_center"], float), int(d["n_iter"]),
                   bool(d["converged"]), float(d["delta"]),
                   None if fn is None else tuple(fn))


def estimate_outer_weights(X, y, spec: PathModelSpec, feature_names=None) -> OuterWeights:
    """Iterate Mode A outer estimation until the outer weights settle.

    With the standardized response as the only endogenous construct, the
    inner approximation of construct ``i`` is ``e_i * y_std`` where ``e_i``
    is the sign (centroid) or value (factorial) of ``corr(z_i, y_std)``; the
    new weights are ``cov(x_j, e_i * y_std)``. Weights are rescaled each
    iteration so every score has unit variance. After convergence each score
    is oriented to correlate non-negatively with the plain sum of its terms.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if y.shape[0] != n:
        raise ValueError(f"X has {n} rows but y has {y.shape[0]}")
    if n < 3:
        raise ValueError("need at least 3 rows")
    for name, idx in spec.constructs:
        if max(idx) >= p or min(idx) < 0:
            raise IndexError(f"construct {name!r} references columns outside 0..{p - 1}")

    x_center = X.mean(axis=0)
    Xc = X - x_center
    sd_y = y.std(ddof=1)
    if not sd_y > 0:
        raise DegenerateError("response has zero variance")
    y_std = (y - y.mean()) / sd_y

    blocks = [Xc[:, np.asarray(idx)] for _, idx in spec.constructs]
    fixed = [name in spec.fixed for name in spec.names]
    for name, B in zip(spec.names, blocks):
        if not np.any(B.std(axis=0, ddof=1) > 0):
            raise DegenerateError(f"construct {name!r} has no term with nonzero variance")

    raw = [np.ones(B.shape[1]) for B in blocks]
    prev = None
    converged, delta, it = False, np.inf, 0
    for it in range(1, spec.max_iter + 1):
        normed, zs = [], []
        for name, B, w in zip(spec.names, blocks, raw):
            z = B @ w
            sd = z.std(ddof=1)
            if not sd > _COLLAPSE_TOL:
                raise DegenerateError(
                    f"score of construct {name!r} collapsed to zero variance at iteration {it}")
            normed.append(w / sd)
            zs.append(z / sd)
        if prev is not None:
            delta = max(float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
                        for a, b in zip(normed, prev))
            if delta < spec.tol:
                converged = True
                break
        prev = normed
        raw = []
        for B, z, fx, w in zip(blocks, zs, fixed, normed):
            if fx:
                raw.append(w)
                continue
            r = float(z @ y_std) / (n - 1)
            e = np.sign(r) if spec.scheme == "centroid" else r
            raw.append(B.T @ (e * y_std) / (n - 1))
    if not converged:
        raise ConvergenceError(
            f"outer weights did not converge in {spec.max_iter} iterations "
            f"(last relative change {delta:.3g})", delta=delta)

    weights = []
    for B, w, fx in zip(blocks, normed, fixed):
        if not fx:
            z = B @ w
            if float(z @ B.sum(axis=1)) < 0:
                w = -w
        weights.append(w)
    return OuterWeights(spec.names,
                        tuple(np.asarray(idx, dtype=np.int64) for _, idx in spec.constructs),
                        tuple(weights), x_center, it, converged, float(delta),
                        None if feature_names is None else tuple(feature_names))


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Per-row intercept, construct contributions ``psi_i * z_i`` and their total."""

    names: tuple[str, ...]
    intercept: float
    contributions: np.ndarray
    prediction: np.ndarray

    def to_csv(self, path, periods: Sequence[str] | None = None) -> None:
        n = self.prediction.shape[0]
        labels = list(periods) if periods is not None else [str(i) for i in range(n)]
        if len(labels) != n:
            raise ValueError("need one period label per row")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["period", "intercept", *self.names, "prediction"])
            for lab, row, pred in zip(labels, self.contributions, self.prediction):
                w.writerow([lab, repr(float(self.intercept)),
                            *(repr(float(v)) for v in row), repr(float(pred))])


@dataclass(frozen=True, eq=False)
class FittedPathModel:
    outer: OuterWeights
    psi0: float
    psi: np.ndarray
    inner: str
    penalty: PenaltyConfig
    y_mean: float
    y_scale: float
    tol: float = 1e-6
    max_iter: int = 300
    scheme: str = "centroid"
    fixed: tuple[str, ...] = ()

    @property
    def names(self):
        return self.outer.names

    @property
    def n_iter(self):
        return self.outer.n_iter

    @property
    def converged(self):
        return self.outer.converged

    def scores(self, X, columns=None) -> np.ndarray:
        return self.outer.scores(X, columns)

    def predict(self, X, columns=None) -> np.ndarray:
        return self.psi0 + self.scores(X, columns) @ self.psi

    def decompose(self, X, columns=None) -> Decomposition:
        contrib = self.scores(X, columns) * self.psi
        return Decomposition(self.names, float(self.psi0), contrib,
                             self.psi0 + contrib.sum(axis=1))

    def to_dict(self):
        return {
            "type": "path_model",
            "outer": self.outer.to_dict(),
            "psi0": float(self.psi0), "psi": self.psi.tolist(),
            "inner": self.inner,
            "penalty": {"alpha1": self.penalty.alpha1, "alpha2": self.penalty.alpha2},
            "y_mean": self.y_mean, "y_scale": self.y_scale,
            "tol": self.tol, "max_iter": self.max_iter, "scheme": self.scheme,
            "fixed": list(self.fixed),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(OuterWeights.from_dict(d["outer"]), float(d["psi0"]),
                   np.asarray(d["psi"], float), d["inner"], PenaltyConfig(**d["penalty"]),
                   float(d["y_mean"]), float(d["y_scale"]), float(d["tol"]),
                   int(d["max_iter"]), d["scheme"], tuple(d.get("fixed", ())))


def _fit_inner(Z, y, spec: PathModelSpec) -> LinearModel:
    if spec.inner == "ols":
        return fit_ols(Z, y)
    return fit_elastic_net(Z, y, spec.penalty)


def fit_path_model(X, y, spec: PathModelSpec, feature_names=None) -> FittedPathModel:
    """Estimate outer weights, then the inner model on the unit-variance scores."""
    y = np.asarray(y, dtype=float).ravel()
    outer = estimate_outer_weights(X, y, spec, feature_names)
    Z = outer.scores(X)
    inner = _fit_inner(Z, y, spec)
    logger.debug("path model converged after %d iterations", outer.n_iter)
    return FittedPathModel(outer, inner.intercept, inner.coef, spec.inner, spec.penalty,
                           float(y.mean()), float(y.std(ddof=1)), spec.tol, spec.max_iter,
                           spec.scheme, spec.fixed)


def predict_path(model: FittedPathModel, X, columns=None) -> np.ndarray:
    return model.predict(X, columns)


def decompose(model: FittedPathModel, X, columns=None) -> Decomposition:
    return model.decompose(X, columns)


@dataclass(frozen=True, eq=False)
class SemanticFeatureModel:
    """Construct scores fed to any estimator from :mod:`semforecast.regress`.

    Extra columns (typically standardized lags) are appended after the
    scores at fit and predict time.
    """

    outer: OuterWeights
    downstream: LinearModel
    estimator: str
    params: dict = field(default_factory=dict)
    n_extra: int = 0

    def design(self, X, extra=None, columns=None) -> np.ndarray:
        Z = self.outer.scores(X, columns)
        if self.n_extra:
            if extra is None:
                raise AlignmentError(f"model expects {self.n_extra} extra columns")
            extra = np.asarray(extra, dtype=float).reshape(Z.shape[0], -1)
            if extra.shape[1] != self.n_extra:
                raise AlignmentError(f"model expects {self.n_extra} extra columns")
            Z = np.hstack([Z, extra])
        elif extra is not None and np.size(extra):
            raise AlignmentError("model was fitted without extra columns")
        return Z

    def predict(self, X, extra=None, columns=None) -> np.ndarray:
        return self.downstream.predict(self.design(X, extra, columns))


def fit_semantic_features(X, y, spec: PathModelSpec, downstream=("ols", {}), extra=None,
                          feature_names=None) -> SemanticFeatureModel:
    """Project terms onto constructs like the path model, then fit ``downstream``.

    ``downstream`` is ``(estimator_name, params)`` understood by
    :func:`semforecast.regress.fit_linear`.
    """
    name, params = downstream
    y = np.asarray(y, dtype=float).ravel()
    outer = estimate_outer_weights(X, y, spec, feature_names)
    Z = outer.scores(X)
    n_extra = 0
    if extra is not None and np.size(extra):
        extra = np.asarray(extra, dtype=float).reshape(Z.shape[0], -1)
        n_extra = extra.shape[1]
        Z = np.hstack([Z, extra])
    model = fit_linear(name, Z, y, **params)
    return SemanticFeatureModel(outer, model, name, dict(params), n_extra)
