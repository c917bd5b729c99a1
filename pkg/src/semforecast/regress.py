"""Linear predictors: OLS, elastic net by coordinate descent, PCR, PLS-R and AR(l).

Penalized fits minimise::

    1/(2n) * ||y - b0 - X b||^2 + alpha1 * ||b||_1 + alpha2 * ||b||_2^2

Every penalty grid in the package is expressed against this scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ConvergenceError, DegenerateError, RankDeficientError
from .reduce import Standardizer, fit_reducer, max_components

CD_TOL = 1e-7
CD_MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class PenaltyConfig:
    alpha1: float = 0.0
    alpha2: float = 0.0

    def __post_init__(self):
        for name in ("alpha1", "alpha2"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    @classmethod
    def from_mixing(cls, alpha: float, mix: float) -> "PenaltyConfig":
        """glmnet-style ``alpha * (mix*|b|_1 + (1-mix)/2 * |b|_2^2)``."""
        if not 0.0 <= mix <= 1.0:
            raise ValueError("mix must lie in [0, 1]")
        return cls(alpha * mix, alpha * (1.0 - mix) / 2.0)


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Affine predictor ``intercept + x @ coef``.

    When ``standardizer`` is set, raw inputs are standardized before use.
    """

    intercept: float
    coef: np.ndarray
    kind: str = "ols"
    params: dict = field(default_factory=dict)
    standardizer: Standardizer | None = None
    n_iter: int = 0

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.coef.shape[0]:
            raise ValueError(f"expected {self.coef.shape[0]} features, got {X.shape[1]}")
        if self.standardizer is not None:
            X = self.standardizer.transform(X)
        return self.intercept + X @ self.coef

    def to_dict(self):
        return {
            "kind": self.kind,
            "intercept": float(self.intercept),
            "coef": self.coef.tolist(),
            "params": self.params,
            "standardizer": None if self.standardizer is None else self.standardizer.to_dict(),
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_dict(cls, d):
        std = d.get("standardizer")
        return cls(float(d["intercept"]), np.asarray(d["coef"], float), d["kind"],
                   dict(d.get("params", {})),
                   None if std is None else Standardizer.from_dict(std), int(d.get("n_iter", 0)))


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in X or y")
    return X, y


def _centered_lstsq(X, y, check_rank=True):
    xm, ym = X.mean(axis=0), y.mean()
    Xc, yc = X - xm, y - ym
    if X.shape[1] == 0:
        return ym, np.zeros(0)
    beta, _, rank, _ = np.linalg.lstsq(Xc, yc, rcond=None)
    if check_rank and rank < X.shape[1]:
        raise RankDeficientError(
            f"design has rank {rank} < {X.shape[1]} columns; "
            "use a penalized fit (ridge/lasso/elastic net) instead")
    return ym - xm @ beta, beta


def fit_ols(X, y, rank_check: bool = True) -> LinearModel:
    """Ordinary least squares with an intercept.

    With ``rank_check=False`` a rank-deficient design gets the minimum-norm
    solution instead of an error.
    """
    X, y = _check_xy(X, y)
    n, p = X.shape
    if rank_check and n <= p:
        raise RankDeficientError(
            f"OLS needs more rows than columns (got {n} x {p}); use a penalized fit")
    b0, beta = _centered_lstsq(X, y, check_rank=rank_check)
    return LinearModel(float(b0), beta, "ols")


@njit(cache=True)
def _cd_sweeps(X, y, a1, a2, order, tol, max_sweeps, beta):
    n, p = X.shape
    r = y.copy()
    for j in range(p):
        if beta[j] != 0.0:
            for i in range(n):
                r[i] -= X[i, j] * beta[j]
    colsq = np.zeros(p)
    for j in range(p):
        for i in range(n):
            colsq[j] += X[i, j] * X[i, j]
        colsq[j] /= n
    maxd = np.inf
    for sweep in range(max_sweeps):
        maxd = 0.0
        for jj in range(p):
            j = order[jj]
            bj = beta[j]
            if colsq[j] == 0.0:
                new = 0.0
            else:
                rho = 0.0
                for i in range(n):
                    rho += X[i, j] * r[i]
                rho = rho / n + colsq[j] * bj
                if rho > a1:
                    new = (rho - a1) / (colsq[j] + 2.0 * a2)
                elif rho < -a1:
                    new = (rho + a1) / (colsq[j] + 2.0 * a2)
                else:
                    new = 0.0
            d = new - bj
            if d != 0.0:
                for i in range(n):
                    r[i] -= X[i, j] * d
                beta[j] = new
                ad = abs(d)
                if ad > maxd:
                    maxd = ad
        if maxd < tol:
            return sweep + 1, maxd
    return -1, maxd


def kkt_residuals(Xc, yc, beta, pen: PenaltyConfig) -> np.ndarray:
    """Per-coordinate violation of the elastic-net optimality conditions (centered data)."""
    n = Xc.shape[0]
    g = Xc.T @ (yc - Xc @ beta) / n - 2.0 * pen.alpha2 * beta
    out = np.empty_like(beta)
    nz = beta != 0
    out[nz] = np.abs(g[nz] - pen.alpha1 * np.sign(beta[nz]))
    out[~nz] = np.maximum(np.abs(g[~nz]) - pen.alpha1, 0.0)
    return out


def _polish(Xc, yc, beta, pen):
    """Solve the stationarity equations on the active set exactly.

    Coordinate descent stops at a coefficient-change tolerance; when the
    active set and signs are already right, one linear solve removes the
    remaining optimisation error. The refined point is kept only if it
    satisfies the full optimality conditions.
    """
    active = np.flatnonzero(beta)
    if active.size == 0 or (active.size >= Xc.shape[0] and pen.alpha2 == 0):
        return beta
    n = Xc.shape[0]
    XA = Xc[:, active]
    s = np.sign(beta[active])
    A = XA.T @ XA / n + 2.0 * pen.alpha2 * np.eye(active.size)
    rhs = XA.T @ yc / n - pen.alpha1 * s
    try:
        bA = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return beta
    if not np.all(np.isfinite(bA)) or np.any(np.sign(bA) != s):
        return beta
    cand = np.zeros_like(beta)
    cand[active] = bA
    if kkt_residuals(Xc, yc, cand, pen).max() <= kkt_residuals(Xc, yc, beta, pen).max():
        return cand
    return beta


def fit_elastic_net(X, y, pen: PenaltyConfig = PenaltyConfig(), *, order=None,
                    tol: float = CD_TOL, max_sweeps: int = CD_MAX_SWEEPS,
                    standardizer: Standardizer | None = None,
                    warm_start=None) -> LinearModel:
    """Cyclic coordinate descent for ridge / LASSO / elastic net.

    ``X`` is expected to be standardized by the caller; both ``X`` and ``y``
    are centered internally so the intercept is ``mean(y)`` on standardized
    inputs. Sweeps stop once the largest coefficient change falls below
    ``tol``. ``order`` overrides the cyclic visiting order.
    """
    X, y = _check_xy(X, y)
    n, p = X.shape
    xm, ym = X.mean(axis=0), y.mean()
    Xc = np.ascontiguousarray(X - xm)
    yc = y - ym
    if order is None:
        order = np.arange(p, dtype=np.int64)
    else:
        order = np.asarray(order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(p)):
            raise ValueError("order must be a permutation of the column indices")
    params = {"alpha1": pen.alpha1, "alpha2": pen.alpha2}
    if p == 0 or pen.alpha1 >= np.max(np.abs(Xc.T @ yc)) / n:
        # at or above the null threshold the solution is exactly zero
        return LinearModel(float(ym), np.zeros(p), "enet", params, standardizer, 0)
    beta = np.zeros(p) if warm_start is None else np.array(warm_start, dtype=float)
    Xf = np.asfortranarray(Xc)
    sweeps, delta = _cd_sweeps(Xf, yc, float(pen.alpha1), float(pen.alpha2),
                               order, float(tol), int(max_sweeps), beta)
    if sweeps < 0:
        gap = float(kkt_residuals(Xc, yc, beta, pen).max())
        raise ConvergenceError(
            f"coordinate descent did not converge in {max_sweeps} sweeps "
            f"(last max change {delta:.3g}, KKT violation {gap:.3g})", delta=gap)
    beta = _polish(Xc, yc, beta, pen)
    return LinearModel(float(ym - xm @ beta), beta, "enet", params, standardizer, int(sweeps))


def lasso_null_threshold(X, y) -> float:
    """Smallest alpha1 at which the LASSO solution is identically zero."""
    X, y = _check_xy(X, y)
    Xc = X - X.mean(axis=0)
    return float(np.max(np.abs(Xc.T @ (y - y.mean()))) / X.shape[0])


def fit_pcr(X, y, k: int) -> LinearModel:
    """OLS on the first ``k`` principal components, mapped back to input coordinates."""
    X, y = _check_xy(X, y)
    R = fit_reducer(X, "pca", k)
    T = R.transform(X)
    yc = y - y.mean()
    gamma = (T.T @ yc) / np.sum(T ** 2, axis=0)
    coef = R.loadings @ gamma
    return LinearModel(float(y.mean() - R.center @ coef), coef, "pcr", {"k": k})


def fit_plsr(X, y, k: int) -> LinearModel:
    """Univariate-response PLS regression via NIPALS with ``k`` deflation steps."""
    X, y = _check_xy(X, y)
    if k < 1:
        raise ValueError("k must be >= 1")
    if np.ptp(y) == 0:
        raise DegenerateError("PLS-R needs a response with nonzero variance")
    rank = max_components(X, "pca")
    if k > rank:
        raise RankDeficientError(f"k={k} exceeds the attainable maximum of {rank} components")
    xm, ym = X.mean(axis=0), y.mean()
    E = X - xm
    f = y - ym
    W, P, q = [], [], []
    for _ in range(k):
        w = E.T @ f
        norm = np.linalg.norm(w)
        if norm <= 1e-14 * max(1.0, np.linalg.norm(X)):
            break  # residual response already orthogonal to X
        w = w / norm
        t = E @ w
        tt = t @ t
        p_ = E.T @ t / tt
        qa = (f @ t) / tt
        E = E - np.outer(t, p_)
        f = f - qa * t
        W.append(w)
        P.append(p_)
        q.append(qa)
    W = np.column_stack(W)
    P = np.column_stack(P)
    coef = W @ np.linalg.solve(P.T @ W, np.asarray(q))
    return LinearModel(float(ym - xm @ coef), coef, "plsr", {"k": k})


def ar_design(y, l: int, h: int):
    """Lag design for ``Y[i+h] ~ Y[i-1], ..., Y[i-l]``.

    Returns ``(X, target, rows)`` where ``rows`` are the origin indices ``i``.
    """
    y = np.asarray(y, dtype=float).ravel()
    if l < 1 or h < 0:
        raise ValueError("need l >= 1 and h >= 0")
    rows = np.arange(l, y.shape[0] - h)
    X = np.column_stack([y[rows - k] for k in range(1, l + 1)]) if rows.size else np.empty((0, l))
    return X, y[rows + h], rows


def fit_ar(y, l: int, h: int) -> LinearModel:
    """Direct h-step AR(l): regress ``Y[i+h]`` on ``Y[i-1..i-l]`` by OLS.

    Collinear lag columns (a constant series, say) get the minimum-norm
    solution instead of an error, so a constant series forecasts itself.
    """
    y = np.asarray(y, dtype=float).ravel()
    need = l + h + 3
    if y.shape[0] < need:
        raise ValueError(f"AR({l}) at horizon {h} needs a series of length >= {need}, "
                         f"got {y.shape[0]}")
    X, target, _ = ar_design(y, l, h)
    m = fit_ols(X, target, rank_check=False)
    return LinearModel(m.intercept, m.coef, "ar", {"lags": l, "horizon": h})


def fit_linear(name: str, X, y, **params) -> LinearModel:
    """Dispatch by estimator name: ols, lasso, ridge, enet, pcr, plsr."""
    if name == "ols":
        return fit_ols(X, y)
    if name == "lasso":
        return fit_elastic_net(X, y, PenaltyConfig(alpha1=params["alpha1"]))
    if name == "ridge":
        return fit_elastic_net(X, y, PenaltyConfig(alpha2=params["alpha2"]))
    if name == "enet":
        if "alpha" in params:
            pen = PenaltyConfig.from_mixing(params["alpha"], params["mix"])
        else:
            pen = PenaltyConfig(params.get("alpha1", 0.0), params.get("alpha2", 0.0))
        return fit_elastic_net(X, y, pen)
    if name == "pcr":
        return fit_pcr(X, y, int(params["k"]))
    if name == "plsr":
        return fit_plsr(X, y, int(params["k"]))
    raise ValueError(f"unknown estimator {name!r}")
