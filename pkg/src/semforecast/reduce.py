"""Standardization and unsupervised linear dimension reduction (PCA, LSA)."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import RankDeficientError

# Columns with standard deviation below this (relative to 1 + |mean|) count as constant.
_CONST_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-column centering/scaling learned from a training slice (ddof=1)."""

    mean: np.ndarray
    scale: np.ndarray
    constant: np.ndarray
    n_fit: int

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.mean.shape[0]:
            raise ValueError(f"expected {self.mean.shape[0]} columns, got shape {X.shape}")
        out = (X - self.mean) / self.scale
        out[:, self.constant] = 0.0
        return out

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist(),
                "constant": self.constant.tolist(), "n_fit": self.n_fit}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], float), np.asarray(d["scale"], float),
                   np.asarray(d["constant"], bool), int(d["n_fit"]))


def fit_standardizer(X) -> Standardizer:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if X.shape[0] < 2:
        raise ValueError("standardizer needs at least 2 rows to estimate a variance")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite values in standardizer input")
    mean = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1)
    constant = sd <= _CONST_TOL * (1.0 + np.abs(mean))
    scale = np.where(constant, 1.0, sd)
    return Standardizer(mean, scale, constant, X.shape[0])


def apply_standardizer(S: Standardizer, X) -> np.ndarray:
    return S.transform(X)


@dataclass(frozen=True, eq=False)
class LinearReducer:
    """Fitted PCA or LSA projection; ``loadings`` columns are orthonormal."""

    kind: str
    loadings: np.ndarray
    center: np.ndarray
    singular_values: np.ndarray
    explained_variance_ratio: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.loadings.shape[1]

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.loadings.shape[0]:
            raise ValueError(f"expected {self.loadings.shape[0]} columns, got {X.shape[-1]}")
        return (X - self.center) @ self.loadings

    def inverse_transform(self, scores) -> np.ndarray:
        return np.asarray(scores, dtype=float) @ self.loadings.T + self.center

    def dump_loadings(self, path, feature_names=None) -> None:
        names = feature_names if feature_names is not None else [
            f"x{j}" for j in range(self.loadings.shape[0])]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["feature", *(f"comp{c + 1}" for c in range(self.k))])
            for name, row in zip(names, self.loadings):
                w.writerow([name, *(repr(float(v)) for v in row)])


def _orient(V: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _numerical_rank(s: np.ndarray, shape) -> int:
    if s.size == 0 or s[0] == 0:
        return 0
    tol = s[0] * max(shape) * np.finfo(float).eps
    return int(np.sum(s > tol))


def fit_reducer(X, kind: str = "pca", k: int = 2) -> LinearReducer:
    """Fit a rank-``k`` linear projection.

    ``pca`` centers the (already standardized) input and reports explained
    variance fractions; ``lsa`` is a truncated SVD of the raw tf-idf matrix
    without centering.
    """
    X = np.asarray(X, dtype=float)
    if kind not in ("pca", "lsa"):
        raise ValueError(f"unknown reducer kind {kind!r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    center = X.mean(axis=0) if kind == "pca" else np.zeros(X.shape[1])
    Xc = X - center
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    rank = _numerical_rank(s, Xc.shape)
    if k > rank:
        raise RankDeficientError(
            f"k={k} exceeds the attainable maximum of {rank} components for this data")
    V = _orient(Vt[:k].T.copy())
    evr = None
    if kind == "pca":
        total = float(np.sum(s ** 2))
        evr = (s[:k] ** 2) / total
    return LinearReducer(kind, V, center, s[:k].copy(), evr)


def apply_reducer(R: LinearReducer, X) -> np.ndarray:
    return R.transform(X)


def max_components(X, kind: str = "pca") -> int:
    X = np.asarray(X, dtype=float)
    Xc = X - X.mean(axis=0) if kind == "pca" else X
    s = np.linalg.svd(Xc, compute_uv=False)
    return _numerical_rank(s, Xc.shape)
