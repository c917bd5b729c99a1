"""Synthetic text-driven economies with a known generative signal.

Generative equations (t = 0..T-1, constructs k = 1..K)::

    f[k, t] = rho_f * f[k, t-1] + sqrt(1 - rho_f^2) * eta[k, t]      eta ~ N(0, 1)
    c[j, t] ~ Poisson(rate * exp(gamma * f[k(j), t] - gamma^2 / 2))   term j in block k
    c[j, t] ~ Poisson(rate)                                           noise terms
    y[t]    = mu + rho_y * (y[t-1] - mu) + sum_k beta_k * f[k, t-1] + sigma * eps[t]

``random_walk=True`` replaces the mean-reverting part with ``y[t-1]``. The
text of period ``t`` therefore carries information about ``y[t+1]`` that
lagged values of ``y`` only reveal one period later.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np

from ..lexicon import SemanticLexicon
from ..textpipe import PeriodTermMatrix, period_label, stem, tfidf_weight


@dataclass(frozen=True)
class ConstructSpec:
    name: str
    n_terms: int = 20
    loading: float = 0.0


DEFAULT_CONSTRUCTS = (ConstructSpec("positive", 20, 2.0), ConstructSpec("negative", 20, -1.0))


@dataclass(frozen=True, eq=False)
class SyntheticEconomy:
    matrix: PeriodTermMatrix
    lexicon: SemanticLexicon
    y: np.ndarray
    factors: np.ndarray
    words: tuple[str, ...]
    seed: int

    @property
    def periods(self):
        return self.matrix.periods

    def documents(self):
        """One pseudo-document per period repeating each raw word by its count."""
        rng = np.random.default_rng([self.seed, 1])
        docs = []
        for i, (label, row) in enumerate(zip(self.matrix.periods, self.matrix.counts)):
            tokens = [w for w, c in zip(self.words, row) for _ in range(int(c))]
            rng.shuffle(tokens)
            docs.append({"id": f"doc{i:05d}", "date": f"{label}-15", "text": " ".join(tokens)})
        return docs

    def write(self, directory) -> dict[str, Path]:
        """Write ``corpus.jsonl``, ``lexicon.csv`` and ``indicator.csv``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {"corpus": d / "corpus.jsonl", "lexicon": d / "lexicon.csv",
                 "indicator": d / "indicator.csv"}
        with open(paths["corpus"], "w", encoding="utf-8") as fh:
            for doc in self.documents():
                fh.write(json.dumps(doc, sort_keys=True) + "\n")
        raw = dict(zip(self.matrix.terms, self.words))
        with open(paths["lexicon"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["term", "category"])
            for name in self.lexicon.constructs:
                for t in sorted(self.lexicon.membership[name]):
                    w.writerow([raw[t], name])
        with open(paths["indicator"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["period", "value"])
            for label, v in zip(self.matrix.periods, self.y):
                w.writerow([label, repr(float(v))])
        return paths


def _stable_words(n: int) -> list[str]:
    """Deterministic made-up words that the Porter stemmer leaves unchanged."""
    cons, vows = "bdgkmnprt", "aou"
    out, seen = [], set()
    for a, b, c, d, e, f in product(cons, vows, cons, vows, cons, vows):
        w = a + b + c + d + e + f
        if stem(w) == w and w not in seen:
            out.append(w)
            seen.add(w)
            if len(out) == n:
                return out
    raise ValueError(f"cannot generate {n} distinct words")


def generate_synthetic_economy(seed: int, n_periods: int = 200,
                               constructs: Sequence[ConstructSpec] = DEFAULT_CONSTRUCTS, *,
                               n_noise_terms: int = 40, rate: float = 0.8, gamma: float = 0.8,
                               rho_f: float = 0.5, rho_y: float = 0.5, mu: float = 10.0,
                               sigma: float = 1.0, random_walk: bool = False,
                               start: str = "2000-01") -> SyntheticEconomy:
    """Simulate monthly term counts and an indicator driven by latent sentiment factors."""
    if n_periods < 3:
        raise ValueError("need at least 3 periods")
    rng = np.random.default_rng(seed)
    K = len(constructs)
    f = np.empty((K, n_periods))
    f[:, 0] = rng.standard_normal(K)
    scale = np.sqrt(1.0 - rho_f ** 2)
    for t in range(1, n_periods):
        f[:, t] = rho_f * f[:, t - 1] + scale * rng.standard_normal(K)

    n_terms = sum(c.n_terms for c in constructs) + n_noise_terms
    words = _stable_words(n_terms)
    counts = np.empty((n_periods, n_terms), dtype=np.int64)
    col = 0
    for k, c in enumerate(constructs):
        lam = rate * np.exp(gamma * f[k] - gamma ** 2 / 2)
        counts[:, col:col + c.n_terms] = rng.poisson(lam[:, None], size=(n_periods, c.n_terms))
        col += c.n_terms
    counts[:, col:] = rng.poisson(rate, size=(n_periods, n_noise_terms))

    beta = np.array([c.loading for c in constructs])
    eps = rng.standard_normal(n_periods)
    y = np.empty(n_periods)
    y[0] = mu + sigma * eps[0]
    for t in range(1, n_periods):
        base = y[t - 1] if random_walk else mu + rho_y * (y[t - 1] - mu)
        y[t] = base + beta @ f[:, t - 1] + sigma * eps[t]

    first = int(start[:4]) * 12 + int(start[5:7]) - 1
    periods = tuple(period_label(first + i, "monthly") for i in range(n_periods))
    matrix = tfidf_weight(PeriodTermMatrix(periods, tuple(words), counts, "monthly"))
    membership, col = {}, 0
    for c in constructs:
        membership[c.name] = words[col:col + c.n_terms]
        col += c.n_terms
    return SyntheticEconomy(matrix, SemanticLexicon.from_mapping(membership), y, f,
                            tuple(words), seed)
