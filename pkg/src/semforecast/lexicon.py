"""Semantic lexicons (term -> category wordlists) and their binding to a vocabulary."""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import LexiconError
from .textpipe import Vocabulary, tokenize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SemanticLexicon:
    """Ordered constructs, each with a nonempty set of normalized terms.

    Membership is non-exclusive: one term may belong to several constructs.
    """

    constructs: tuple[str, ...]
    membership: Mapping[str, frozenset[str]]

    def __post_init__(self):
        if len(set(self.constructs)) != len(self.constructs):
            raise LexiconError("construct names must be unique")
        for name in self.constructs:
            if not self.membership.get(name):
                raise LexiconError(f"construct {name!r} has no terms")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, object]) -> "SemanticLexicon":
        """Build from already-normalized terms, keeping insertion order."""
        return cls(tuple(mapping), {k: frozenset(v) for k, v in mapping.items()})

    def __len__(self):
        return len(self.constructs)

    def overlap(self) -> set[str]:
        """Terms that belong to more than one construct."""
        seen, multi = set(), set()
        for name in self.constructs:
            for t in self.membership[name]:
                (multi if t in seen else seen).add(t)
        return multi


def normalize_term(raw: str) -> list[str]:
    """Run a lexicon entry through the corpus pipeline (no stopword removal)."""
    return tokenize(raw)


def load_lexicon(path) -> SemanticLexicon:
    """Load a ``term,category`` CSV.

    Terms are normalized exactly like corpus text so matches survive
    stemming. Constructs keep the order of their first appearance.
    """
    path = Path(path)
    if not path.exists():
        raise LexiconError(f"lexicon file not found: {path}")
    members: dict[str, set[str]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["term", "category"]:
            raise LexiconError(f"{path}: expected header 'term,category'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise LexiconError(f"{path}:{lineno}: expected two columns")
            term, category = row[0].strip(), row[1].strip()
            if not category:
                raise LexiconError(f"{path}:{lineno}: empty category")
            bucket = members.setdefault(category, set())
            bucket.update(normalize_term(term))
    if not members:
        raise LexiconError(f"{path}: lexicon has no entries")
    for name, terms in members.items():
        if not terms:
            raise LexiconError(f"{path}: category {name!r} has zero terms after normalization")
    lex = SemanticLexicon(tuple(members), {k: frozenset(v) for k, v in members.items()})
    logger.info("loaded lexicon with %d constructs from %s", len(lex), path)
    return lex


@dataclass(frozen=True)
class ConstructIndexSets:
    """Column indices of each construct's terms within a vocabulary."""

    names: tuple[str, ...]
    indices: tuple[np.ndarray, ...]
    dropped: tuple[str, ...] = ()
    coverage: Mapping[str, float] | None = None

    def __len__(self):
        return len(self.names)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.indices[self.names.index(name)]

    def items(self):
        return zip(self.names, self.indices)


def bind(lex: SemanticLexicon, vocab: Vocabulary) -> ConstructIndexSets:
    """Map every construct onto vocabulary column indices.

    Constructs with no term in the vocabulary are dropped with a warning.
    ``coverage`` reports, per construct, the fraction of its terms found.
    """
    if len(vocab) == 0:
        raise LexiconError("cannot bind a lexicon to an empty vocabulary")
    names, indices, dropped, coverage = [], [], [], {}
    for name in lex.constructs:
        terms = lex.membership[name]
        idx = sorted(vocab.index[t] for t in terms if t in vocab.index)
        coverage[name] = len(idx) / len(terms)
        if not idx:
            dropped.append(name)
            warnings.warn(f"construct {name!r} has no terms in the vocabulary; dropped",
                          stacklevel=2)
            continue
        names.append(name)
        arr = np.asarray(idx, dtype=np.int64)
        arr.flags.writeable = False
        indices.append(arr)
    if not names:
        raise LexiconError("no construct shares any term with the vocabulary")
    return ConstructIndexSets(tuple(names), tuple(indices), tuple(dropped), coverage)
