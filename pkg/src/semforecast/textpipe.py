"""Corpus ingestion, tokenization and period-level tf-idf term matrices."""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from nltk.stem.porter import PorterStemmer

from .errors import CorpusError

logger = logging.getLogger(__name__)

RESOLUTIONS = ("monthly", "quarterly")

_TOKEN_RE = re.compile(r"[a-z]+")
_DIR_NAME_RE = re.compile(r"^(\d{4}-\d{2}-\d{2})_(.+)\.txt$")
_MONTH_LABEL_RE = re.compile(r"^(\d{4})-(\d{2})$")
_QUARTER_LABEL_RE = re.compile(r"^(\d{4})-Q([1-4])$")

_stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


@dataclass(frozen=True, order=True)
class Document:
    timestamp: dt.date
    id: str
    body: str = field(compare=False, repr=False)


@lru_cache(maxsize=200_000)
def stem(word: str) -> str:
    return _stemmer.stem(word)


def tokenize(body: str, stopwords: Iterable[str] = ()) -> list[str]:
    """Split raw text into stemmed unigram terms.

    Tokens are maximal runs of ASCII letters after lowercasing. Tokens shorter
    than two characters and members of ``stopwords`` (compared before
    stemming) are dropped; the rest go through the classic Porter stemmer.

    >>> tokenize("Profits increased strongly.")
    ['profit', 'increas', 'strongli']
    """
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else set(stopwords)
    out = []
    for tok in _TOKEN_RE.findall(body.lower()):
        if len(tok) < 2 or tok in stop:
            continue
        out.append(stem(tok))
    return out


def load_stopwords(path) -> frozenset[str]:
    """One term per line, UTF-8; blank lines and ``#`` comments ignored."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            w = line.strip().lower()
            if w and not w.startswith("#"):
                words.add(w)
    return frozenset(words)


def _parse_date(text, line=None, path=None) -> dt.date:
    try:
        return dt.date.fromisoformat(str(text))
    except ValueError as exc:
        raise CorpusError(f"unparseable date {text!r} ({exc})", line=line, path=path) from None


def load_corpus(path, format: str = "jsonl") -> list[Document]:
    """Read a corpus from a JSONL file or a directory of ``YYYY-MM-DD_<id>.txt`` files.

    JSONL records need ``date`` and ``text``; ``id`` defaults to the line
    number. Documents come back sorted by (timestamp, id).
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus path does not exist: {path}")
    if format == "jsonl":
        docs = _load_jsonl(path)
    elif format == "directory":
        docs = _load_directory(path)
    else:
        raise ValueError(f"unknown corpus format {format!r}; expected 'jsonl' or 'directory'")

    if not docs:
        raise CorpusError("corpus is empty", path=path)
    seen = set()
    for d in docs:
        if d.id in seen:
            raise CorpusError(f"duplicate document id {d.id!r}", path=path)
        seen.add(d.id)
    docs.sort()
    logger.info("loaded %d documents from %s", len(docs), path)
    return docs


def _load_jsonl(path: Path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"invalid JSON ({exc.msg})", line=lineno, path=path) from None
            if not isinstance(rec, dict) or "date" not in rec or "text" not in rec:
                raise CorpusError("record needs 'date' and 'text' fields", line=lineno, path=path)
            date = _parse_date(rec["date"], line=lineno, path=path)
            doc_id = str(rec.get("id", lineno))
            docs.append(Document(date, doc_id, str(rec["text"])))
    return docs


def _load_directory(path: Path) -> list[Document]:
    if not path.is_dir():
        raise CorpusError("directory format requires a directory", path=path)
    docs = []
    for f in sorted(path.iterdir()):
        if f.suffix != ".txt":
            continue
        m = _DIR_NAME_RE.match(f.name)
        if m is None:
            raise CorpusError("file name must look like YYYY-MM-DD_<id>.txt", path=f)
        date = _parse_date(m.group(1), path=f)
        docs.append(Document(date, m.group(2), f.read_text(encoding="utf-8")))
    return docs


# -- periods ---------------------------------------------------------------

def period_ordinal(date: dt.date, resolution: str) -> int:
    if resolution == "monthly":
        return date.year * 12 + date.month - 1
    if resolution == "quarterly":
        return date.year * 4 + (date.month - 1) // 3
    raise ValueError(f"unknown resolution {resolution!r}")


def period_label(ordinal: int, resolution: str) -> str:
    if resolution == "monthly":
        return f"{ordinal // 12:04d}-{ordinal % 12 + 1:02d}"
    if resolution == "quarterly":
        return f"{ordinal // 4:04d}-Q{ordinal % 4 + 1}"
    raise ValueError(f"unknown resolution {resolution!r}")


def parse_period_label(label: str) -> tuple[str, int]:
    """Return ``(resolution, ordinal)`` for ``YYYY-MM`` or ``YYYY-Qn`` labels."""
    label = label.strip()
    m = _MONTH_LABEL_RE.match(label)
    if m:
        month = int(m.group(2))
        if not 1 <= month <= 12:
            raise ValueError(f"invalid month in period label {label!r}")
        return "monthly", int(m.group(1)) * 12 + month - 1
    m = _QUARTER_LABEL_RE.match(label)
    if m:
        return "quarterly", int(m.group(1)) * 4 + int(m.group(2)) - 1
    raise ValueError(f"unrecognised period label {label!r}; expected YYYY-MM or YYYY-Qn")


# -- matrices --------------------------------------------------------------

class Vocabulary:
    """Ordered, duplicate-free term list with a term -> column lookup."""

    def __init__(self, terms: Sequence[str]):
        self.terms = tuple(terms)
        self.index = {t: i for i, t in enumerate(self.terms)}
        if len(self.index) != len(self.terms):
            raise ValueError("vocabulary terms must be unique")

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.index

    def __iter__(self):
        return iter(self.terms)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.terms == other.terms

    def __repr__(self):
        return f"Vocabulary({len(self.terms)} terms)"


@dataclass(frozen=True, eq=False)
class PeriodTermMatrix:
    """Period x term matrix. ``values`` is None until :func:`tfidf_weight` runs."""

    periods: tuple[str, ...]
    terms: tuple[str, ...]
    counts: np.ndarray
    resolution: str = "monthly"
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.counts.shape != (len(self.periods), len(self.terms)):
            raise ValueError(
                f"counts shape {self.counts.shape} does not match "
                f"{len(self.periods)} periods x {len(self.terms)} terms")
        self.counts.flags.writeable = False
        if self.values is not None:
            if self.values.shape != self.counts.shape:
                raise ValueError("values and counts must share a shape")
            self.values.flags.writeable = False

    @property
    def vocabulary(self) -> Vocabulary:
        return Vocabulary(self.terms)

    @property
    def shape(self):
        return self.counts.shape

    def to_csv(self, path, which: str = "values") -> None:
        """Write ``period,term1,term2,...`` rows (tf-idf values by default)."""
        data = self.values if which == "values" else self.counts
        if data is None:
            raise ValueError("tf-idf values not populated; call tfidf_weight first")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["period", *self.terms])
            for label, row in zip(self.periods, data):
                w.writerow([label, *(repr(float(v)) if which == "values" else int(v) for v in row)])


def build_period_counts(docs: Sequence[Document], resolution: str = "monthly",
                        vocab_policy: float = 0.05,
                        stopwords: Iterable[str] = ()) -> PeriodTermMatrix:
    """Sum token counts of all documents per calendar period.

    The period axis spans the first to the last document's period inclusive;
    empty periods become zero rows. A term is kept when it occurs in at least
    ``vocab_policy`` of all periods. Terms are ordered alphabetically.
    """
    if not docs:
        raise CorpusError("at least one document is required")
    if resolution not in RESOLUTIONS:
        raise ValueError(f"unknown resolution {resolution!r}")
    if not 0.0 <= vocab_policy <= 1.0:
        raise ValueError("vocab_policy must lie in [0, 1]")
    stop = frozenset(stopwords)

    ords = [period_ordinal(d.timestamp, resolution) for d in docs]
    first, last = min(ords), max(ords)
    n_periods = last - first + 1
    if n_periods < 2:
        raise CorpusError(f"{resolution} resolution yields a single period; no time axis")

    per_period: list[dict[str, int]] = [dict() for _ in range(n_periods)]
    for doc, o in zip(docs, ords):
        bucket = per_period[o - first]
        for tok in tokenize(doc.body, stop):
            bucket[tok] = bucket.get(tok, 0) + 1

    period_freq: dict[str, int] = {}
    for bucket in per_period:
        for tok in bucket:
            period_freq[tok] = period_freq.get(tok, 0) + 1
    min_periods = vocab_policy * n_periods
    terms = sorted(t for t, f in period_freq.items() if f >= min_periods and f > 0)

    col = {t: j for j, t in enumerate(terms)}
    counts = np.zeros((n_periods, len(terms)), dtype=np.int64)
    for i, bucket in enumerate(per_period):
        for tok, c in bucket.items():
            j = col.get(tok)
            if j is not None:
                counts[i, j] = c
    periods = tuple(period_label(first + i, resolution) for i in range(n_periods))
    logger.info("built %d x %d %s count matrix", n_periods, len(terms), resolution)
    return PeriodTermMatrix(periods, tuple(terms), counts, resolution)


def tfidf_weight(m: PeriodTermMatrix) -> PeriodTermMatrix:
    """Populate ``values`` with count * ln(N / df), N = number of periods."""
    counts = np.asarray(m.counts, dtype=float)
    n = counts.shape[0]
    df = (counts > 0).sum(axis=0)
    idf = np.zeros(counts.shape[1])
    present = df > 0
    idf[present] = np.log(n / df[present])
    return replace(m, values=counts * idf)
