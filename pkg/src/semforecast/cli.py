"""Command-line front end: ``semforecast {ingest,backtest,decompose,synth}``.

Runs are described by one INI-style config file::

    [run]
    seed = 7                  ; mandatory here or via --seed
    output_dir = out          ; SEMFORECAST_OUTPUT_DIR overrides
    resolution = monthly      ; or quarterly
    vocab_min_fraction = 0.05
    jobs = 1
    ; stopwords = stop.txt

    [corpus]
    path = corpus.jsonl
    format = jsonl            ; or directory

    [lexicon]
    path = lexicon.csv

    [indicator]
    path = indicator.csv

    [cv]
    folds = 10
    ; initial = 40
    ; validation = 4
    expanding = true

    [task y]
    horizons = 1, 3, delta
    models = ar1, ar6, path-ols6, semantic-lasso1, tfidf-lasso
    ; indicator = other.csv

Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DegenerateError, ModelTypeError, SemForecastError
from .evaluate.backtest import ForecastReport, HorizonResult, backtest, split_point
from .evaluate.cv import CvPlan
from .evaluate.dataset import (ForecastTask, align_indicator, load_indicator,
                               make_supervised_dataset)
from .evaluate.models import ModelFamily
from .evaluate.synthetic import ConstructSpec, generate_synthetic_economy
from .lexicon import ConstructIndexSets, bind, load_lexicon
from .pathmodel import FittedPathModel
from .reduce import Standardizer
from .textpipe import (PeriodTermMatrix, build_period_counts, load_corpus, load_stopwords,
                       tfidf_weight)

logger = logging.getLogger("semforecast")

OUTPUT_ENV = "SEMFORECAST_OUTPUT_DIR"
EXIT_OK, EXIT_FAILED_TASKS, EXIT_USAGE = 0, 1, 2


class ConfigError(SemForecastError, ValueError):
    pass


@dataclass
class TaskConfig:
    name: str
    indicator: Path
    horizons: list[str]
    models: list[str]


@dataclass
class RunConfig:
    seed: int
    output_dir: Path
    corpus: Path
    corpus_format: str
    lexicon: Path
    indicator: Path | None
    resolution: str = "monthly"
    vocab_min_fraction: float = 0.05
    stopwords: Path | None = None
    jobs: int = 1
    cv: CvPlan = field(default_factory=CvPlan)
    tasks: list[TaskConfig] = field(default_factory=list)

    @property
    def cache_dir(self) -> Path:
        return self.output_dir / "cache"


def _split_list(text: str) -> list[str]:
    return [t.strip() for t in text.replace("\n", ",").split(",") if t.strip()]


def load_config(path, seed: int | None = None, output_dir=None) -> RunConfig:
    """Parse and validate a run config; every referenced input must exist."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read(path, encoding="utf-8")
    base = path.parent

    def req(section, key):
        if not cp.has_option(section, key):
            raise ConfigError(f"{path}: missing [{section}] {key}")
        return cp.get(section, key)

    def resolve(p):
        p = Path(p).expanduser()
        return p if p.is_absolute() else base / p

    def must_exist(p: Path, what: str) -> Path:
        if not p.exists():
            raise ConfigError(f"{what} not found: {p}")
        return p

    run = cp["run"] if cp.has_section("run") else {}
    if seed is None:
        if "seed" not in run:
            raise ConfigError(f"{path}: a seed is required ([run] seed or --seed)")
        seed = int(run["seed"])
    out = output_dir or os.environ.get(OUTPUT_ENV) or run.get("output_dir", "out")
    out = resolve(out)

    indicator = None
    if cp.has_option("indicator", "path"):
        indicator = must_exist(resolve(cp.get("indicator", "path")), "indicator file")
    stop = run.get("stopwords")
    cv = CvPlan()
    if cp.has_section("cv"):
        s = cp["cv"]
        cv = CvPlan(folds=s.getint("folds", 10),
                    initial=s.getint("initial") if s.get("initial") else None,
                    validation=s.getint("validation") if s.get("validation") else None,
                    expanding=s.getboolean("expanding", True))

    tasks = []
    for section in cp.sections():
        if not section.startswith("task"):
            continue
        name = section[4:].strip(" :.") or f"task{len(tasks) + 1}"
        s = cp[section]
        ind = must_exist(resolve(s["indicator"]), "indicator file") if "indicator" in s \
            else indicator
        if ind is None:
            raise ConfigError(f"task {name!r} has no indicator file")
        horizons = _split_list(s.get("horizons", "1"))
        for h in horizons:
            if h != "delta" and not (h.isdigit() and int(h) >= 1):
                raise ConfigError(f"task {name!r}: bad horizon {h!r}")
        models = _split_list(s.get("models", "ar1"))
        for m in models:
            try:
                ModelFamily.parse(m)
            except ValueError as exc:
                raise ConfigError(f"task {name!r}: {exc}") from None
        tasks.append(TaskConfig(name, ind, horizons, models))

    resolution = run.get("resolution", "monthly")
    if resolution not in ("monthly", "quarterly"):
        raise ConfigError(f"{path}: resolution must be monthly or quarterly")
    return RunConfig(
        seed=seed, output_dir=out,
        corpus=must_exist(resolve(req("corpus", "path")), "corpus"),
        corpus_format=cp.get("corpus", "format", fallback="jsonl"),
        lexicon=must_exist(resolve(req("lexicon", "path")), "lexicon file"),
        indicator=indicator, resolution=resolution,
        vocab_min_fraction=float(run.get("vocab_min_fraction", 0.05)),
        stopwords=None if not stop else must_exist(resolve(stop), "stopword file"),
        jobs=int(run.get("jobs", 1)), cv=cv, tasks=tasks)


# -- ingest -----------------------------------------------------------------

def _hash_path(h, p: Path):
    if p.is_dir():
        for f in sorted(p.iterdir()):
            h.update(f.name.encode())
            _hash_path(h, f)
    else:
        h.update(p.read_bytes())


def _fingerprint(cfg: RunConfig) -> str:
    h = hashlib.sha256()
    h.update(json.dumps([__version__, cfg.resolution, cfg.vocab_min_fraction,
                         cfg.corpus_format]).encode())
    for p in (cfg.corpus, cfg.lexicon, cfg.stopwords):
        if p is not None:
            _hash_path(h, p)
    return h.hexdigest()


@dataclass
class Cache:
    matrix: PeriodTermMatrix
    constructs: ConstructIndexSets
    meta: dict


def cmd_ingest(cfg: RunConfig, out=None) -> Cache:
    """Build (or reuse) the period-term matrix and bound lexicon under ``cache/``."""
    out = out or sys.stdout
    fp = _fingerprint(cfg)
    meta_path = cfg.cache_dir / "meta.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if meta.get("fingerprint") == fp:
            print(f"cache up-to-date: {cfg.cache_dir}", file=out)
            return load_cache(cfg)

    stop = load_stopwords(cfg.stopwords) if cfg.stopwords else frozenset()
    docs = load_corpus(cfg.corpus, cfg.corpus_format)
    lex = load_lexicon(cfg.lexicon)
    counts = build_period_counts(docs, cfg.resolution, cfg.vocab_min_fraction, stop)
    matrix = tfidf_weight(counts)
    sets = bind(lex, matrix.vocabulary)

    cfg.cache_dir.mkdir(parents=True, exist_ok=True)
    np.savez(cfg.cache_dir / "matrix.npz", counts=matrix.counts, values=matrix.values)
    meta = {
        "fingerprint": fp,
        "resolution": matrix.resolution,
        "periods": list(matrix.periods),
        "terms": list(matrix.terms),
        "n_documents": len(docs),
        "constructs": {n: idx.tolist() for n, idx in sets.items()},
        "dropped": list(sets.dropped),
        "coverage": sets.coverage,
    }
    meta_path.write_text(json.dumps(meta, indent=1, sort_keys=True), encoding="utf-8")
    matrix.to_csv(cfg.cache_dir / "tfidf.csv")
    print(f"documents: {len(docs)}", file=out)
    print(f"periods: {len(matrix.periods)} ({matrix.periods[0]} .. {matrix.periods[-1]})",
          file=out)
    print(f"vocabulary: {len(matrix.terms)} terms", file=out)
    for name in lex.constructs:
        state = "dropped" if name in sets.dropped else f"{len(sets[name])} terms"
        print(f"construct {name}: coverage {sets.coverage[name]:.2f} ({state})", file=out)
    return Cache(matrix, sets, meta)


def load_cache(cfg: RunConfig) -> Cache:
    meta = json.loads((cfg.cache_dir / "meta.json").read_text(encoding="utf-8"))
    arr = np.load(cfg.cache_dir / "matrix.npz")
    matrix = PeriodTermMatrix(tuple(meta["periods"]), tuple(meta["terms"]), arr["counts"],
                              meta["resolution"], arr["values"])
    names = tuple(meta["constructs"])
    sets = ConstructIndexSets(
        names, tuple(np.asarray(meta["constructs"][n], dtype=np.int64) for n in names),
        tuple(meta["dropped"]), meta["coverage"])
    return Cache(matrix, sets, meta)


def _ensure_cache(cfg: RunConfig, out) -> Cache:
    meta_path = cfg.cache_dir / "meta.json"
    if meta_path.exists() and json.loads(meta_path.read_text())["fingerprint"] == _fingerprint(cfg):
        return load_cache(cfg)
    return cmd_ingest(cfg, out)


# -- backtest ---------------------------------------------------------------

def _task_series(cfg: RunConfig, cache: Cache, task: TaskConfig):
    res, labels, values = load_indicator(task.indicator)
    if res != cache.matrix.resolution:
        raise ConfigError(f"{task.indicator}: {res} indicator vs {cache.matrix.resolution} corpus")
    sl, y = align_indicator(cache.matrix.periods, labels, values)
    return cache.matrix.values[sl], y, cache.matrix.periods[sl]


def _forecast_task(name: str, label: str) -> ForecastTask:
    if label == "delta":
        return ForecastTask(name, 1, True)
    return ForecastTask(name, int(label))


def _test_start(n: int, families: list[ModelFamily], ftask: ForecastTask) -> int:
    """Common first test origin so all models of a task score the same periods."""
    max_lag = max((max(f.lags) for f in families if f.lags), default=0)
    step = 1 if ftask.delta else ftask.horizon
    rows = np.arange(max_lag, n - step)
    if rows.size < 4:
        raise ValueError(f"series of length {n} too short for {ftask.label} with lag {max_lag}")
    return int(rows[split_point(rows.size)])


def _model_payload(report_key, fam: ModelFamily, res: HorizonResult, test_start: int):
    payload = {"model": fam.name, "task": report_key[0], "horizon": res.label,
               "test_start": test_start, "params": res.best_params}
    fitted = res.fitted
    if fam.source == "path":
        payload.update({
            "type": "path_model", "lag_orders": list(fam.lags),
            "path_model": fitted.model.to_dict(),
            "text_standardizer": fitted.text_std.to_dict(),
            "lag_standardizer": None if fitted.lag_std is None else fitted.lag_std.to_dict(),
        })
    else:
        payload["type"] = fam.source
    return payload


def cmd_backtest(cfg: RunConfig, jobs: int | None = None, out=None) -> int:
    """Backtest every (task, model) pair; returns the process exit code."""
    out = out or sys.stdout
    cache = _ensure_cache(cfg, out)
    jobs = jobs or cfg.jobs
    reports_dir = cfg.output_dir / "reports"
    models_dir = cfg.output_dir / "models"
    dec_dir = cfg.output_dir / "decompositions"
    for d in (reports_dir, models_dir, dec_dir):
        d.mkdir(parents=True, exist_ok=True)

    failures: list[dict] = []
    units = []  # (task, label, family, features, y, periods, ftask, test_start)
    for task in cfg.tasks:
        try:
            X, y, periods = _task_series(cfg, cache, task)
        except (SemForecastError, ValueError, OSError) as exc:
            failures.append({"task": task.name, "model": None, "horizon": None,
                             "error": f"{type(exc).__name__}: {exc}"})
            continue
        fams = [ModelFamily.parse(m) for m in task.models]
        for label in task.horizons:
            ftask = _forecast_task(task.name, label)
            try:
                start = _test_start(len(y), fams, ftask)
            except (SemForecastError, ValueError) as exc:
                for fam in fams:
                    failures.append({"task": task.name, "model": fam.name, "horizon": label,
                                     "error": f"{type(exc).__name__}: {exc}"})
                continue
            for fam in fams:
                units.append((task, label, fam, X, y, periods, ftask, start))

    def run(unit):
        task, label, fam, X, y, periods, ftask, start = unit
        try:
            rep = backtest(X, y, ftask, fam, cfg.cv, constructs=cache.constructs,
                           periods=periods, feature_names=cache.matrix.terms,
                           test_start=start, seed=cfg.seed)
            return rep.entries[ftask.label], None
        except (SemForecastError, ValueError, np.linalg.LinAlgError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run, units))
    else:
        outcomes = [run(u) for u in units]

    # ordered reduction: everything below is sequential and deterministic
    reports: dict[tuple[str, str], ForecastReport] = {}
    results: dict[tuple[str, str, str], HorizonResult] = {}
    starts = {}
    for unit, (res, err) in zip(units, outcomes):
        task, label, fam = unit[0], unit[1], unit[2]
        key = (task.name, fam.name)
        reports.setdefault(key, ForecastReport(fam.name, fam.category, task.name, seed=cfg.seed))
        if err is not None:
            failures.append({"task": task.name, "model": fam.name, "horizon": label, "error": err})
            continue
        reports[key].entries[res.label] = res
        results[(task.name, fam.name, res.label)] = res
        starts[(task.name, fam.name, res.label)] = unit[7]

    for task in cfg.tasks:
        fams = [ModelFamily.parse(m) for m in task.models]
        for label in task.horizons:
            lab = _forecast_task(task.name, label).label
            ar = [(results[(task.name, f.name, lab)].rmse, f.name) for f in fams
                  if f.source == "ar" and (task.name, f.name, lab) in results]
            if not ar:
                continue
            base_name = min(ar)[1]
            base = results[(task.name, base_name, lab)]
            for f in fams:
                res = results.get((task.name, f.name, lab))
                if res is None:
                    continue
                if f.name == base_name:
                    res.dm_note = "baseline"
                    continue
                try:
                    res.compare(base, base_name)
                except (DegenerateError, ValueError) as exc:
                    res.dm_note = str(exc)
                    res.dm_baseline = base_name

    flat = []
    for (task_name, model_name), rep in reports.items():
        fam = ModelFamily.parse(model_name)
        stem = f"{task_name}__{model_name}"
        for lab, res in rep.entries.items():
            payload = _model_payload((task_name, model_name), fam, res,
                                     starts[(task_name, model_name, lab)])
            (models_dir / f"{stem}__{lab}.json").write_text(
                json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8")
            if res.decomposition is not None:
                path = dec_dir / f"{stem}__{lab}.csv"
                res.decomposition.to_csv(path, res.test_periods)
                rep.extra.setdefault("decompositions", {})[lab] = str(
                    path.relative_to(cfg.output_dir))
        (reports_dir / f"{stem}.json").write_text(rep.to_json(), encoding="utf-8")
        flat.extend(rep.flat_rows())

    _write_metrics(cfg.output_dir / "metrics.csv", flat)
    _write_summary(cfg, reports, cfg.output_dir / "summary.csv")
    failures.sort(key=lambda f: (f["task"], f["model"] or "", f["horizon"] or ""))
    (cfg.output_dir / "failures.json").write_text(
        json.dumps({"failed": len(failures), "failures": failures}, indent=1, sort_keys=True),
        encoding="utf-8")
    print(f"wrote {len(reports)} reports to {reports_dir}", file=out)
    if failures:
        print(f"{len(failures)} failed task(s); see failures.json", file=out)
        return EXIT_FAILED_TASKS
    return EXIT_OK


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_metrics(path, rows):
    cols = ["task", "model", "category", "horizon", "rmse", "nrmse", "dm_statistic",
            "dm_p_value", "dm_baseline", "params"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])


def _write_summary(cfg: RunConfig, reports, path):
    """Best-of-breed table: one row per (task, category), one column per horizon."""
    order = ["Benchmark: lags", "Semantic path model", "Semantic features",
             "High-dimensional input"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        for task in cfg.tasks:
            labels = [_forecast_task(task.name, h).label for h in task.horizons]
            w.writerow(["task", "category", *labels])
            for cat in order:
                cells, any_hit = [], False
                for lab in labels:
                    cands = [(rep.entries[lab].rmse, name) for (t, name), rep in reports.items()
                             if t == task.name and rep.category == cat and lab in rep.entries]
                    if not cands:
                        cells.append("")
                        continue
                    any_hit = True
                    score, name = min(cands)
                    res = reports[(task.name, name)].entries[lab]
                    p = "" if res.dm is None else f" (p={res.dm.p_value:.3f})"
                    cells.append(f"{score:.6g}{p} {name}")
                if any_hit:
                    w.writerow([task.name, cat, *cells])


# -- decompose --------------------------------------------------------------

def cmd_decompose(cfg: RunConfig, model_ref: str, out=None) -> Path:
    """Write the construct decomposition of a fitted path model over its test window.

    ``model_ref`` is ``task/model/horizon`` (e.g. ``y/path-ols6/h1``).
    """
    out = out or sys.stdout
    parts = model_ref.split("/")
    if len(parts) != 3:
        raise ConfigError("model reference must look like task/model/horizon")
    task_name, model_name, label = parts
    path = cfg.output_dir / "models" / f"{task_name}__{model_name}__{label}.json"
    if not path.exists():
        raise ConfigError(f"no fitted model at {path}; run backtest first")
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("type") != "path_model":
        raise ModelTypeError("decomposition requires a path model")
    task = next((t for t in cfg.tasks if t.name == task_name), None)
    if task is None:
        raise ConfigError(f"unknown task {task_name!r}")
    cache = _ensure_cache(cfg, out)
    X, y, periods = _task_series(cfg, cache, task)
    ftask = _forecast_task(task_name, "delta" if label == "delta" else label[1:])
    ds = make_supervised_dataset(X, y, payload["lag_orders"], ftask.horizon, ftask.delta, periods)
    test = ds.subset(np.flatnonzero(ds.rows >= payload["test_start"]))
    model = FittedPathModel.from_dict(payload["path_model"])
    parts = [Standardizer.from_dict(payload["text_standardizer"]).transform(test.text)]
    if payload["lag_standardizer"] is not None:
        parts.append(Standardizer.from_dict(payload["lag_standardizer"]).transform(test.lags))
    decomp = model.decompose(np.hstack(parts))
    out_path = cfg.output_dir / "decompositions" / f"{task_name}__{model_name}__{label}.csv"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    decomp.to_csv(out_path, test.periods)
    print(f"wrote {out_path}", file=out)
    return out_path


# -- synth ------------------------------------------------------------------

def cmd_synth(directory, seed: int, n_periods: int = 200, null: bool = False,
              out=None) -> Path:
    """Write a synthetic economy plus a ready-to-run config into ``directory``."""
    out = out or sys.stdout
    d = Path(directory)
    kwargs = {}
    if null:
        kwargs = {"random_walk": True,
                  "constructs": (ConstructSpec("positive", 20, 0.0),
                                 ConstructSpec("negative", 20, 0.0))}
    eco = generate_synthetic_economy(seed, n_periods, **kwargs)
    eco.write(d)
    cfg = d / "run.ini"
    cfg.write_text(
        "[run]\n"
        f"seed = {seed}\n"
        "output_dir = out\n"
        "resolution = monthly\n"
        "vocab_min_fraction = 0.05\n\n"
        "[corpus]\npath = corpus.jsonl\nformat = jsonl\n\n"
        "[lexicon]\npath = lexicon.csv\n\n"
        "[indicator]\npath = indicator.csv\n\n"
        "[task y]\n"
        "horizons = 1, delta\n"
        "models = ar1, ar6, path-ols6, path-lasso1, semantic-ridge1\n",
        encoding="utf-8")
    print(f"wrote synthetic economy and {cfg}", file=out)
    return cfg


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semforecast", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="run config file")
        sp.add_argument("--seed", type=int, help="overrides [run] seed")

    common(sub.add_parser("ingest", help="build the cached term matrix"))
    bt = sub.add_parser("backtest", help="tune, backtest and write reports")
    common(bt)
    bt.add_argument("--jobs", type=int, help="concurrent backtests")
    dc = sub.add_parser("decompose", help="write a path-model decomposition CSV")
    common(dc)
    dc.add_argument("--model", required=True, help="task/model/horizon, e.g. y/path-ols6/h1")
    sy = sub.add_parser("synth", help="generate a synthetic economy and config")
    sy.add_argument("directory")
    sy.add_argument("--seed", type=int, required=True)
    sy.add_argument("--periods", type=int, default=200)
    sy.add_argument("--null", action="store_true", help="random-walk indicator, no text signal")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            cmd_synth(args.directory, args.seed, args.periods, args.null)
            return EXIT_OK
        cfg = load_config(args.config, seed=args.seed)
        if args.command == "ingest":
            cmd_ingest(cfg)
            return EXIT_OK
        if args.command == "backtest":
            return cmd_backtest(cfg, args.jobs)
        cmd_decompose(cfg, args.model)
        return EXIT_OK
    except ModelTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED_TASKS
    except (SemForecastError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
