"""Nested cross-validation for EN-SVM and MDSVM hyperparameters, and the split-level experiment."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from itertools import product
from pathlib import Path
from typing import Callable

import numpy as np

from .data import (Dataset, apply_standardize, fit_standardize, split,
                   stratified_folds)
from .metrics import accuracy, dissimilarity_score, model_support, predictive_agreement
from .rng import make_rng
from .solver import SolverSettings
from .structure import cardinality_report, extract_structure, restricted_accuracies
from .trainer import (LinearModel, MdsvmHyper, ModelSet, init_modelset, train_ensvm,
                      train_mdsvm, train_svm)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TuningConfig:
    ensvm_l1_grid: tuple[float, ...] = (0.1, 1.0, 10.0)
    ensvm_l2_grid: tuple[float, ...] = (1.0, 10.0, 100.0)
    lambda1_fixed: float = 1.0
    lambda3_grid: tuple[float, ...] = (0.1, 1.0, 10.0, 100.0)
    lambda2_multipliers: tuple[float, ...] = (3.0, 5.0, 7.0, 10.0)
    m_grid: tuple[int, ...] = (1, 2, 3, 4, 5)
    sigma: float = 2.0
    inner_folds: int = 2
    seed: int = 0
    init_jitter: float = 0.01

    def __post_init__(self):
        for name in ("ensvm_l1_grid", "ensvm_l2_grid", "lambda3_grid",
                     "lambda2_multipliers", "m_grid"):
            values = tuple(getattr(self, name))
            if not values:
                raise ValueError(f"{name} must be non-empty")
            cast = int if name == "m_grid" else float
            object.__setattr__(self, name, tuple(cast(v) for v in values))
        if self.inner_folds < 2:
            raise ValueError("inner_folds must be >= 2")

    @classmethod
    def from_file(cls, path) -> "TuningConfig":
        """Read ``key = value`` lines; grids are comma-separated, '#' starts a comment."""
        kinds = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = (part.strip() for part in line.partition("="))
            if not sep or key not in kinds:
                raise ValueError(f"{path}:{lineno}: unknown or malformed entry {raw!r}")
            if "tuple" in str(kinds[key]):
                values[key] = tuple(float(v) for v in val.split(",") if v.strip())
            elif key in ("inner_folds", "seed"):
                values[key] = int(val)
            else:
                values[key] = float(val)
        return cls(**values)

    def to_text(self) -> str:
        out = []
        for k, v in asdict(self).items():
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            out.append(f"{k} = {v}")
        return "\n".join(out) + "\n"


def z_score(accuracy: float, dis: float, sigma: float) -> float:
    """(1 + dis * sigma/100) * accuracy."""
    return (1.0 + dis * sigma / 100.0) * accuracy


def _fold_pairs(data: Dataset, k: int, seed: int, *tags):
    rng_seed = int(make_rng(seed, "cv", *tags).integers(2**31))
    folds = stratified_folds(data.y, k, rng_seed)
    everything = np.arange(data.n)
    for held in folds:
        yield data.subset(np.setdiff1d(everything, held)), data.subset(held)


def tune_ensvm(train: Dataset, config: TuningConfig,
               settings: SolverSettings | None = None, tag=()) -> tuple[float, float]:
    """(l1, l2) with the best mean inner-CV accuracy; ties go to the smallest l2, then l1."""
    grid = sorted(product(sorted(set(config.ensvm_l2_grid)), sorted(set(config.ensvm_l1_grid))))
    if len(grid) == 1:
        l2, l1 = grid[0]
        return l1, l2
    scores = np.zeros(len(grid))
    for fold_tr, fold_te in _fold_pairs(train, config.inner_folds, config.seed, "ensvm", *tag):
        for g, (l2, l1) in enumerate(grid):
            scores[g] += accuracy(train_ensvm(fold_tr, l1, l2, settings), fold_te)
    best = int(np.argmax(scores))
    l2, l1 = grid[best]
    return l1, l2


def relevant_features(model: LinearModel, d: int) -> np.ndarray:
    """Support of an EN-SVM model, or every feature when the support is empty."""
    S = np.flatnonzero(model.w)
    if S.size == 0:
        log.warning("EN-SVM selected no features; falling back to the full feature set")
        S = np.arange(d)
    return S


def mdsvm_init(en_model: LinearModel, S, m: int, hyper: MdsvmHyper,
               config: TuningConfig, *tags) -> ModelSet:
    base = LinearModel(en_model.w[S], en_model.b)
    seed = int(make_rng(config.seed, "jitter", *tags).integers(2**31))
    return init_modelset(base, m, hyper, jitter=config.init_jitter, seed=seed)


@dataclass
class MdsvmSelection:
    lambda2: float
    lambda3: float
    m: int
    z: float
    table: list = field(default_factory=list)


def mdsvm_grid(config: TuningConfig) -> list[tuple[float, float, int]]:
    """Canonical (lambda3, multiplier, m) enumeration, ascending in each."""
    return sorted(product(sorted(set(config.lambda3_grid)),
                          sorted(set(config.lambda2_multipliers)),
                          sorted(set(config.m_grid))))


def tune_mdsvm(train: Dataset, config: TuningConfig,
               settings: SolverSettings | None = None, tag=()) -> MdsvmSelection:
    """Pick (lambda2, lambda3, m) maximizing the mean inner-CV z criterion.

    Inside each fold the relevant set comes from an EN-SVM tuned on that
    fold's training part only.
    """
    grid = mdsvm_grid(config)
    z = np.zeros(len(grid))
    for f, (fold_tr, fold_te) in enumerate(
            _fold_pairs(train, config.inner_folds, config.seed, "mdsvm", *tag)):
        l1, l2 = tune_ensvm(fold_tr, config, settings, tag=(*tag, "fold", f))
        en = train_ensvm(fold_tr, l1, l2, settings)
        S = relevant_features(en, train.d)
        tr_S, te_S = fold_tr.select_features(S), fold_te.select_features(S)
        for g, (lam3, mult, m) in enumerate(grid):
            hyper = MdsvmHyper(m=m, lambda1=config.lambda1_fixed,
                               lambda2=mult * lam3, lambda3=lam3)
            init = mdsvm_init(en, S, m, hyper, config, *tag, "fold", f, g)
            ms = train_mdsvm(tr_S, hyper, init, settings)
            acc = float(np.mean([accuracy(mod, te_S) for mod in ms.models]))
            dis = dissimilarity_score([model_support(mod) for mod in ms.models]) if m > 1 else 0.0
            z[g] += z_score(acc, dis, config.sigma)
    z /= config.inner_folds
    best = int(np.argmax(z))
    lam3, mult, m = grid[best]
    return MdsvmSelection(lambda2=mult * lam3, lambda3=lam3, m=m, z=float(z[best]),
                          table=list(zip(grid, z.tolist())))


# -- experiment --------------------------------------------------------------

TABLE2_COLUMNS = ["dataset", "svm_S", "svm_cfs", "svm_ifg", "mdsvm_acc",
                  "n_models", "agreement", "dis"]
TABLE3_COLUMNS = ["dataset", "cfs_pct", "ifg_pct", "mdsvm_pct"]
SPLIT_COLUMNS = ["split", "svm_S", "svm_cfs", "svm_cfs_ifg", "svm_ifg", "mdsvm_acc",
                 "n_models", "agreement", "dis", "cfs_pct", "ifg_pct", "mdsvm_pct",
                 "s_size", "ensvm_l1", "ensvm_l2", "lambda2", "lambda3"]


@dataclass
class ExperimentReport:
    name: str
    rows: list[dict]

    def aggregate(self) -> dict[str, tuple[float, float]]:
        """Mean and population std of each numeric column, ignoring NaN entries."""
        out = {}
        for col in SPLIT_COLUMNS[1:]:
            vals = np.array([r[col] for r in self.rows], dtype=float)
            vals = vals[~np.isnan(vals)]
            if vals.size == 0:
                out[col] = (math.nan, math.nan)
            else:
                out[col] = (float(vals.mean()), float(vals.std()))
        return out

    def write(self, out_dir) -> dict[str, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        agg = self.aggregate()
        paths = {
            "splits": out_dir / "splits.csv",
            "table2": out_dir / "table2.csv",
            "table3": out_dir / "table3.csv",
            "summary": out_dir / "summary.txt",
        }
        with open(paths["splits"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SPLIT_COLUMNS)
            for r in self.rows:
                w.writerow([_fmt(r[c]) for c in SPLIT_COLUMNS])
        for key, cols in (("table2", TABLE2_COLUMNS), ("table3", TABLE3_COLUMNS)):
            with open(paths[key], "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(cols)
                w.writerow([self.name] + [_fmt(agg[c][0]) for c in cols[1:]])
                w.writerow([f"{self.name} std"] + [_fmt(agg[c][1]) for c in cols[1:]])
        paths["summary"].write_text(self.summary())
        return paths

    def summary(self) -> str:
        agg = self.aggregate()

        def pm(col, unit=""):
            mean, std = agg[col]
            return f"{mean:.2f}{unit} +- {std:.2f}{unit}"

        lines = [
            f"dataset: {self.name} ({len(self.rows)} splits)",
            f"SVM on S:           {pm('svm_S')}",
            f"SVM on CFS:         {pm('svm_cfs')}",
            f"SVM on IFG:         {pm('svm_ifg')}",
            f"MDSVM accuracy:     {pm('mdsvm_acc')}",
            f"# models:           {pm('n_models')}",
            f"agreement:          {pm('agreement')}",
            f"Dis score:          {pm('dis')}",
            f"|CFS| / |S|:        {pm('cfs_pct', '%')}",
            f"|IFG| / |S|:        {pm('ifg_pct', '%')}  (approximate core set)",
            f"|union| / |S|:      {pm('mdsvm_pct', '%')}",
        ]
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "nan" if math.isnan(v) else repr(round(v, 10))


def run_split(train: Dataset, test: Dataset, config: TuningConfig,
              settings: SolverSettings | None = None, split_index: int = 0,
              audit: Callable[[str], None] | None = None) -> dict:
    """Tune on ``train`` only, refit, then evaluate once on ``test``."""
    tag = ("split", split_index)
    scaler = fit_standardize(train)
    train = apply_standardize(scaler, train)
    l1, l2 = tune_ensvm(train, config, settings, tag=tag)
    en = train_ensvm(train, l1, l2, settings)
    S = relevant_features(en, train.d)
    sel = tune_mdsvm(train, config, settings, tag=tag)
    hyper = MdsvmHyper(m=sel.m, lambda1=config.lambda1_fixed,
                       lambda2=sel.lambda2, lambda3=sel.lambda3)
    tr_S = train.select_features(S)
    models = train_mdsvm(tr_S, hyper, mdsvm_init(en, S, sel.m, hyper, config, *tag, "final"),
                         settings)
    full = train_svm(tr_S, l2, settings)
    if sel.m >= 2:
        structure = extract_structure(models)

    # test data is touched only below this line
    if audit is not None:
        audit("evaluate")
    te_S = apply_standardize(scaler, test).select_features(S)
    row = {
        "split": split_index,
        "svm_S": 100.0 * accuracy(full, te_S),
        "mdsvm_acc": 100.0 * float(np.mean([accuracy(mod, te_S) for mod in models.models])),
        "n_models": sel.m,
        "s_size": len(S),
        "ensvm_l1": l1, "ensvm_l2": l2,
        "lambda2": sel.lambda2, "lambda3": sel.lambda3,
    }
    if sel.m >= 2:
        row["agreement"] = predictive_agreement(models, te_S)
        row["dis"] = dissimilarity_score([model_support(mod) for mod in models.models])
        acc = restricted_accuracies(structure, tr_S, te_S, l2, settings)
        card = cardinality_report(structure, len(S))
        row.update(svm_cfs=100.0 * acc["cfs"], svm_cfs_ifg=100.0 * acc["cfs_ifg"],
                   svm_ifg=100.0 * acc["ifg"], cfs_pct=card.cfs_pct,
                   ifg_pct=card.ifg_pct, mdsvm_pct=card.union_pct)
    else:
        union = 100.0 * np.count_nonzero(models.models[0].w) / len(S)
        row.update(agreement=1.0, dis=0.0, svm_cfs=math.nan, svm_cfs_ifg=math.nan,
                   svm_ifg=math.nan, cfs_pct=math.nan, ifg_pct=math.nan, mdsvm_pct=union)
    return row


def _split_job(args):
    data, config, settings, s, train_fraction = args
    train, test = split(data, train_fraction, int(make_rng(config.seed, "outer", s).integers(2**31)))
    return run_split(train, test, config, settings, split_index=s)


def run_experiment(data: Dataset, config: TuningConfig, n_splits: int = 10,
                   train_fraction: float = 0.8, settings: SolverSettings | None = None,
                   name: str = "dataset", threads: int | None = None) -> ExperimentReport:
    """Repeated random train/test splits, each tuned and evaluated independently."""
    if n_splits < 1:
        raise ValueError("n_splits must be >= 1")
    threads = threads or int(os.environ.get("EGD_THREADS", "1"))
    jobs = [(data, config, settings, s, train_fraction) for s in range(n_splits)]
    if threads > 1 and n_splits > 1:
        with ProcessPoolExecutor(max_workers=min(threads, n_splits)) as pool:
            rows = list(pool.map(_split_job, jobs))
    else:
        rows = [_split_job(job) for job in jobs]
    return ExperimentReport(name, rows)
