"""Feature-set structure from a trained model set: supports, core set, interchangeable sets.

The core set is the intersection of the model supports; each model's
interchangeable set is its support minus the core.  Both are computed from
the finitely many models actually learned, so the core set is an
approximation of the true non-replaceable set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset
from .metrics import EgdReport, EgdThresholds, egd_check
from .solver import SolverSettings
from .trainer import LinearModel, ModelSet, train_svm

log = logging.getLogger(__name__)

FALLBACK_TAU = 1e-6


@dataclass(frozen=True)
class FeatureSet:
    indices: tuple[int, ...]
    names: tuple[str, ...] = ()

    @classmethod
    def of(cls, indices, feature_names: Sequence[str] | None = None) -> "FeatureSet":
        idx = tuple(sorted({int(i) for i in indices}))
        if any(i < 0 for i in idx):
            raise ValueError("feature indices must be non-negative")
        names = tuple(feature_names[i] for i in idx) if feature_names is not None else ()
        return cls(idx, names)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def as_set(self) -> frozenset[int]:
        return frozenset(self.indices)


@dataclass(frozen=True)
class FeatureStructure:
    ifg: FeatureSet
    cfs: tuple[FeatureSet, ...]
    source_supports: tuple[FeatureSet, ...]


def support(model: LinearModel, tau: float | None = None,
            feature_names: Sequence[str] | None = None) -> FeatureSet:
    """Non-zero coefficients, or ``|w_l| > tau * max|w|`` when ``tau`` is given.

    Models trained here carry exact zeros; the relative threshold is for
    dense weights loaded from elsewhere.
    """
    w = np.asarray(model.w)
    if tau is None:
        idx = np.flatnonzero(w != 0)
    else:
        scale = np.max(np.abs(w)) if w.size else 0.0
        idx = np.flatnonzero(np.abs(w) > tau * scale) if scale > 0 else np.array([], dtype=int)
    return FeatureSet.of(idx, feature_names)


def structure_from_supports(supports: Sequence, feature_names=None) -> FeatureStructure:
    sets = [frozenset(int(i) for i in s) for s in supports]
    if len(sets) < 2:
        raise ValueError("structure extraction needs at least 2 models")
    core = frozenset.intersection(*sets)
    return FeatureStructure(
        ifg=FeatureSet.of(core, feature_names),
        cfs=tuple(FeatureSet.of(s - core, feature_names) for s in sets),
        source_supports=tuple(FeatureSet.of(s, feature_names) for s in sets),
    )


def extract_structure(models: ModelSet, feature_names=None,
                      tau: float | None = None) -> FeatureStructure:
    if models.m < 2:
        raise ValueError("structure extraction needs at least 2 models")
    return structure_from_supports([support(mod, tau) for mod in models.models], feature_names)


@dataclass(frozen=True)
class CardinalityReport:
    ifg_pct: float
    cfs_pct: float
    union_pct: float


def cardinality_report(structure: FeatureStructure, s_size: int) -> CardinalityReport:
    """Sizes relative to |S|, in percent: core set, mean interchangeable set, union."""
    if s_size < 1:
        raise ValueError("s_size must be >= 1")
    union = set().union(*(s.as_set() for s in structure.source_supports))
    mean_cfs = float(np.mean([len(c) for c in structure.cfs])) if structure.cfs else 0.0
    return CardinalityReport(
        ifg_pct=100.0 * len(structure.ifg) / s_size,
        cfs_pct=100.0 * mean_cfs / s_size,
        union_pct=100.0 * len(union) / s_size,
    )


def _embed(model: LinearModel, columns, d: int) -> LinearModel:
    w = np.zeros(d)
    w[columns] = model.w
    return LinearModel(w, model.b)


def restricted_svm(data: Dataset, columns, l2_penalty: float,
                   settings: SolverSettings | None = None) -> LinearModel:
    """Plain SVM on a feature subset, embedded back into the full feature space.

    The embedded weights are marked non-zero on every selected column so that
    the support of the result equals the feature subset it was trained on.
    """
    columns = np.asarray(sorted(columns), dtype=int)
    sub = train_svm(data.select_features(columns), l2_penalty, settings)
    full = _embed(sub, columns, data.d)
    # an l2^2 SVM is dense in principle; keep exact zeros from marking the subset as unused
    zero = full.w[columns] == 0
    if np.any(zero):
        full.w[columns[zero]] = np.finfo(float).tiny
    return full


def verify_cfs(structure: FeatureStructure, data_train: Dataset, data_test: Dataset,
               thresholds: EgdThresholds | None = None,
               settings: SolverSettings | None = None,
               l2_penalty: float = 1.0,
               full_model: LinearModel | None = None) -> EgdReport:
    """Train an SVM on each interchangeable set joined with the core set and run the EGD check.

    The reference is a plain SVM on all features of ``data_train`` unless
    ``full_model`` is supplied.
    """
    thresholds = thresholds or EgdThresholds()
    warnings = []
    models = []
    core = structure.ifg.as_set()
    for i, f in enumerate(structure.cfs):
        cols = sorted(f.as_set() | core)
        if not cols:
            warnings.append(f"model {i + 1}: empty restricted feature set, skipped")
            continue
        models.append(restricted_svm(data_train, cols, l2_penalty, settings))
    if full_model is None:
        full_model = train_svm(data_train, l2_penalty, settings)
    if len(models) < 2:
        warnings.append("fewer than 2 restricted models; EGD cannot hold")
        report = EgdReport(False, [], float("nan"), float("nan"), np.ones((0, 0)),
                           ["too_few_models"])
    else:
        report = egd_check(models, full_model, data_test, thresholds)
    if all(len(c) == 0 for c in structure.cfs):
        warnings.append("all interchangeable sets are empty (identical supports)")
    report.warnings.extend(warnings)
    for w in warnings:
        log.warning(w)
    return report


def restricted_accuracies(structure: FeatureStructure, data_train: Dataset,
                          data_test: Dataset, l2_penalty: float,
                          settings: SolverSettings | None = None) -> dict:
    """Test accuracy of SVMs on each interchangeable set alone, with the core, and on the core alone."""
    from .metrics import accuracy

    def fit_score(cols):
        if not cols:
            return float("nan")
        return accuracy(restricted_svm(data_train, cols, l2_penalty, settings), data_test)

    core = sorted(structure.ifg.as_set())
    alone = [fit_score(sorted(c.as_set())) for c in structure.cfs]
    joined = [fit_score(sorted(c.as_set() | set(core))) for c in structure.cfs]
    return {
        "cfs": float(np.nanmean(alone)) if not np.all(np.isnan(alone)) else float("nan"),
        "cfs_ifg": float(np.nanmean(joined)) if not np.all(np.isnan(joined)) else float("nan"),
        "ifg": fit_score(core),
    }


def write_structure(structure: FeatureStructure, path, s_size: int | None = None) -> None:
    """Machine-readable listing: one line per set, features by name (or 1-based index)."""
    def fmt(fs: FeatureSet):
        return " ".join(fs.names) if fs.names else " ".join(str(i + 1) for i in fs.indices)

    lines = ["ifg " + fmt(structure.ifg)]
    lines += [f"cfs{i + 1} " + fmt(c) for i, c in enumerate(structure.cfs)]
    lines += [f"support{i + 1} " + fmt(s) for i, s in enumerate(structure.source_supports)]
    if s_size:
        rep = cardinality_report(structure, s_size)
        lines.append(f"pct ifg={rep.ifg_pct:.2f} cfs={rep.cfs_pct:.2f} union={rep.union_pct:.2f}")
    Path(path).write_text("\n".join(line.rstrip() for line in lines) + "\n")
