"""Accuracy, prediction agreement, feature-set dissimilarity and the EGD check."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterable, Sequence

import numpy as np

from .data import Dataset
from .trainer import LinearModel, ModelSet


@dataclass(frozen=True)
class EgdThresholds:
    epsilon1: float = 0.05
    epsilon2: float = 0.05
    theta: float = 0.6

    def __post_init__(self):
        if not (self.epsilon1 > 0 and self.epsilon2 > 0):
            raise ValueError("epsilon1 and epsilon2 must be > 0")
        if not self.theta > 0:
            raise ValueError("theta must be > 0")


@dataclass
class EgdReport:
    is_egd: bool
    per_model_error_gap: list[float]
    pa: float
    dis: float
    pairwise_overlaps: np.ndarray
    failing_conditions: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _check_nonempty(data: Dataset):
    if data.n < 1:
        raise ValueError("empty dataset")


def accuracy(model: LinearModel, data: Dataset) -> float:
    _check_nonempty(data)
    return float(np.mean(model.predict(data.X) == data.y))


def error(model: LinearModel, data: Dataset) -> float:
    # counted directly so that boundary comparisons against thresholds are exact
    _check_nonempty(data)
    return float(np.mean(model.predict(data.X) != data.y))


def empirical_agreement(a: LinearModel, b: LinearModel, data: Dataset) -> float:
    _check_nonempty(data)
    return float(np.mean(a.predict(data.X) == b.predict(data.X)))


def agreement_from_predictions(preds: np.ndarray) -> float:
    """Mean pairwise agreement of an (m, n) matrix of predicted labels."""
    preds = np.asarray(preds)
    m = preds.shape[0]
    if m < 2:
        raise ValueError("agreement undefined for fewer than 2 models")
    # per instance, count ordered pairs with equal labels
    same = 0.0
    for label in np.unique(preds):
        k = (preds == label).sum(axis=0)
        same += (k * (k - 1)).sum()
    return float(same / (m * (m - 1) * preds.shape[1]))


def predictive_agreement(models, data: Dataset) -> float:
    models = models.models if isinstance(models, ModelSet) else list(models)
    if len(models) < 2:
        raise ValueError("agreement undefined for fewer than 2 models")
    _check_nonempty(data)
    return agreement_from_predictions(np.vstack([mod.predict(data.X) for mod in models]))


def feature_dissimilarity(a: Iterable[int], b: Iterable[int]) -> float:
    """Jaccard distance; two empty sets are identical."""
    a, b = set(a), set(b)
    union = a | b
    if not union:
        return 0.0
    return 1.0 - len(a & b) / len(union)


def dissimilarity_score(sets: Sequence[Iterable[int]]) -> float:
    sets = [set(s) for s in sets]
    m = len(sets)
    if m < 2:
        raise ValueError("dissimilarity undefined for fewer than 2 sets")
    total = sum(feature_dissimilarity(sets[i], sets[j]) for i, j in permutations(range(m), 2))
    return total / (m * (m - 1))


def model_support(model: LinearModel) -> frozenset[int]:
    return frozenset(np.flatnonzero(model.w).tolist())


def egd_check(models, full_model: LinearModel, data: Dataset,
              thresholds: EgdThresholds | None = None) -> EgdReport:
    """Evaluate the three equally-good-and-dissimilar conditions on held-out ``data``.

    (a) every model's error is within epsilon1 of the full model's error,
    (b) 1 - predictive agreement < epsilon2,
    (c) every pair of supports overlaps (1 - Jaccard distance) by less than theta.
    All inequalities are strict. ``data`` must not have been used for training.
    """
    thresholds = thresholds or EgdThresholds()
    models = models.models if isinstance(models, ModelSet) else list(models)
    m = len(models)
    if m < 2:
        raise ValueError("EGD check needs at least 2 models")
    ref = error(full_model, data)
    gaps = [abs(error(mod, data) - ref) for mod in models]
    pa = predictive_agreement(models, data)
    supports = [model_support(mod) for mod in models]
    overlaps = np.ones((m, m))
    for i, j in permutations(range(m), 2):
        overlaps[i, j] = 1.0 - feature_dissimilarity(supports[i], supports[j])
    failing = []
    if not all(g < thresholds.epsilon1 for g in gaps):
        failing.append("error_gap")
    if not 1.0 - pa < thresholds.epsilon2:
        failing.append("agreement")
    off = overlaps[~np.eye(m, dtype=bool)]
    if not np.all(off < thresholds.theta):
        failing.append("dissimilarity")
    return EgdReport(
        is_egd=not failing,
        per_model_error_gap=gaps,
        pa=pa,
        dis=dissimilarity_score(supports),
        pairwise_overlaps=overlaps,
        failing_conditions=failing,
    )
