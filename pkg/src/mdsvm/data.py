"""Datasets: loading, saving, standardization, splitting and synthetic generation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .rng import make_rng


class DataError(ValueError):
    """Raised for malformed or unusable datasets."""


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise DataError("X must be a 2-d matrix")
        n, d = X.shape
        if d < 1 or n < 2:
            raise DataError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
        if y.shape[0] != n:
            raise DataError(f"{y.shape[0]} labels for {n} instances")
        if not np.all((y == 1) | (y == -1)):
            raise DataError("labels must be -1 or +1")
        names = tuple(self.feature_names) or tuple(f"f{j + 1}" for j in range(d))
        if len(names) != d:
            raise DataError(f"{len(names)} feature names for {d} features")
        if len(set(names)) != d:
            raise DataError("feature names must be unique")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "Dataset":
        """Dataset restricted to the given instance indices."""
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.X[rows], self.y[rows], self.feature_names)

    def select_features(self, columns) -> "Dataset":
        """Dataset restricted to the given feature indices (order preserved)."""
        columns = np.asarray(columns, dtype=int)
        names = tuple(self.feature_names[c] for c in columns)
        return Dataset(self.X[:, columns], self.y, names)


@dataclass(frozen=True)
class Scaler:
    means: np.ndarray
    stds: np.ndarray

    @property
    def d(self) -> int:
        return self.means.shape[0]

    def inverse(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X) * self.stds + self.means


@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 300
    core_features: int = 2
    redundant_groups: int = 2
    group_size: int = 1
    noise_features: int = 5
    within_group_correlation: float = 1.0
    label_noise: float = 0.0

    def __post_init__(self):
        counts = (self.n, self.core_features, self.redundant_groups,
                  self.group_size, self.noise_features)
        if min(counts) < 0:
            raise DataError("counts must be non-negative")
        if self.core_features + self.redundant_groups * self.group_size < 1:
            raise DataError("at least one informative feature is required")
        if self.n < 2:
            raise DataError("need at least 2 instances")
        if not 0.0 <= self.within_group_correlation <= 1.0:
            raise DataError("within_group_correlation must lie in [0, 1]")
        if not 0.0 <= self.label_noise < 1.0:
            raise DataError("label_noise must lie in [0, 1)")


@dataclass(frozen=True)
class GroundTruth:
    true_ifg: frozenset[int]
    true_cfs: tuple[frozenset[int], ...]
    irrelevant: frozenset[int] = field(default_factory=frozenset)


# -- label handling ----------------------------------------------------------

def _as_number(label: str):
    try:
        return float(label)
    except ValueError:
        return None


def map_labels(raw: Sequence[str]) -> np.ndarray:
    """Map two distinct raw labels to -1/+1.

    Labels that already read as -1/+1 keep their sign; otherwise the
    lexicographically smaller string maps to -1.
    """
    values = sorted(set(raw))
    numbers = {v: _as_number(v) for v in values}
    if all(x in (-1.0, 1.0) for x in numbers.values()):
        return np.array([numbers[v] for v in raw])
    if len(values) > 2:
        raise DataError(f"not binary: found {len(values)} distinct labels")
    if len(values) == 1:
        raise DataError("only one class present")
    lookup = {values[0]: -1.0, values[1]: 1.0}
    return np.array([lookup[v] for v in raw])


# -- file formats ------------------------------------------------------------

def _parse_float(text: str, lineno: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(f"line {lineno}: non-numeric value {text!r}") from None


def _load_csv(path: Path) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if "label" not in header:
            raise DataError(f"{path}: no 'label' column in header")
        li = header.index("label")
        names = [h for i, h in enumerate(header) if i != li]
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            labels.append(row[li].strip())
            rows.append([_parse_float(v, lineno) for i, v in enumerate(row) if i != li])
    if not rows:
        raise DataError(f"{path}: no instances")
    return Dataset(np.array(rows, dtype=float), map_labels(labels), names)


def _load_sparse(path: Path, dims: int | None) -> Dataset:
    labels, entries = [], []
    max_index = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            labels.append(parts[0])
            row = {}
            for tok in parts[1:]:
                idx, sep, val = tok.partition(":")
                if not sep:
                    raise DataError(f"line {lineno}: malformed token {tok!r}")
                try:
                    j = int(idx)
                except ValueError:
                    raise DataError(f"line {lineno}: bad index {idx!r}") from None
                if j < 1:
                    raise DataError(f"line {lineno}: indices are 1-based, got {j}")
                row[j] = _parse_float(val, lineno)
                max_index = max(max_index, j)
            entries.append(row)
    if not labels:
        raise DataError(f"{path}: no instances")
    d = dims if dims is not None else max_index
    if d < max_index:
        raise DataError(f"index {max_index} exceeds dims={d}")
    X = np.zeros((len(labels), d))
    for i, row in enumerate(entries):
        for j, v in row.items():
            X[i, j - 1] = v
    return Dataset(X, map_labels(labels), tuple(str(j + 1) for j in range(d)))


def load_dataset(path, format: str = "csv", dims: int | None = None) -> Dataset:
    """Load a binary dataset from ``csv`` or ``sparse`` (index:value) text."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    if format == "csv":
        return _load_csv(path)
    if format in ("sparse", "svmlight", "sparse-index-value"):
        return _load_sparse(path, dims)
    raise DataError(f"unknown format {format!r}")


def save_dataset(data: Dataset, path, format: str = "csv") -> None:
    path = Path(path)
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["label", *data.feature_names])
            for xi, yi in zip(data.X, data.y):
                writer.writerow([int(yi), *(repr(float(v)) for v in xi)])
    elif format in ("sparse", "svmlight", "sparse-index-value"):
        with open(path, "w") as fh:
            for xi, yi in zip(data.X, data.y):
                toks = [f"{j + 1}:{float(v)!r}" for j, v in enumerate(xi) if v != 0]
                fh.write(" ".join([f"{int(yi):+d}", *toks]) + "\n")
    else:
        raise DataError(f"unknown format {format!r}")


# -- preprocessing -----------------------------------------------------------

def fit_standardize(train: Dataset) -> Scaler:
    means = train.X.mean(axis=0)
    stds = train.X.std(axis=0)
    # constant columns (up to rounding in the std) are only centred
    scale = np.abs(train.X).max(axis=0)
    stds = np.where(stds > 1e-12 * np.maximum(scale, 1e-300), stds, 1.0)
    return Scaler(means, stds)


def apply_standardize(scaler: Scaler, data: Dataset) -> Dataset:
    if scaler.d != data.d:
        raise DataError(f"scaler fit on d={scaler.d}, data has d={data.d}")
    return Dataset((data.X - scaler.means) / scaler.stds, data.y, data.feature_names)


def split(data: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Random train/test split, stratified when both classes have >= 2 instances."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must lie in (0, 1)")
    rng = make_rng(seed, "split")
    pos = np.flatnonzero(data.y > 0)
    neg = np.flatnonzero(data.y < 0)
    if min(len(pos), len(neg)) >= 2:
        train_idx = []
        for cls in (neg, pos):
            k = int(round(train_fraction * len(cls)))
            k = min(max(k, 1), len(cls) - 1)
            train_idx.extend(rng.permutation(cls)[:k])
    else:
        k = int(round(train_fraction * data.n))
        k = min(max(k, 1), data.n - 1)
        train_idx = list(rng.permutation(data.n)[:k])
    train_idx = np.sort(np.array(train_idx, dtype=int))
    test_idx = np.setdiff1d(np.arange(data.n), train_idx)
    train = data.subset(train_idx)
    for label in np.unique(data.y):
        if not np.any(train.y == label):
            raise DataError("degenerate split: a class has no training instances")
    return train, data.subset(test_idx)


def stratified_folds(y: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Partition instance indices into k stratified folds (held-out index arrays)."""
    rng = make_rng(seed, "folds")
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for label in (-1.0, 1.0):
        idx = rng.permutation(np.flatnonzero(y == label))
        for pos, i in enumerate(idx):
            folds[(pos + offset) % k].append(int(i))
        offset += len(idx)
    out = [np.sort(np.array(f, dtype=int)) for f in folds]
    if any(len(f) == 0 for f in out):
        raise DataError(f"degenerate folds: cannot form {k} non-empty folds")
    return out


# -- synthetic data ----------------------------------------------------------

def generate_synthetic(spec: SyntheticSpec, seed: int) -> tuple[Dataset, GroundTruth]:
    """Labels driven by core features plus one signal shared by every redundant group.

    Column order: core features, then the groups one after another, then noise.
    Each group member is ``sqrt(r) * signal + sqrt(1 - r) * eps`` so that members
    (of the same or different groups) correlate with pairwise coefficient ``r``.
    """
    rng = make_rng(seed, "synthetic")
    n = spec.n
    r = spec.within_group_correlation
    n_red = spec.redundant_groups * spec.group_size
    core = rng.standard_normal((n, spec.core_features))
    signal = rng.standard_normal(n)
    score = core.sum(axis=1)
    if spec.redundant_groups > 0:
        score = score + signal
    eps = rng.standard_normal((n, n_red))
    redundant = np.sqrt(r) * signal[:, None] + np.sqrt(1.0 - r) * eps
    noise = rng.standard_normal((n, spec.noise_features))

    y = np.where(score >= 0, 1.0, -1.0)
    flip = rng.random(n) < spec.label_noise
    y[flip] *= -1
    if np.all(y == y[0]):
        y[0] *= -1

    X = np.hstack([core, redundant, noise])
    names = ([f"core{j + 1}" for j in range(spec.core_features)]
             + [f"g{g + 1}_{k + 1}" for g in range(spec.redundant_groups)
                for k in range(spec.group_size)]
             + [f"noise{j + 1}" for j in range(spec.noise_features)])
    c = spec.core_features
    groups = tuple(
        frozenset(range(c + g * spec.group_size, c + (g + 1) * spec.group_size))
        for g in range(spec.redundant_groups))
    truth = GroundTruth(
        true_ifg=frozenset(range(c)),
        true_cfs=groups,
        irrelevant=frozenset(range(c + n_red, c + n_red + spec.noise_features)),
    )
    return Dataset(X, y, names), truth


def save_truth(truth: GroundTruth, data: Dataset, path) -> None:
    names = data.feature_names
    lines = ["ifg " + " ".join(names[i] for i in sorted(truth.true_ifg))]
    for g in truth.true_cfs:
        lines.append("cfs " + " ".join(names[i] for i in sorted(g)))
    lines.append("irrelevant " + " ".join(names[i] for i in sorted(truth.irrelevant)))
    Path(path).write_text("\n".join(line.rstrip() for line in lines) + "\n")
