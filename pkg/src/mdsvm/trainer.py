"""Joint training of m dissimilar linear SVMs by alternating convex minimization."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import Dataset
from .rng import make_rng
from .solver import (SolverSettings, SubproblemSpec, agreement_hinge, hinge,
                     solve_subproblem)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MdsvmHyper:
    m: int = 2
    lambda1: float = 1.0
    lambda2: float = 10.0
    lambda3: float = 1.0
    outer_tol: float = 1e-4
    max_outer: int = 50

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda1 and lambda2 must be >= 0")
        if not self.lambda3 > 0:
            raise ValueError("lambda3 must be > 0")
        if not self.outer_tol > 0:
            raise ValueError("outer_tol must be > 0")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")


@dataclass
class LinearModel:
    w: np.ndarray
    b: float = 0.0

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.b = float(self.b)
        if not (np.all(np.isfinite(self.w)) and np.isfinite(self.b)):
            raise ValueError("model parameters must be finite")

    @property
    def d(self) -> int:
        return self.w.shape[0]

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.d:
            raise ValueError(f"model has d={self.d}, input has {X.shape[-1]} features")
        return X @ self.w + self.b

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0, 1.0, -1.0)


@dataclass
class ModelSet:
    models: list[LinearModel]
    hyper: MdsvmHyper
    objective_trace: list[float] = field(default_factory=list)
    converged: bool = False

    def __post_init__(self):
        if not self.models:
            raise ValueError("a model set needs at least one model")
        if len({mod.d for mod in self.models}) != 1:
            raise ValueError("all models must share the same dimension")

    @property
    def m(self) -> int:
        return len(self.models)

    @property
    def d(self) -> int:
        return self.models[0].d

    @property
    def W(self) -> np.ndarray:
        return np.vstack([mod.w for mod in self.models])

    @property
    def biases(self) -> np.ndarray:
        return np.array([mod.b for mod in self.models])


def predict(model: LinearModel, x) -> tuple[float, float]:
    """Label and decision value for one instance; a zero decision value maps to +1."""
    value = float(model.decision_function(np.asarray(x, dtype=float).ravel()))
    return (1.0 if value >= 0 else -1.0), value


def init_modelset(base: LinearModel, m: int, hyper: MdsvmHyper | None = None,
                  jitter: float = 0.0, seed: int = 0) -> ModelSet:
    """m copies of ``base`` scaled by 1/m.

    ``jitter`` > 0 multiplies each weight by ``1 + jitter * N(0, 1)`` to break
    exact ties between duplicated features; the default keeps copies identical.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    hyper = hyper or MdsvmHyper(m=m)
    if hyper.m != m:
        hyper = replace(hyper, m=m)
    rng = make_rng(seed, "init-jitter")
    models = []
    for _ in range(m):
        w = base.w / m
        if jitter > 0:
            w = w * (1.0 + jitter * rng.standard_normal(w.shape))
        models.append(LinearModel(w.copy(), base.b / m))
    return ModelSet(models, hyper)


def disjointness_penalty(models) -> float:
    """Sum over ordered pairs i != j of |w_i| . |w_j|."""
    W = np.abs(_weights(models))
    total = W.sum(axis=0)
    # sum_{i != j} a_i a_j = (sum a)^2 - sum a^2, per feature
    return float((total ** 2 - (W ** 2).sum(axis=0)).sum())


def _weights(models) -> np.ndarray:
    if isinstance(models, ModelSet):
        return models.W
    return np.vstack([mod.w if isinstance(mod, LinearModel) else np.asarray(mod, dtype=float)
                      for mod in models])


def global_objective(models: ModelSet, data: Dataset) -> float:
    W = models.W
    if W.shape[1] != data.d:
        raise ValueError(f"models have d={W.shape[1]}, data has d={data.d}")
    hyper = models.hyper
    F = W @ data.X.T + models.biases[:, None]
    value = hinge(data.y[None, :] * F).sum()
    m = models.m
    for i in range(m):
        for j in range(m):
            if i != j:
                value += hyper.lambda1 * agreement_hinge(F[i], F[j]).sum()
    value += 0.5 * hyper.lambda2 * disjointness_penalty(models)
    value += hyper.lambda3 * (W * W).sum()
    return float(value)


def block_subproblem(models: ModelSet, i: int, data: Dataset) -> SubproblemSpec:
    """Subproblem for model ``i`` with the others fixed.

    The agreement weight is 2 * lambda1: model i enters both (i, j) and (j, i)
    of the ordered-pair sum, so the block objective differs from the joint one
    only by terms that do not involve model i.
    """
    hyper = models.hyper
    others = [j for j in range(models.m) if j != i]
    W = models.W
    if others:
        P = W[others] @ data.X.T + models.biases[others][:, None]
        c = hyper.lambda2 * np.abs(W[others]).sum(axis=0)
    else:
        P = np.zeros((0, data.n))
        c = np.zeros(data.d)
    return SubproblemSpec(data.X, data.y, P, c, 2.0 * hyper.lambda1, hyper.lambda3)


def train_mdsvm(data: Dataset, hyper: MdsvmHyper, init: ModelSet | None = None,
                settings: SolverSettings | None = None) -> ModelSet:
    """Gauss-Seidel sweeps over the m models, each a warm-started convex solve."""
    settings = settings or SolverSettings()
    if init is None:
        init = ModelSet([LinearModel(np.zeros(data.d), 0.0) for _ in range(hyper.m)], hyper)
    if init.m != hyper.m or init.d != data.d:
        raise ValueError(f"init has m={init.m}, d={init.d}; expected m={hyper.m}, d={data.d}")
    current = ModelSet([LinearModel(mod.w.copy(), mod.b) for mod in init.models], hyper)
    trace = [global_objective(current, data)]
    converged = False
    # a single block is solved exactly by one sweep
    max_outer = 1 if hyper.m == 1 else hyper.max_outer
    for sweep in range(max_outer):
        inner_ok = True
        for i in range(hyper.m):
            spec = block_subproblem(current, i, data)
            mod = current.models[i]
            res = solve_subproblem(spec, (mod.w, mod.b), settings)
            inner_ok &= res.converged
            current.models[i] = LinearModel(res.w, res.b)
        trace.append(global_objective(current, data))
        prev, cur = trace[-2], trace[-1]
        change = abs(prev - cur) / max(abs(prev), 1e-12)
        log.debug("sweep %d objective %.10g (rel change %.3g)", sweep + 1, cur, change)
        if hyper.m == 1:
            converged = inner_ok
        elif change < hyper.outer_tol:
            converged = True
            break
    current.objective_trace = trace
    current.converged = converged
    return current


def train_ensvm(data: Dataset, l1_penalty: float, l2_penalty: float,
                settings: SolverSettings | None = None) -> LinearModel:
    """Hinge loss with elastic-net penalty ``l1 ||w||_1 + l2 ||w||^2``."""
    if l1_penalty < 0 or not l2_penalty > 0:
        raise ValueError("need l1_penalty >= 0 and l2_penalty > 0")
    spec = SubproblemSpec(data.X, data.y, np.zeros((0, data.n)),
                          np.full(data.d, float(l1_penalty)), 0.0, l2_penalty)
    res = solve_subproblem(spec, None, settings)
    return LinearModel(res.w, res.b)


def train_svm(data: Dataset, l2_penalty: float,
              settings: SolverSettings | None = None) -> LinearModel:
    """Plain l2^2-regularized hinge-loss SVM."""
    return train_ensvm(data, 0.0, l2_penalty, settings)


# -- persistence -------------------------------------------------------------

def save_models(models: ModelSet, path, feature_names=None) -> None:
    h = models.hyper
    lines = [f"mdsvm d={models.d} m={models.m} lambda1={h.lambda1!r} "
             f"lambda2={h.lambda2!r} lambda3={h.lambda3!r} "
             f"outer_tol={h.outer_tol!r} max_outer={h.max_outer}"]
    if feature_names is not None:
        lines.append("features " + " ".join(feature_names))
    for i, mod in enumerate(models.models):
        lines.append(f"model {i + 1}")
        lines.append(f"bias {mod.b!r}")
        lines.extend(f"w {j + 1}:{float(v)!r}" for j, v in enumerate(mod.w) if v != 0)
    Path(path).write_text("\n".join(lines) + "\n")


class ModelFileError(ValueError):
    pass


def load_models(path) -> tuple[ModelSet, tuple[str, ...] | None]:
    """Read a model file; returns the model set and the stored feature names."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("mdsvm "):
        raise ModelFileError(f"{path}: missing 'mdsvm' header")
    try:
        fields = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
        d, m = int(fields["d"]), int(fields["m"])
        hyper = MdsvmHyper(m=m, lambda1=float(fields["lambda1"]),
                           lambda2=float(fields["lambda2"]),
                           lambda3=float(fields["lambda3"]),
                           outer_tol=float(fields.get("outer_tol", 1e-4)),
                           max_outer=int(fields.get("max_outer", 50)))
    except (KeyError, ValueError) as exc:
        raise ModelFileError(f"{path}: bad header ({exc})") from None
    names = None
    blocks: list[LinearModel] = []
    for lineno, line in enumerate(lines[1:], start=2):
        key, _, rest = line.partition(" ")
        try:
            if key == "features":
                names = tuple(rest.split())
            elif key == "model":
                blocks.append(LinearModel(np.zeros(d), 0.0))
            elif key == "bias":
                blocks[-1].b = float(rest)
            elif key == "w":
                idx, val = rest.split(":")
                blocks[-1].w[int(idx) - 1] = float(val)
            else:
                raise ModelFileError(f"{path}:{lineno}: unknown record {key!r}")
        except (IndexError, ValueError) as exc:
            raise ModelFileError(f"{path}:{lineno}: malformed line ({exc})") from None
    if len(blocks) != m:
        raise ModelFileError(f"{path}: header says m={m}, found {len(blocks)} models")
    return ModelSet(blocks, hyper), names
