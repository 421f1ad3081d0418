"""Single-model convex subproblem: hinge + agreement hinge + weighted l1 + l2^2.

With every other model fixed, one model of the joint problem solves

    min_{w,b}  sum_k hinge(y_k f_k) + lambda1 sum_j sum_k max(0, -f_k p_jk)
               + sum_l c_l |w_l| + lambda3 ||w||^2,     f_k = b + w.x_k

where ``p_jk`` are the decision values of the other models and
``c_l = lambda2 * sum_j |w_jl|``.  Constant terms that depend only on the
fixed models are dropped.

The ADMM splitting uses two auxiliary blocks, ``z = Xw + b`` (the decision
values, carrying the loss) and ``v = w`` (carrying the weighted l1 term).
The loss is separable over instances and piecewise linear with kinks only
at ``0`` and ``y_k``, so its proximal map is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class NumericalError(ArithmeticError):
    """Raised when an iterate becomes non-finite."""


@dataclass(frozen=True)
class SubproblemSpec:
    X: np.ndarray
    y: np.ndarray
    fixed_predictions: np.ndarray
    l1_weights: np.ndarray
    lambda1: float = 1.0
    lambda3: float = 1.0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        n, d = X.shape
        P = np.asarray(self.fixed_predictions, dtype=float).reshape(-1, n)
        c = np.broadcast_to(np.asarray(self.l1_weights, dtype=float), (d,)).copy()
        if y.shape != (n,):
            raise ValueError(f"y has shape {y.shape}, expected ({n},)")
        if np.any(c < 0):
            raise ValueError("l1_weights must be non-negative")
        if self.lambda1 < 0:
            raise ValueError("lambda1 must be >= 0")
        if not self.lambda3 > 0:
            raise ValueError("lambda3 must be > 0")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "fixed_predictions", P)
        object.__setattr__(self, "l1_weights", c)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class SolverSettings:
    rho: float = 1.0
    abs_tol: float = 1e-5
    rel_tol: float = 1e-4
    max_iterations: int = 5000

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be > 0")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class SolverResult:
    w: np.ndarray
    b: float
    objective: float
    iterations: int
    converged: bool


def hinge(margin):
    return np.maximum(0.0, 1.0 - np.asarray(margin, dtype=float))


def agreement_hinge(own_value, other_value):
    return np.maximum(0.0, -np.asarray(own_value, dtype=float) * np.asarray(other_value, dtype=float))


def _agreement_slopes(spec: SubproblemSpec) -> tuple[np.ndarray, np.ndarray]:
    # sum_j max(0, -z p_j) = lambda1 * (pos * max(0, -z) + neg * max(0, z))
    P = spec.fixed_predictions
    pos = spec.lambda1 * np.maximum(P, 0.0).sum(axis=0)
    neg = spec.lambda1 * np.maximum(-P, 0.0).sum(axis=0)
    return pos, neg


def _loss(z, y, pos, neg):
    return (np.maximum(0.0, 1.0 - y * z)
            + pos * np.maximum(0.0, -z) + neg * np.maximum(0.0, z))


def objective_subproblem(w, b, spec: SubproblemSpec) -> float:
    w = np.asarray(w, dtype=float)
    if w.shape != (spec.d,):
        raise ValueError(f"w has shape {w.shape}, expected ({spec.d},)")
    f = spec.X @ w + b
    value = hinge(spec.y * f).sum()
    if spec.fixed_predictions.shape[0]:
        value += spec.lambda1 * agreement_hinge(f[None, :], spec.fixed_predictions).sum()
    value += spec.l1_weights @ np.abs(w) + spec.lambda3 * (w @ w)
    return float(value)


def prox_weighted_l1(v, weights, step: float):
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - step * np.asarray(weights, dtype=float), 0.0)


def _loss_pieces(y, pos, neg):
    """Kinks ``lo <= hi`` and the slopes on the three linear pieces of each loss."""
    lo = np.minimum(0.0, y)
    hi = np.maximum(0.0, y)
    # y = +1: pieces (-inf, 0], [0, 1], [1, inf); y = -1: (-inf, -1], [-1, 0], [0, inf)
    pos_y = y > 0
    s1 = np.where(pos_y, -1.0 - pos, -pos)
    s2 = np.where(pos_y, -1.0 + neg, 1.0 - pos)
    s3 = np.where(pos_y, neg, 1.0 + neg)
    return lo, hi, s1, s2, s3


def _prox_loss(v, t, pieces):
    """Exact prox of t * loss_k at v_k for a convex loss with two kinks."""
    lo, hi, s1, s2, s3 = pieces
    out = v - t * s2
    out = np.where(out < lo, np.minimum(v - t * s1, lo), out)
    out = np.where(out > hi, np.maximum(v - t * s3, hi), out)
    return out


def _best_bias(w, b, spec: SubproblemSpec, pos, neg) -> float:
    # loss is piecewise linear in b: the optimum sits on a kink
    s = spec.X @ w
    kinks = np.concatenate([spec.y - s, -s])
    cands = np.concatenate([[b], kinks])
    vals = _loss(s[None, :] + cands[:, None], spec.y, pos, neg).sum(axis=1)
    i = int(np.argmin(vals))
    return float(cands[0] if vals[0] <= vals[i] else cands[i])


_CHECK_EVERY = 5


def solve_subproblem(spec: SubproblemSpec, init=None,
                     settings: SolverSettings | None = None) -> SolverResult:
    """ADMM on the fixed-others subproblem.

    Returned weights come from the l1 split variable, so unused features are
    exact zeros.  The result never has a higher objective than ``init``.
    """
    settings = settings or SolverSettings()
    n, d = spec.n, spec.d
    if init is None:
        w0, b0 = np.zeros(d), 0.0
    else:
        w0, b0 = np.asarray(init[0], dtype=float).copy(), float(init[1])
    rho = settings.rho
    pos, neg = _agreement_slopes(spec)
    pieces = _loss_pieces(spec.y, pos, neg)

    A = np.hstack([spec.X, np.ones((n, 1))])
    At = np.ascontiguousarray(A.T)
    M = rho * (At @ A)
    M[np.arange(d), np.arange(d)] += 2.0 * spec.lambda3 + rho
    factor = cho_factor(M)
    theta = np.append(w0, b0)
    z = A @ theta
    v = w0.copy()
    uz = np.zeros(n)
    uv = np.zeros(d)
    step = 1.0 / rho
    shrink = spec.l1_weights / rho
    sqrt_pri = np.sqrt(n + d) * settings.abs_tol
    sqrt_dual = np.sqrt(d + 1) * settings.abs_tol

    converged = False
    it = 0
    for it in range(1, settings.max_iterations + 1):
        rhs = At @ (z - uz)
        rhs[:d] += v - uv
        rhs *= rho
        theta = cho_solve(factor, rhs, check_finite=False)
        Ath = A @ theta
        w = theta[:d]
        z_old, v_old = z, v
        z = _prox_loss(Ath + uz, step, pieces)
        v = prox_weighted_l1(w + uv, shrink, 1.0)
        rz = Ath - z
        rv = w - v
        uz += rz
        uv += rv
        if it % _CHECK_EVERY and it != settings.max_iterations:
            continue
        if not (np.isfinite(theta).all() and np.isfinite(uz).all()):
            raise NumericalError(f"non-finite iterate at ADMM iteration {it}")
        r_norm = np.sqrt(rz @ rz + rv @ rv)
        dual = At @ (z - z_old)
        dual[:d] += v - v_old
        s_norm = rho * np.sqrt(dual @ dual)
        eps_pri = sqrt_pri + settings.rel_tol * max(np.sqrt(Ath @ Ath + w @ w),
                                                    np.sqrt(z @ z + v @ v))
        ydual = At @ uz
        ydual[:d] += uv
        eps_dual = sqrt_dual + settings.rel_tol * rho * np.sqrt(ydual @ ydual)
        if r_norm <= eps_pri and s_norm <= eps_dual:
            converged = True
            break

    w_out = v.copy()
    b_out = _best_bias(w_out, float(theta[d]), spec, pos, neg)
    obj = objective_subproblem(w_out, b_out, spec)
    obj_init = objective_subproblem(w0, b0, spec)
    if obj > obj_init:
        w_out, b_out, obj = w0, b0, obj_init
    return SolverResult(w_out, b_out, obj, it, converged)


def oracle_solve(spec: SubproblemSpec, grid_radius: float = 3.0,
                 grid_steps: int = 61) -> SolverResult:
    """Brute-force grid search over (w, b), refined once around the best cell.

    Independent of the ADMM path; only meant for d <= 3.
    """
    d = spec.d
    if d > 3:
        raise ValueError("oracle limited to tiny instances (d <= 3)")
    axis = np.linspace(-grid_radius, grid_radius, grid_steps)
    h = axis[1] - axis[0]
    best, best_val = _grid_search(spec, [axis] * (d + 1))
    fine = [np.linspace(c - h, c + h, grid_steps) for c in best]
    cand, cand_val = _grid_search(spec, fine)
    if cand_val < best_val:
        best, best_val = cand, cand_val
    return SolverResult(best[:d].copy(), float(best[d]), float(best_val),
                        grid_steps ** (d + 1) * 2, True)


def _grid_search(spec: SubproblemSpec, axes, chunk: int = 20000):
    """Exhaustive minimum over the product grid; the last axis is the bias."""
    d = spec.d
    w_axes = [np.asarray(a, dtype=float) for a in axes[:d]]
    b_axis = np.asarray(axes[d], dtype=float)
    Wgrid = np.stack(np.meshgrid(*w_axes, indexing="ij"), axis=-1).reshape(-1, d)
    best, best_val = None, np.inf
    for start in range(0, len(Wgrid), chunk):
        W = Wgrid[start:start + chunk]
        XW = W @ spec.X.T
        reg = np.abs(W) @ spec.l1_weights + spec.lambda3 * (W * W).sum(axis=1)
        for b in b_axis:
            F = XW + b
            vals = hinge(spec.y * F).sum(axis=1) + reg
            for p in spec.fixed_predictions:
                vals += spec.lambda1 * agreement_hinge(F, p).sum(axis=1)
            i = int(np.argmin(vals))
            if vals[i] < best_val:
                best, best_val = np.append(W[i], b), vals[i]
    return best, best_val
