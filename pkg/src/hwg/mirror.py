"""Mirror descent on column simplices read as a quadratic observable scheme.

One exponentiated-gradient step w -> w' is reproduced by the affine
recurrence rho' = (1 - t) rho + t h with the signal h = (w' - (1 - t) w) / t,
provided t is large enough for h to stay non-negative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AdmissibilityError, HWGError, InvalidArgument, PreconditionError


def _check_columns(w, tol=1e-12):
    w = np.asarray(w, dtype=float)
    if w.ndim != 2:
        raise InvalidArgument("weights must be an M x N matrix")
    if np.any(w < 0) or np.any(np.abs(w.sum(axis=0) - 1.0) > tol):
        raise InvalidArgument("every weight column must lie in the simplex")
    return w


def md_step(w, grad, eta: float) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if grad.shape != w.shape:
        raise InvalidArgument("gradient shape must match the weights")
    tilde = w * np.exp(-eta * grad)
    norm = tilde.sum(axis=0)
    if np.any(norm <= 0) or not np.all(np.isfinite(norm)):
        raise HWGError("mirror step produced an empty column")
    return tilde / norm


def min_admissible_t(eta: float, c_max: float) -> float:
    if not (eta > 0 and c_max > 0):
        raise InvalidArgument("eta and C_max must be positive")
    return -math.expm1(-2.0 * eta * c_max)


def signal_from_md(w, w_next, t: float) -> np.ndarray:
    """h = (w_next - (1 - t) w) / t; raises when an entry is negative."""
    if not 0 < t <= 1:
        raise InvalidArgument("t must lie in (0, 1]")
    w = np.asarray(w, dtype=float)
    w_next = np.asarray(w_next, dtype=float)
    h = (w_next - (1.0 - t) * w) / t
    bad = np.argwhere(h < 0)
    if bad.size:
        i, j = map(int, bad[0])
        # smallest t keeping every entry non-negative: t >= 1 - w_next / w
        with np.errstate(divide="ignore", invalid="ignore"):
            need = np.where(w > 0, 1.0 - w_next / w, 0.0)
        raise AdmissibilityError(
            f"signal entry ({i}, {j}) = {h[i, j]!r} < 0; need t >= {need.max()!r}",
            (i, j), float(need.max()))
    return h


@dataclass
class MirrorProblem:
    grad: Callable[[np.ndarray], np.ndarray]
    eta: float
    c_max: float
    w0: np.ndarray
    context: dict = field(default_factory=dict)   # metadata only

    def __post_init__(self):
        self.w0 = _check_columns(self.w0)
        if not (self.eta > 0 and self.c_max > 0):
            raise InvalidArgument("eta and C_max must be positive")

    def gradient(self, w) -> np.ndarray:
        g = np.asarray(self.grad(w), dtype=float)
        if np.any(np.abs(g) >= self.c_max):
            raise PreconditionError(
                f"gradient bound violated: max |dLoss/dw| = {np.abs(g).max()!r} >= C_max = {self.c_max!r}")
        return g


@dataclass
class MirrorRun:
    w_md: list
    w_hwg: list
    signals: list
    deviation: float
    min_ratio: float          # min over steps of w^{n+1} / (w^n e^{-2 eta C_max})


def run_equivalence(problem: MirrorProblem, steps: int, t: float) -> MirrorRun:
    t_min = min_admissible_t(problem.eta, problem.c_max)
    if not t > t_min:
        raise PreconditionError(f"t = {t} must exceed 1 - exp(-2 eta C_max) = {t_min}")
    w = problem.w0.copy()
    rho = problem.w0.copy()
    w_md, w_hwg, signals = [w.copy()], [rho.copy()], []
    floor = math.exp(-2.0 * problem.eta * problem.c_max)
    dev, ratio = 0.0, math.inf
    for _ in range(steps):
        w_next = md_step(w, problem.gradient(w), problem.eta)
        h = signal_from_md(w, w_next, t)
        rho = (1.0 - t) * rho + t * h
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(w > 0, w_next / (w * floor), np.inf)
        ratio = min(ratio, float(r.min()))
        w = w_next
        w_md.append(w.copy())
        w_hwg.append(rho.copy())
        signals.append(h)
        dev = max(dev, float(np.abs(rho - w).max()))
    return MirrorRun(w_md, w_hwg, signals, dev, ratio)


def verify_equivalence(problem: MirrorProblem, steps: int, t: float) -> float:
    return run_equivalence(problem, steps, t).deviation


def linear_loss(c):
    c = np.asarray(c, dtype=float)
    return lambda w: c


def quadratic_loss(target):
    target = np.asarray(target, dtype=float)
    return lambda w: w - target


def internal_lift(problem: MirrorProblem, steps: int, t: float, alpha: float = 1.0):
    """Full internal construction for each output column on a star with M leaves.

    Column j is a measure on the leaves of a unit star; each step is a
    quadratic minimizing movement toward the reconstructed signal, with tau
    chosen so the contraction factor equals t. Returns the projected
    observable weights (M x N per step) and the plain MD weights.
    """
    from .graph import VertexRef, star_tree
    from .measures import DiscreteMeasure, MemoryField
    from .projector import project_trajectory
    from .scheme import PurelyQuadratic, run_scheme

    M, N = problem.w0.shape
    if M > 4:
        raise InvalidArgument("internal lift is a desk-scale check (M <= 4)")
    run = run_equivalence(problem, steps, t)
    g = star_tree([1.0] * M)
    leaves = [VertexRef(i + 1) for i in range(M)]
    tau = t / (alpha * (1.0 - t))

    def col(v):
        return DiscreteMeasure(zip(leaves, v))

    field0 = MemoryField((f"out{j}", 1.0, col(problem.w0[:, j])) for j in range(N))
    signals = [{f"out{j}": col(h[:, j]) for j in range(N)} for h in run.signals]
    traj = run_scheme(g, field0, PurelyQuadratic(alpha), tau, steps, lambda r, c, n: signals[n])
    proj = project_trajectory(g, traj, leaves)
    lifted = [np.column_stack([proj.recurrence[f"out{j}"][n] for j in range(N)])
              for n in range(steps + 1)]
    composed = [np.column_stack([proj.composed[f"out{j}"][n] for j in range(N)])
                for n in range(steps + 1)]
    return run, lifted, composed
