"""Hebbian energies and the tau-step minimizing-movement update.

Every energy class here depends on a fiber only through the distance
r = W2(rho_x, h_x) to its frozen target, so each class exposes a radial
profile r -> energy. The quadratic update is a displacement of the optimal
plan at the contraction factor; the numeric update either searches that
geodesic or brute-forces a mass grid on a small candidate support.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import CapacityError, InvalidArgument
from .graph import MetricGraph, point_key
from .measures import DiscreteMeasure, MemoryField
from .parallel import fiber_map
from .transport import (TransportPlan, cost_matrix, displacement, field_w, solve_ot,
                        solve_transportation, w2)

GRID_CAP = 10_000_000
MAX_GRID_POINTS = 6
PROFILE_GRID = 64


def _check_profile(fn, r_max, monotone=True, convex=False):
    r = np.linspace(0.0, r_max, PROFILE_GRID)
    vals = np.array([float(fn(x)) for x in r])
    if not np.all(np.isfinite(vals)):
        raise InvalidArgument("energy profile must be finite on the sample grid")
    if monotone and np.any(np.diff(vals) < -1e-9):
        raise InvalidArgument("energy profile is not nondecreasing on the sample grid")
    if convex and np.any(vals[:-2] - 2 * vals[1:-1] + vals[2:] < -1e-9):
        raise InvalidArgument("energy profile is not convex on the sample grid")


@dataclass(frozen=True)
class PurelyQuadratic:
    """(alpha_x / 2) W2^2 with an optional per-fiber alpha (cluster map)."""
    alpha: float
    clusters: Mapping[str, float] | None = None

    def __post_init__(self):
        vals = [self.alpha] + list((self.clusters or {}).values())
        if not all(a > 0 for a in vals):
            raise InvalidArgument("alpha must be positive")

    def alpha_for(self, fid) -> float:
        if self.clusters and fid in self.clusters:
            return float(self.clusters[fid])
        return float(self.alpha)

    def radial(self, fid) -> Callable[[float], float]:
        a = self.alpha_for(fid)
        return lambda r: 0.5 * a * r * r


@dataclass(frozen=True)
class Isotropic:
    """F(W2) for a nondecreasing profile F."""
    profile: Callable[[float], float]
    r_max: float = 10.0

    def __post_init__(self):
        _check_profile(self.profile, self.r_max)

    def radial(self, fid):
        return self.profile


@dataclass(frozen=True)
class W2Quadratic:
    """f(W2^2) for a convex nondecreasing f."""
    profile: Callable[[float], float]
    r_max: float = 10.0

    def __post_init__(self):
        _check_profile(self.profile, self.r_max ** 2, convex=True)

    def radial(self, fid):
        f = self.profile
        return lambda r: f(r * r)


@dataclass(frozen=True)
class GQE:
    """(alpha/2) d(H(rho, h), h)^2.

    ``map`` is "identity" or ("shrink", s): H moves h toward rho by the
    fraction s of the geodesic, so d(H, h) = s W2(rho, h). L_S and L_H are
    the declared Lipschitz constants of the signal and of H.
    """
    alpha: float
    map: object = "identity"
    L_S: float = 0.0
    L_H: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidArgument("alpha must be positive")
        if self.map != "identity":
            kind, s = self.map
            if kind != "shrink" or not 0 < s <= 1:
                raise InvalidArgument(f"unknown observable map {self.map!r}")

    @property
    def shrink(self) -> float:
        return 1.0 if self.map == "identity" else float(self.map[1])

    def alpha_for(self, fid) -> float:
        return self.alpha * self.shrink ** 2

    def radial(self, fid):
        a = self.alpha_for(fid)
        return lambda r: 0.5 * a * r * r


EnergySpec = PurelyQuadratic | Isotropic | W2Quadratic | GQE


def is_quadratic(spec) -> bool:
    return isinstance(spec, (PurelyQuadratic, GQE))


def contraction_factor(alpha: float, tau: float) -> float:
    if not (alpha > 0 and tau > 0):
        raise InvalidArgument("alpha and tau must be positive")
    return alpha * tau / (1.0 + alpha * tau)


@dataclass
class SchemeState:
    """One step's input: the field, its context and the frozen per-fiber signal."""
    step: int
    tau: float
    field: MemoryField
    signal: Mapping[str, DiscreteMeasure]
    energy: object
    context: object = None

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidArgument("tau must be positive")
        missing = set(self.field.ids) - set(self.signal)
        if missing:
            raise InvalidArgument(f"signal missing fibers {sorted(missing)}")


@dataclass
class StepResult:
    field: MemoryField
    plans: dict = field(default_factory=dict)       # fiber -> plan rho^n -> h^n
    t: dict = field(default_factory=dict)           # fiber -> geodesic parameter used
    multiple: dict = field(default_factory=dict)    # fiber -> tie flag (grid mode)


def _quadratic_fiber(g, rho, h, t):
    plan = solve_ot(g, rho, h)
    if rho == h:
        return rho, plan
    return displacement(g, plan, t), plan


def jko_step_quadratic(state: SchemeState, g: MetricGraph, detailed: bool = False):
    if not is_quadratic(state.energy):
        raise InvalidArgument("closed-form step needs a purely quadratic energy")

    def one(f):
        t = contraction_factor(state.energy.alpha_for(f.id), state.tau)
        new, plan = _quadratic_fiber(g, f.measure, state.signal[f.id], t)
        return f.id, new, plan, t

    out = fiber_map(one, state.field.fibers)
    result = StepResult(state.field.with_measures({fid: m for fid, m, _, _ in out}),
                        {fid: p for fid, _, p, _ in out}, {fid: t for fid, _, _, t in out})
    return result if detailed else result.field


def _golden(f, lo, hi, tol):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    t = 0.5 * (a + b)
    # values near a smooth minimum are flat to rounding at ~1e-8; polish by
    # bisecting the sign of a central-difference slope on a small bracket
    h = 1e-6
    slope = lambda s: f(min(s + h, hi)) - f(max(s - h, lo))
    a, b = max(lo, t - 1e-5), min(hi, t + 1e-5)
    if slope(a) < 0 < slope(b):
        while b - a > 1e-13:
            mid = 0.5 * (a + b)
            if slope(mid) < 0:
                a = mid
            else:
                b = mid
        t = 0.5 * (a + b)
    return t


def _compositions(total, parts):
    """All non-negative integer vectors of length ``parts`` summing to ``total``,
    in increasing lexicographic order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def grid_candidates(g, rho, h, mid_t=0.5):
    """Default candidate support: both supports plus plan midpoints at ``mid_t``."""
    plan = solve_ot(g, rho, h)
    pts = set(rho.points) | set(h.points)
    for k, l, _ in plan.entries():
        pts.add(g.geodesic_point(plan.source[k], plan.target[l], mid_t))
    return sorted(pts, key=point_key)


def _grid_fiber(g, rho, h, radial, tau, eps, points):
    points = sorted(set(points), key=point_key)
    if len(points) > MAX_GRID_POINTS:
        raise CapacityError(f"grid mode allows {MAX_GRID_POINTS} candidate points, got {len(points)}")
    total = round(1.0 / eps)
    if abs(total * eps - 1.0) > 1e-12:
        raise InvalidArgument("grid step must be 1/K for an integer K")
    count = math.comb(total + len(points) - 1, len(points) - 1)
    if count > GRID_CAP:
        raise CapacityError(f"grid has {count} candidates, cap is {GRID_CAP}")
    c_rho = cost_matrix(g, points, rho.points)
    c_h = cost_matrix(g, points, h.points)
    a_rho, a_h = np.asarray(rho.masses), np.asarray(h.masses)

    def w2_to(c, b, nu):
        keep = nu > 0
        if keep.sum() == 1 or b.size == 1:
            return math.sqrt(max(float((np.outer(nu[keep], b) * c[keep]).sum()), 0.0))
        return math.sqrt(max(solve_transportation(nu[keep], b, c[keep])[1], 0.0))

    def objective(nu):
        return radial(w2_to(c_h, a_h, nu)) + w2_to(c_rho, a_rho, nu) ** 2 / (2.0 * tau)

    best, best_val, ties = None, math.inf, 0
    for comp in _compositions(total, len(points)):
        nu = np.array(comp, dtype=float) / total
        val = objective(nu)
        if val < best_val - 1e-12:
            best, best_val, ties = nu, val, 1
        elif abs(val - best_val) < 1e-12:
            ties += 1
    start_val = radial(w2(g, rho, h))
    if best_val > start_val:
        return rho, False
    return DiscreteMeasure(zip(points, best)), ties > 1


def jko_step_numeric(state: SchemeState, g: MetricGraph, mode: str = "geodesic-search",
                     eps: float = 1 / 32, candidates: Mapping | None = None,
                     detailed: bool = False):
    """Minimize radial(W2(nu, h)) + W2(nu, rho)^2 / 2 tau per fiber.

    geodesic-search restricts nu to the displacement geodesic rho -> h and
    golden-section searches its parameter; grid-brute-force enumerates the
    mass simplex with step ``eps`` on a candidate support (at most 6 points).
    Both modes return rho itself whenever the found candidate is worse.
    """
    if mode not in ("geodesic-search", "grid-brute-force"):
        raise InvalidArgument(f"unknown mode {mode!r}")
    tau = state.tau

    def one(f):
        rho, h = f.measure, state.signal[f.id]
        radial = state.energy.radial(f.id)
        if rho == h:
            return f.id, rho, None, 0.0, False
        if mode == "grid-brute-force":
            pts = (candidates or {}).get(f.id) or grid_candidates(g, rho, h)
            new, multiple = _grid_fiber(g, rho, h, radial, tau, eps, pts)
            return f.id, new, None, None, multiple
        plan = solve_ot(g, rho, h)
        D = math.sqrt(max(plan.cost, 0.0))
        obj = lambda t: radial((1.0 - t) * D) + t * t * D * D / (2.0 * tau)
        t = _golden(obj, 0.0, 1.0, 1e-10)
        t = min((0.0, t, 1.0), key=lambda s: (obj(s), s))
        if obj(t) > obj(0.0) or t == 0.0:
            return f.id, rho, plan, 0.0, False
        return f.id, displacement(g, plan, t), plan, t, False

    out = fiber_map(one, state.field.fibers)
    result = StepResult(state.field.with_measures({o[0]: o[1] for o in out}),
                        {o[0]: o[2] for o in out}, {o[0]: o[3] for o in out},
                        {o[0]: o[4] for o in out})
    return result if detailed else result.field


def fiber_energy(spec, fid, rho, h, g) -> float:
    return float(spec.radial(fid)(w2(g, rho, h)))


def frozen_energy(field_: MemoryField, targets: Mapping, spec, g: MetricGraph) -> float:
    return float(sum(f.weight * fiber_energy(spec, f.id, f.measure, targets[f.id], g)
                     for f in field_))


def edi_residual(prev: MemoryField, nxt: MemoryField, targets: Mapping, spec,
                 tau: float, g: MetricGraph) -> float:
    """E_frozen(prev) - E_frozen(next) - W(next, prev)^2 / 2 tau; >= 0 for a valid step."""
    return (frozen_energy(prev, targets, spec, g) - frozen_energy(nxt, targets, spec, g)
            - field_w(g, nxt, prev) ** 2 / (2.0 * tau))


def objective(rho_next: DiscreteMeasure, rho: DiscreteMeasure, h: DiscreteMeasure,
              radial, tau: float, g: MetricGraph) -> float:
    return radial(w2(g, rho_next, h)) + w2(g, rho_next, rho) ** 2 / (2.0 * tau)


# ---------------------------------------------------------------------------
# signal rules

@dataclass(frozen=True)
class ConstantTarget:
    targets: Mapping[str, DiscreteMeasure]

    def __call__(self, field_, context=None, step=0):
        return dict(self.targets)


@dataclass(frozen=True)
class ContextTarget:
    """Context vector over Gamma = ``points`` holds the target masses (real parts)."""
    points: Sequence

    def __call__(self, field_, context, step=0):
        out = {}
        for fid in field_.ids:
            v = np.real(context[fid])
            if np.any(v < -1e-12):
                raise InvalidArgument("context does not encode a probability vector")
            out[fid] = DiscreteMeasure(zip(self.points, np.clip(v, 0.0, None) / v.sum()))
        return out


@dataclass
class FieldCoupling:
    """Signal of each fiber is the same fiber of another field (updated externally)."""
    other: MemoryField

    def __call__(self, field_, context=None, step=0):
        return {fid: self.other[fid] for fid in field_.ids}


@dataclass
class Trajectory:
    fields: list            # rho^0 .. rho^N
    signals: list           # h^0 .. h^{N-1}
    plans: list             # per step: fiber -> plan
    t: list

    def __len__(self):
        return len(self.signals)


def run_scheme(g: MetricGraph, field0: MemoryField, energy, tau: float, steps: int,
               signal_rule, contexts=None, mode: str = "closed-form", **numeric_opts) -> Trajectory:
    """Iterate the frozen-signal update ``steps`` times."""
    fields, signals, plans, ts = [field0], [], [], []
    rho = field0
    for n in range(steps):
        ctx = contexts(n, rho) if callable(contexts) else (contexts[n] if contexts else None)
        h = signal_rule(rho, ctx, n)
        state = SchemeState(n, tau, rho, h, energy, ctx)
        if mode == "closed-form":
            res = jko_step_quadratic(state, g, detailed=True)
        else:
            res = jko_step_numeric(state, g, mode=mode, detailed=True, **numeric_opts)
        rho = res.field
        fields.append(rho)
        signals.append(h)
        plans.append(res.plans)
        ts.append(res.t)
    return Trajectory(fields, signals, plans, ts)
