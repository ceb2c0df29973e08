"""Stochastic geodesic projection of quadratic trajectories onto observables.

Each quadratic step pushes plan mass from rho^n toward a leaf-supported
signal h^n, creating new support points on geodesics. The backward step
sends the mass of each new point back to the endpoints of the couples that
generated it: a fraction (1 - t) to the source and t to the target. Its
expectation, composed down to the observable set, yields the affine
recurrence rho_hat^{n+1} = (1 - t) rho_hat^n + t h^n.

Two representations are used. The location-level operators take support
sets of points, exactly as the expectation formula is written. The
trajectory projection tracks labeled nodes instead: a point created at step
n is a new node even when it lands on the location of an older node (mass
meeting at the hub of a star twice, for example). Without labels such a
landing would be read as mass that never moved, and the composed projection
would drift away from the recurrence.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import CapacityError, ConsistencyError, InvalidArgument
from .graph import GraphPoint, MetricGraph, VertexRef, point_key
from .measures import DiscreteMeasure, MemoryField, _same_point

MAX_SUPPORT = 1_000_000
EXACT_TOL = 1e-12


def fiber_rng(seed: int, fiber, step: int) -> np.random.Generator:
    """Independent stream per (master seed, fiber, step), schedule-free."""
    return np.random.default_rng([int(seed) & (2**64 - 1), zlib.crc32(str(fiber).encode()), int(step)])


@dataclass
class BackwardStep:
    """One backward step on abstract node labels.

    ``couples[y]`` lists (source label, target label, plan mass) for every
    couple generating the new node y; ``new_mass[y]`` is their total.
    """
    t: float
    couples: dict
    new_mass: dict

    def expectation(self, nu: Mapping) -> dict:
        out: dict = {}
        for y, mass in nu.items():
            if y not in self.couples:
                out[y] = out.get(y, 0.0) + mass
                continue
            total = self.new_mass[y]
            for src, tgt, pi in self.couples[y]:
                share = mass * pi / total
                out[src] = out.get(src, 0.0) + (1.0 - self.t) * share
                out[tgt] = out.get(tgt, 0.0) + self.t * share
        return out

    def sample(self, nu: Mapping, rng: np.random.Generator) -> dict:
        out: dict = {}
        for y in sorted(nu, key=_label_key):
            mass = nu[y]
            if y not in self.couples:
                out[y] = out.get(y, 0.0) + mass
                continue
            total = self.new_mass[y]
            dest, prob = [], []
            for src, tgt, pi in self.couples[y]:
                dest += [src, tgt]
                prob += [(1.0 - self.t) * pi / total, self.t * pi / total]
            k = rng.choice(len(dest), p=np.asarray(prob) / sum(prob))
            out[dest[k]] = out.get(dest[k], 0.0) + mass
        return out


def _label_key(y):
    if isinstance(y, tuple) and len(y) == 2 and isinstance(y[0], int):
        return (0, y[0], point_key(y[1]))
    return (1, 0, point_key(y))


# ---------------------------------------------------------------------------
# location-level operators

def support_chain(fields: Sequence[DiscreteMeasure], observable: Sequence[GraphPoint]) -> list:
    """S^0 = observable set, S^{n+1} = S^n united with supp(rho^{n+1})."""
    chain = [frozenset(observable)]
    for rho in fields[1:]:
        nxt = chain[-1] | frozenset(rho.points)
        if len(nxt) > MAX_SUPPORT:
            raise CapacityError(f"support chain exceeds {MAX_SUPPORT} points")
        chain.append(nxt)
    return chain


def _match(points, p):
    for q in points:
        if _same_point(p, q):
            return q
    return None


def generating_couples(g: MetricGraph, plan, t: float, old_support) -> dict:
    """Map each point of supp(rho^{n+1}) outside S^n to its generating couples.

    Entries are (k, l, pi_kl) with k, l indices into the plan's source and
    target atoms.
    """
    old = list(old_support)
    couples: dict = {}
    for k, l, mass in plan.entries():
        y = g.geodesic_point(plan.source[k], plan.target[l], t)
        if _match(old, y) is not None:
            continue
        key = _match(couples, y) or y
        couples.setdefault(key, []).append((k, l, mass))
    return couples


def location_step(g: MetricGraph, plan, t: float, old_support) -> BackwardStep:
    gen = generating_couples(g, plan, t, old_support)
    couples = {y: [(plan.source[k], plan.target[l], pi) for k, l, pi in cs] for y, cs in gen.items()}
    return BackwardStep(t, couples, {y: sum(c[2] for c in cs) for y, cs in couples.items()})


def _check_support(nu: DiscreteMeasure, allowed):
    for p in nu.points:
        if _match(allowed, p) is None:
            raise InvalidArgument(f"measure charges {p!r} outside the support chain")


def expectation_operator(g: MetricGraph, nu: DiscreteMeasure, plan, t: float,
                         old_support, rho_next: DiscreteMeasure) -> DiscreteMeasure:
    """Expected backward projection of ``nu`` (on S^{n+1}) onto S^n."""
    step = location_step(g, plan, t, old_support)
    allowed = list(old_support) + list(step.couples)
    _check_support(nu, allowed)
    _check_step_mass(step, rho_next)
    nu_map = {(_match(allowed, p)): m for p, m in nu}
    return DiscreteMeasure(step.expectation(nu_map).items())


def sample_backward(g: MetricGraph, nu: DiscreteMeasure, plan, t: float, old_support,
                    rho_next: DiscreteMeasure, seed: int = 0, fiber="x", step_index: int = 0):
    step = location_step(g, plan, t, old_support)
    allowed = list(old_support) + list(step.couples)
    _check_support(nu, allowed)
    _check_step_mass(step, rho_next)
    nu_map = {(_match(allowed, p)): m for p, m in nu}
    return DiscreteMeasure(step.sample(nu_map, fiber_rng(seed, fiber, step_index)).items())


def _check_step_mass(step: BackwardStep, rho_next: DiscreteMeasure):
    for y, total in step.new_mass.items():
        if abs(rho_next.mass_of(y) - total) > 1e-9:
            raise InvalidArgument("plan is inconsistent with rho^{n+1}")


def empirical_backward_mean(g, nu, plan, t, old_support, rho_next, draws: int, seed: int = 0):
    """Average of ``draws`` independent backward samples (vectorized per new point)."""
    step = location_step(g, plan, t, old_support)
    allowed = list(old_support) + list(step.couples)
    _check_support(nu, allowed)
    rng = fiber_rng(seed, "mc", 0)
    out: dict = {}
    for p, mass in nu:
        y = _match(allowed, p)
        if y not in step.couples:
            out[y] = out.get(y, 0.0) + mass
            continue
        dest, prob = [], []
        for src, tgt, pi in step.couples[y]:
            dest += [src, tgt]
            prob += [(1.0 - t) * pi, t * pi]
        prob = np.asarray(prob) / sum(prob)
        counts = np.bincount(rng.choice(len(dest), size=draws, p=prob), minlength=len(dest))
        for d, c in zip(dest, counts):
            out[d] = out.get(d, 0.0) + mass * c / draws
    return DiscreteMeasure(out.items())


# ---------------------------------------------------------------------------
# trajectory projection on labeled nodes

class LabeledChain:
    """Backward steps of one fiber with nodes labeled (birth step, location)."""

    def __init__(self, g: MetricGraph, rho0: DiscreteMeasure, observable: Sequence[GraphPoint]):
        self.g = g
        self.observable = [g.canonical(p) for p in observable]
        if not rho0.supported_on(self.observable):
            raise InvalidArgument("initial measure must live on the observable set")
        self.leaf_label = {p: (0, p) for p in self.observable}
        self.state = {self.leaf_label[p]: m for p, m in rho0}
        self.steps: list[BackwardStep] = []
        self.n_nodes = len(self.observable)

    def locations(self) -> DiscreteMeasure:
        return DiscreteMeasure(((lab[1], m) for lab, m in self.state.items()))

    def advance(self, plan, t: float, h: DiscreteMeasure, rho_next: DiscreteMeasure | None = None):
        """Follow one quadratic step whose plan goes from the current state to h.

        When the step's output ``rho_next`` is given, new nodes take the
        locations of its (merged) atoms.
        """
        if not h.supported_on(self.observable):
            raise InvalidArgument("signal must live on the observable set")
        n = len(self.steps) + 1
        # group labels by atom of the merged location measure, as the plan sees it
        atoms = self.locations().points
        by_location: dict = {}
        for lab, m in self.state.items():
            by_location.setdefault(_match(atoms, lab[1]), []).append((lab, m))
        row_mass = plan.pi.sum(axis=1)
        nxt: dict = {}
        couples: dict = {}
        for k, l, pi in plan.entries():
            src_point, tgt_point = plan.source[k], plan.target[l]
            labels = by_location.get(src_point)
            if labels is None:
                near = _match(by_location, src_point)
                labels = by_location[near] if near is not None else None
            if labels is None:
                raise InvalidArgument(f"plan source {src_point!r} carries no labeled mass")
            tgt = self.leaf_label[tgt_point]
            if src_point == tgt_point:
                for lab, m in labels:
                    nxt[lab] = nxt.get(lab, 0.0) + pi * m / row_mass[k]
                continue
            y = self.g.geodesic_point(src_point, tgt_point, t)
            if rho_next is not None:
                y = _match(rho_next.points, y) or y
            existing = _match([key[1] for key in couples], y)
            new_label = (n, existing if existing is not None else y)
            for lab, m in labels:
                share = pi * m / row_mass[k]
                couples.setdefault(new_label, []).append((lab, tgt, share))
                nxt[new_label] = nxt.get(new_label, 0.0) + share
        self.n_nodes += len(couples)
        if self.n_nodes > MAX_SUPPORT:
            raise CapacityError(f"support chain exceeds {MAX_SUPPORT} points")
        self.state = nxt
        self.steps.append(BackwardStep(t, couples, {y: sum(c[2] for c in cs) for y, cs in couples.items()}))

    def project(self, nu: Mapping | None = None, upto: int | None = None) -> dict:
        """Compose expectation operators from step ``upto`` down to the leaves."""
        nu = dict(self.state if nu is None else nu)
        upto = len(self.steps) if upto is None else upto
        for step in reversed(self.steps[:upto]):
            nu = step.expectation(nu)
        return nu

    def sample_projection(self, rng: np.random.Generator, nu: Mapping | None = None) -> dict:
        nu = dict(self.state if nu is None else nu)
        for step in reversed(self.steps):
            nu = step.sample(nu, rng)
        return nu

    def observable_vector(self, nu: Mapping) -> np.ndarray:
        out = np.zeros(len(self.observable))
        index = {self.leaf_label[p]: i for i, p in enumerate(self.observable)}
        for lab, m in nu.items():
            if lab not in index:
                raise ConsistencyError(f"projection left mass on internal node {lab!r}")
            out[index[lab]] += m
        return out


@dataclass
class Projection:
    observable: list                  # leaf points (the columns)
    recurrence: dict                  # fiber -> (N+1, |Y_M|) array from the affine recurrence
    composed: dict                    # fiber -> same, from composed expectation operators
    max_gap: float
    plan_dependent: bool

    def measures(self, fid) -> list:
        return [DiscreteMeasure(zip(self.observable, row)) for row in self.recurrence[fid]]


def project_trajectory(g: MetricGraph, traj, observable: Sequence[GraphPoint] | None = None,
                       t: float | None = None, check: bool = True) -> Projection:
    """Project a quadratic trajectory fiber by fiber, both fast and slow.

    ``traj`` carries fields rho^0..rho^N, signals h^0..h^{N-1}, the plans used
    by each step and the per-fiber contraction factors.
    """
    observable = [g.canonical(p) for p in (observable or [VertexRef(v) for v in g.leaves()])]
    field0: MemoryField = traj.fields[0]
    recurrence, composed = {}, {}
    plan_dependent = False
    worst = 0.0
    for fib in field0:
        fid = fib.id
        chain = LabeledChain(g, fib.measure, observable)
        fast = [chain.observable_vector(chain.state)]
        slow = [fast[0].copy()]
        for n in range(len(traj.signals)):
            h = traj.signals[n][fid]
            plan = traj.plans[n][fid]
            tn = traj.t[n][fid] if t is None else t
            plan_dependent |= not plan.unique
            chain.advance(plan, tn, h, traj.fields[n + 1][fid])
            if check:
                drift = chain.locations().max_gap(traj.fields[n + 1][fid])
                if drift > 1e-9:
                    raise ConsistencyError(f"labeled state drifted from rho^{n + 1} by {drift}")
            fast.append((1.0 - tn) * fast[-1] + tn * h.vector(observable))
            slow.append(chain.observable_vector(chain.project()))
        fast, slow = np.array(fast), np.array(slow)
        gap = float(np.abs(fast - slow).max())
        worst = max(worst, gap)
        if check and gap > EXACT_TOL:
            raise ConsistencyError(f"fiber {fid}: composed projection differs from recurrence by {gap}")
        recurrence[fid], composed[fid] = fast, slow
    return Projection(observable, recurrence, composed, worst, plan_dependent)


def stochastic_projection(g: MetricGraph, traj, seed: int, observable=None) -> dict:
    """One random backward draw of the final state of every fiber."""
    observable = [g.canonical(p) for p in (observable or [VertexRef(v) for v in g.leaves()])]
    out = {}
    for fib in traj.fields[0]:
        chain = LabeledChain(g, fib.measure, observable)
        for n in range(len(traj.signals)):
            chain.advance(traj.plans[n][fib.id], traj.t[n][fib.id], traj.signals[n][fib.id],
                          traj.fields[n + 1][fib.id])
        rng = fiber_rng(seed, fib.id, len(traj.signals))
        out[fib.id] = chain.observable_vector(chain.sample_projection(rng))
    return out


# ---------------------------------------------------------------------------
# observable dynamics in closed form

def _as_vectors(measures, points):
    return [m.vector(points) for m in measures]


def observable_closed_form(rho0: DiscreteMeasure, hs: Sequence[DiscreteMeasure], t: float,
                           n: int) -> DiscreteMeasure:
    """(1-t)^n rho0 + t sum_{k<n} (1-t)^{n-1-k} h^k."""
    if n > len(hs):
        raise InvalidArgument("need at least n signals")
    points = sorted(set(rho0.points).union(*[set(h.points) for h in hs[:n]]), key=point_key)
    vec = (1.0 - t) ** n * rho0.vector(points)
    for k, h in enumerate(hs[:n]):
        vec = vec + t * (1.0 - t) ** (n - 1 - k) * h.vector(points)
    return DiscreteMeasure(zip(points, vec))


def recurrence(rho0: DiscreteMeasure, hs: Sequence[DiscreteMeasure], t: float) -> list:
    """All iterates of rho^{n+1} = (1-t) rho^n + t h^n, as measures."""
    points = sorted(set(rho0.points).union(*[set(h.points) for h in hs]), key=point_key)
    vec = rho0.vector(points)
    out = [DiscreteMeasure(zip(points, vec))]
    for h in hs:
        vec = (1.0 - t) * vec + t * h.vector(points)
        out.append(DiscreteMeasure(zip(points, vec)))
    return out


def ode_limit(rho0: DiscreteMeasure, pieces: Sequence, alpha: float, t: float) -> DiscreteMeasure:
    """Exact solution of d/dt rho = alpha (h - rho) for piecewise-constant h.

    ``pieces`` is a list of (start, end, h) covering [0, t].
    """
    points = sorted(set(rho0.points).union(*[set(p[2].points) for p in pieces]), key=point_key)
    return DiscreteMeasure(zip(points, ode_vector(rho0.vector(points),
                                                  [(a, b, h.vector(points)) for a, b, h in pieces],
                                                  alpha, t)))


def ode_vector(rho0, pieces, alpha, t):
    vec = math.exp(-alpha * t) * np.asarray(rho0, dtype=float)
    covered = 0.0
    for a, b, h in pieces:
        if a >= t:
            continue
        b = min(b, t)
        if abs(a - covered) > 1e-12:
            raise InvalidArgument("signal pieces must tile [0, t] in order")
        vec = vec + (math.exp(-alpha * (t - b)) - math.exp(-alpha * (t - a))) * np.asarray(h)
        covered = b
    if abs(covered - t) > 1e-12:
        raise InvalidArgument("signal pieces do not reach t")
    return vec


# ---------------------------------------------------------------------------
# consensus between two cross-coupled fields

@dataclass
class ConsensusRun:
    gaps: list
    rate: float               # fitted continuous rate of log gap
    discrete_factor: float    # 1 - 2 t
    max_recurrence_error: float
    traj_a: object = None
    traj_b: object = None


def consensus_gap(g: MetricGraph, field_a: MemoryField, field_b: MemoryField, alpha: float,
                  tau: float, steps: int, observable=None) -> ConsensusRun:
    """Run two quadratic fields whose signal is the other's observable state."""
    from .scheme import PurelyQuadratic, SchemeState, Trajectory, contraction_factor, jko_step_quadratic
    if not field_a.same_layout(field_b):
        raise InvalidArgument("consensus fields must share fibers and weights")
    observable = [g.canonical(p) for p in (observable or [VertexRef(v) for v in g.leaves()])]
    energy = PurelyQuadratic(alpha)
    t = contraction_factor(alpha, tau)
    chains = {}
    obs = {}
    for name, fld in (("a", field_a), ("b", field_b)):
        for fib in fld:
            if not fib.measure.supported_on(observable):
                raise InvalidArgument("consensus fields must start on the observable set")
        obs[name] = {f.id: f.measure.vector(observable) for f in fld}
    trajs = {"a": Trajectory([field_a], [], [], []), "b": Trajectory([field_b], [], [], [])}

    def gap():
        return sum(f.weight * float(np.abs(obs["a"][f.id] - obs["b"][f.id]).sum()) for f in field_a)

    gaps = [gap()]
    err = 0.0
    for n in range(steps):
        signals = {
            "a": {fid: DiscreteMeasure(zip(observable, v)) for fid, v in obs["b"].items()},
            "b": {fid: DiscreteMeasure(zip(observable, v)) for fid, v in obs["a"].items()},
        }
        new_obs = {}
        for name in ("a", "b"):
            tr = trajs[name]
            res = jko_step_quadratic(SchemeState(n, tau, tr.fields[-1], signals[name], energy), g,
                                     detailed=True)
            tr.fields.append(res.field)
            tr.signals.append(signals[name])
            tr.plans.append(res.plans)
            tr.t.append(res.t)
            new_obs[name] = {fid: (1 - t) * obs[name][fid] + t * signals[name][fid].vector(observable)
                             for fid in obs[name]}
        obs = new_obs
        gaps.append(gap())
        if gaps[-2] > 0:
            err = max(err, abs(gaps[-1] - (1 - 2 * t) * gaps[-2]))
    rate = fit_rate(gaps, tau)
    return ConsensusRun(gaps, rate, 1 - 2 * t, err, trajs["a"], trajs["b"])


def fit_rate(values, tau: float) -> float:
    """Least-squares slope of log(values) against time n tau (zeros skipped)."""
    pts = [(n * tau, math.log(v)) for n, v in enumerate(values) if v > 1e-300]
    if len(pts) < 2:
        return 0.0
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])
