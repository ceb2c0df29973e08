"""Named, seeded scenarios shared by the CLI, the scripts and the tests.

Each scenario maps run parameters to a dict of tables and a list of JSON
verdicts {check, step, lhs, rhs, pass}; a verdict passes when lhs <= rhs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgument
from .graph import VertexRef, point_label, star_tree
from .io import Table
from .measures import DiscreteMeasure, MemoryField
from .scheme import (ConstantTarget, Isotropic, PurelyQuadratic, SchemeState, contraction_factor,
                     edi_residual, jko_step_numeric, jko_step_quadratic, run_scheme)
from .transport import field_w, solve_ot, displacement, w2


@dataclass
class RunParams:
    tau: float | None = None
    steps: int | None = None
    horizon: float | None = None
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def resolved(self, tau, steps):
        tau = self.tau if self.tau is not None else tau
        if not (isinstance(tau, (int, float)) and tau > 0):
            raise InvalidArgument("tau must be positive")
        if self.horizon is not None:
            n = int(round(self.horizon / tau))
            if n < 0 or abs(n * tau - self.horizon) > 1e-9 * max(1.0, self.horizon):
                raise InvalidArgument("horizon must be a non-negative multiple of tau")
            return float(tau), n
        steps = self.steps if self.steps is not None else steps
        if not isinstance(steps, int) or steps < 0:
            raise InvalidArgument("steps must be a non-negative integer")
        return float(tau), steps

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, stream])


def verdict(check, lhs, rhs, step=None) -> dict:
    lhs, rhs = float(lhs), float(rhs)
    return {"check": check, "step": step, "lhs": lhs, "rhs": rhs, "pass": bool(lhs <= rhs)}


def field_table(traj_fields) -> Table:
    t = Table(["step", "fiber", "point", "mass"])
    for n, fld in enumerate(traj_fields):
        for f in fld:
            for p, m in f.measure:
                t.add(n, f.id, point_label(p), m)
    return t


def _leaves(M):
    return [VertexRef(i + 1) for i in range(M)]


def _random_leaf_measure(rng, M, floor=0.05):
    v = rng.dirichlet(np.ones(M))
    v = (v + floor) / (1 + M * floor)
    return DiscreteMeasure(zip(_leaves(M), v))


def edi_verdicts(g, traj, energy, tau, name="edi") -> list:
    worst = (None, math.inf)
    for n in range(len(traj.signals)):
        r = edi_residual(traj.fields[n], traj.fields[n + 1], traj.signals[n], energy, tau, g)
        if r < worst[1]:
            worst = (n, r)
    if worst[0] is None:
        return [verdict(name, 0.0, 1e-9)]
    return [verdict(name, -worst[1], 1e-9, worst[0])]


# ---------------------------------------------------------------------------

def star_transport(p: RunParams):
    _, steps = p.resolved(1.0, 4)
    g = star_tree([1.0, 1.0, 1.0])
    src = DiscreteMeasure(zip(_leaves(3), [1 / 3, 1 / 3, 1 / 3]))
    tgt = DiscreteMeasure(zip(_leaves(3), [2 / 3, 1 / 6, 1 / 6]))
    plan = solve_ot(g, src, tgt)
    plan_t = Table(["source", "target", "mass"])
    for i, j, m in plan.entries(1e-15):
        plan_t.add(point_label(plan.source[i]), point_label(plan.target[j]), m)
    geo = Table(["t", "point", "mass"])
    n = max(steps, 1)
    for k in range(n + 1):
        for q, m in displacement(g, plan, k / n):
            geo.add(k / n, point_label(q), m)
    v = [verdict("cost", abs(plan.cost - 4 / 3), 1e-12), verdict("unique", 0 if plan.unique else 1, 0)]
    return {"plan": plan_t, "geodesic": geo}, v


def quadratic_contraction(p: RunParams):
    tau, steps = p.resolved(1.0, 5)
    alpha = float(p.extra.get("alpha", 1.0))
    g = star_tree([1.0, 1.0, 1.0])
    field0 = MemoryField([("x", 1.0, DiscreteMeasure(zip(_leaves(3), [1 / 3, 1 / 3, 1 / 3])))])
    target = {"x": DiscreteMeasure(zip(_leaves(3), [2 / 3, 1 / 6, 1 / 6]))}
    energy = PurelyQuadratic(alpha)
    traj = run_scheme(g, field0, energy, tau, steps, ConstantTarget(target))
    t = contraction_factor(alpha, tau)
    rows = Table(["step", "w_step", "w_to_target", "ratio", "t_tau"])
    worst = 0.0
    for n in range(steps):
        a = w2(g, traj.fields[n]["x"], target["x"])
        b = w2(g, traj.fields[n + 1]["x"], traj.fields[n]["x"])
        ratio = b / a if a > 0 else t
        worst = max(worst, abs(ratio - t))
        rows.add(n, b, a, ratio, t)
    v = [verdict("contraction", worst, 1e-9)] + edi_verdicts(g, traj, energy, tau)
    return {"contraction": rows, "trajectory": field_table(traj.fields)}, v


def grid_brute_force(p: RunParams):
    """One quadratic step by mass-grid enumeration vs the closed form.

    ``grid_k`` sets the grid step 1/K; the enumeration size grows like K^(points-1)
    and large K is refused with a capacity error.
    """
    tau, _ = p.resolved(1.0, 1)
    k = p.extra.get("grid_k", 32)
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise InvalidArgument("grid_k must be a positive integer")
    g = star_tree([1.0, 1.0, 1.0])
    rho = DiscreteMeasure(zip(_leaves(3), [6 / 16, 6 / 16, 4 / 16]))
    h = DiscreteMeasure(zip(_leaves(3), [10 / 16, 2 / 16, 4 / 16]))
    state = SchemeState(0, tau, MemoryField([("x", 1.0, rho)]), {"x": h}, PurelyQuadratic(1.0))
    res = jko_step_numeric(state, g, mode="grid-brute-force", eps=1 / k, detailed=True)
    exact = jko_step_quadratic(state, g)["x"]
    gap = w2(g, res.field["x"], exact)
    tab = Table(["grid_k", "w_to_closed_form", "tie"])
    tab.add(k, gap, bool(res.multiple["x"]))
    # three grid cells of slack: rounding on each of the moving masses
    return {"grid": tab}, [verdict("grid-vs-closed-form", gap, 3 / k)]


def ema_basic(p: RunParams):
    from .projector import observable_closed_form, recurrence
    tau, steps = p.resolved(1.0, 10)
    alpha = float(p.extra.get("alpha", 1.0))
    t = contraction_factor(alpha, tau)
    rng = p.rng(1)
    rho0 = DiscreteMeasure(zip(_leaves(3), [1 / 3, 1 / 3, 1 / 3]))
    hs = [_random_leaf_measure(rng, 3) for _ in range(steps)]
    rec = recurrence(rho0, hs, t)
    tab = Table(["step", "leaf1", "leaf2", "leaf3"])
    err = 0.0
    for n, m in enumerate(rec):
        vec = m.vector(_leaves(3))
        tab.add(n, *vec)
        err = max(err, float(np.abs(observable_closed_form(rho0, hs, t, n).vector(_leaves(3)) - vec).max()))
    return {"observable": tab}, [verdict("closed-form", err, 1e-12)]


def _random_quadratic_trajectory(p: RunParams, tau, steps, alpha=1.0, fibers=2):
    rng = p.rng(2)
    g = star_tree([1.0, 1.0, 1.0])
    field0 = MemoryField((f"f{k}", 1.0 / fibers, _random_leaf_measure(rng, 3)) for k in range(fibers))
    hs = [{f"f{k}": _random_leaf_measure(rng, 3) for k in range(fibers)} for _ in range(steps)]
    energy = PurelyQuadratic(alpha)
    traj = run_scheme(g, field0, energy, tau, steps, lambda r, c, n: hs[n])
    return g, energy, traj


def projector_ema(p: RunParams):
    from .projector import LabeledChain, fiber_rng, project_trajectory
    tau, steps = p.resolved(1.0, 20)
    draws = int(p.extra.get("draws", 2000))
    g, energy, traj = _random_quadratic_trajectory(p, tau, steps)
    proj = project_trajectory(g, traj, check=False)
    obs = Table(["step", "fiber", "route", "leaf1", "leaf2", "leaf3"])
    for fid in traj.fields[0].ids:
        for n in range(steps + 1):
            obs.add(n, fid, "recurrence", *proj.recurrence[fid][n])
            obs.add(n, fid, "composed", *proj.composed[fid][n])
    mc = Table(["fiber", "leaf", "expected", "empirical"])
    mc_err = 0.0
    leaves = _leaves(3)
    for f in traj.fields[0]:
        chain = LabeledChain(g, f.measure, leaves)
        for n in range(steps):
            chain.advance(traj.plans[n][f.id], traj.t[n][f.id], traj.signals[n][f.id],
                          traj.fields[n + 1][f.id])
        acc = np.zeros(3)
        for d in range(draws):
            acc += chain.observable_vector(chain.sample_projection(fiber_rng(p.seed, f.id, d)))
        emp = acc / max(draws, 1)
        exp = proj.composed[f.id][-1]
        for k in range(3):
            mc.add(f.id, point_label(leaves[k]), exp[k], emp[k])
        mc_err = max(mc_err, float(np.abs(emp - exp).max()))
    tol = 5.0 / math.sqrt(max(draws, 1))
    v = [verdict("projector-exact", proj.max_gap, 1e-12), verdict("monte-carlo", mc_err, tol)]
    v += edi_verdicts(g, traj, energy, tau)
    return {"observable": obs, "monte_carlo": mc, "trajectory": field_table(traj.fields)}, v


def mirror_equivalence(p: RunParams):
    from .mirror import MirrorProblem, linear_loss, min_admissible_t, quadratic_loss, run_equivalence
    _, steps = p.resolved(1.0, 100)
    eta = float(p.extra.get("eta", 0.5))
    loss = p.extra.get("loss", "linear")
    rng = p.rng(3)
    M, N = 3, 2
    w0 = np.full((M, N), 1.0 / M)
    if loss == "linear":
        grad = linear_loss(rng.uniform(-0.9, 0.9, size=(M, N)))
    elif loss == "quadratic":
        grad = quadratic_loss(rng.dirichlet(np.ones(M), size=N).T)
    else:
        raise InvalidArgument(f"unknown loss {loss!r}")
    c_max = 1.0
    t = float(p.extra.get("t_tau", 0.5 * (1.0 + min_admissible_t(eta, c_max))))
    run = run_equivalence(MirrorProblem(grad, eta, c_max, w0), steps, t)
    tab = Table(["step", "route", *[f"w{i}{j}" for i in range(M) for j in range(N)]])
    for n in range(steps + 1):
        tab.add(n, "mirror", *run.w_md[n].ravel())
        tab.add(n, "hwg", *run.w_hwg[n].ravel())
    sig_neg = max((-float(h.min()) for h in run.signals), default=0.0)
    sig_sum = max((float(np.abs(h.sum(axis=0) - 1).max()) for h in run.signals), default=0.0)
    v = [verdict("mirror-equivalence", run.deviation, 1e-12),
         verdict("signal-nonnegative", sig_neg, 0.0),
         verdict("signal-columns", sig_sum, 1e-12)]
    return {"weights": tab}, v


def consensus(p: RunParams):
    from .projector import consensus_gap
    tau, steps = p.resolved(1 / 16, 40)
    alpha = float(p.extra.get("alpha", 1.0))
    rng = p.rng(4)
    g = star_tree([1.0, 1.0, 1.0])
    fa = MemoryField((f"f{k}", 0.5, _random_leaf_measure(rng, 3)) for k in range(2))
    fb = MemoryField((f"f{k}", 0.5, _random_leaf_measure(rng, 3)) for k in range(2))
    run = consensus_gap(g, fa, fb, alpha, tau, steps)
    tab = Table(["step", "time", "gap"])
    for n, gval in enumerate(run.gaps):
        tab.add(n, n * tau, gval)
    v = [verdict("consensus-recurrence", run.max_recurrence_error, 1e-12)]
    if alpha * tau <= 1 / 16:
        v.append(verdict("consensus-rate", abs(run.rate + 2 * alpha) / (2 * alpha), 0.05))
    return {"gap": tab}, v


def _spectral(factory, default_steps, default_lr):
    def scenario(p: RunParams):
        from . import spectral as sp
        _, steps = p.resolved(1.0, default_steps)
        lr = float(p.extra.get("lr", default_lr))
        net, psi, phi, free = factory()
        run = sp.run_plasticity(net, psi, phi, steps, lr, free=free, record_every=max(1, steps // 50))
        M, N = net.shape
        tab = Table(["step", "energy"] + [f"{k}{i}{j}" for k in ("p", "r", "theta")
                                          for i in range(M) for j in range(N)])
        tab.add(0, run.energies[0], *net.p.ravel(), *net.r.ravel(), *net.theta.ravel())
        fin = run.net
        tab.add(len(run.energies) - 1, run.energies[-1], *fin.p.ravel(), *fin.r.ravel(),
                *fin.theta.ravel())
        rises = max((b - a for a, b in zip(run.energies, run.energies[1:])), default=0.0)
        v = [verdict("energy-monotone", rises, 0.0), verdict("stall", int(run.stalled), 0)]
        v += _spectral_verdicts(factory.__name__, sp, fin, psi, phi)
        return {"plasticity": tab}, v
    return scenario


def _spectral_verdicts(name, sp, net, psi, phi):
    if name == "pruning_scenario":
        return [verdict("pruned", float(net.p[2, 0]), 1e-12)]
    if name == "selectivity_scenario":
        return [verdict("selectivity", float(net.p[1:, 0].max()), 1e-12)]
    if name == "amplitude_pruning_scenario":
        return [verdict("amplitude-pruned", float(net.r[1, 0]), 0.0)]
    out = []
    for j in range(net.shape[1]):
        rep = sp.pressure_report(net, psi, phi, j)
        out.append(verdict("pressure-equalization", rep.residual, 1e-6))
        out.append(verdict("alignment", -float(sp.alignment_cosines(net, psi, phi, j).min()), 0.0))
        res = max(abs(sp.hebbian_equilibrium_residual(net, psi, phi, i, j))
                  for i in range(net.shape[0]) if net.p[i, j] > 0 and net.r[i, j] > 0)
        out.append(verdict("hebbian-equilibrium", res, 1e-9))
    return out


def sleep_mode_limit(p: RunParams):
    from . import limit_lab as ll
    tau, steps = p.resolved(1 / 16, 16)
    sc = ll.star_sleep_scenario(declared_L=p.extra.get("declared_L"))
    rep = ll.run_sleep_mode(sc, tau, steps * tau)
    tab = Table(["step", "energy", "frozen_next", "w_step", "context_step", "action", "moment"])
    act = rep.action
    for n in range(steps + 1):
        last = n == steps
        tab.add(n, rep.energies[n], "" if last else rep.frozen_next[n], "" if last else rep.w_steps[n],
                "" if last else rep.context_steps[n], act[n], rep.moments[n])
    v = [ll.freezing_error_check(rep)[1].to_json(), ll.perturbed_edi_check(rep)[1].to_json(),
         ll.sleep_mode_check(rep, sc.L_C).to_json()]
    if sc.alpha * rep.L ** 2 * tau <= 0.5:
        step_v, cum_v, _ = ll.groenwall_check(rep)
        v += [step_v.to_json(), cum_v.to_json()]
    return {"limit": tab, "trajectory": field_table(rep.fields)}, v


def spectral_cases():
    """Parametric energies on atom positions used by the spectral relation check."""
    from . import limit_lab as ll
    one = ll.quadratic_energy(1.0, [0.7])
    iso = ll.quadratic_energy(2.0, [0.5, -0.25])
    flat_E = lambda x: 0.5 * float((x[0] - 1.0) ** 2)
    flat_G = lambda x: np.array([x[0] - 1.0, 0.0])
    pair = ll.pair_energy()
    return [("single-atom", one, [0.0], True), ("isotropic", iso, [0.0, 0.0], True),
            ("flat", (flat_E, flat_G), [0.0, 0.3], True),
            ("pair", pair, [0.0, 0.0, 0.0, 0.0], False)]


def fixed_point_spectral(p: RunParams):
    from . import limit_lab as ll
    tau, _ = p.resolved(1.0, 0)
    tab = Table(["case", "index", "mu", "lam", "exp_minus_tau_mu"])
    v = []
    for name, (E, G), x0, quad in spectral_cases():
        chk = ll.spectral_stability_check(E, np.array(x0, dtype=float), tau, grad=G, quadratic=quad)
        for i, (mu, lam) in enumerate(zip(chk.mu, chk.lam)):
            tab.add(name, i, mu, lam, math.exp(-tau * mu))
        v.append(verdict(f"spectral-{name}", chk.max_error, 1e-6 if quad else 1e-4))
        v.append(verdict(f"fixed-point-{name}", max(chk.tau_invariance.values()), 1e-9))
    return {"spectrum": tab}, v


def numeric_isotropic(p: RunParams):
    tau, steps = p.resolved(0.25, 8)
    g = star_tree([1.0, 1.0, 1.0])
    field0 = MemoryField([("x", 1.0, DiscreteMeasure(zip(_leaves(3), [0.6, 0.3, 0.1])))])
    target = {"x": DiscreteMeasure(zip(_leaves(3), [0.1, 0.2, 0.7]))}
    energy = Isotropic(lambda r: r)
    traj = run_scheme(g, field0, energy, tau, steps, ConstantTarget(target), mode="geodesic-search")
    tab = Table(["step", "distance_to_target", "t", "t_analytic"])
    worst = 0.0
    for n in range(steps):
        D = w2(g, traj.fields[n]["x"], target["x"])
        t_star = min(1.0, tau / D) if D > 0 else 0.0
        tn = traj.t[n]["x"]
        worst = max(worst, abs(tn - t_star))
        tab.add(n, D, tn, t_star)
    v = [verdict("geodesic-parameter", worst, 1e-7)] + edi_verdicts(g, traj, energy, tau)
    return {"steps": tab, "trajectory": field_table(traj.fields)}, v


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    fn: Callable


def _registry():
    from .spectral import pruning_scenario, selectivity_scenario, synchronized_scenario, \
        amplitude_pruning_scenario
    items = [
        ("star-transport", "forced transport plan and displacement on the unit 3-star", star_transport),
        ("quadratic-contraction", "closed-form quadratic steps with the state-independent factor",
         quadratic_contraction),
        ("grid-brute-force", "one quadratic step by mass-grid enumeration vs the closed form",
         grid_brute_force),
        ("ema-basic", "observable recurrence against its closed form", ema_basic),
        ("projector-ema", "labeled projector vs the affine recurrence, with Monte Carlo", projector_ema),
        ("mirror-equivalence", "exponentiated gradient reproduced by the observable scheme",
         mirror_equivalence),
        ("consensus", "two cross-coupled quadratic fields closing their gap", consensus),
        ("spectral-pruning", "anti-aligned synapse loses its structural weight",
         _spectral(pruning_scenario, 2000, 0.1)),
        ("spectral-amplitude-pruning", "anti-aligned amplitude clamps to zero",
         _spectral(amplitude_pruning_scenario, 2000, 0.1)),
        ("spectral-selectivity", "one synapse takes all structural weight",
         _spectral(selectivity_scenario, 2000, 0.1)),
        ("spectral-alignment", "synchronized group converges to an aligned interior equilibrium",
         _spectral(synchronized_scenario, 20000, 0.2)),
        ("sleep-mode-limit", "context-coupled quadratic energy with the stability checks",
         sleep_mode_limit),
        ("fixed-point-spectral", "Hessian spectrum vs linearized time-tau flow at fixed points",
         fixed_point_spectral),
        ("numeric-isotropic", "linear-profile energy stepped by geodesic search", numeric_isotropic),
    ]
    return {name: Scenario(name, desc, fn) for name, desc, fn in items}


SCENARIOS = _registry()


def run_scenario(name: str, params: RunParams | None = None):
    if name not in SCENARIOS:
        raise InvalidArgument(f"unknown scenario {name!r}")
    return SCENARIOS[name].fn(params or RunParams())


# ---------------------------------------------------------------------------
# verifiers behind `hwg verify <check>`

def random_star_measure(rng, g, k):
    """k atoms at random vertices or edge points of ``g``."""
    from .graph import EdgePoint
    pts = []
    for _ in range(k):
        if rng.random() < 0.5:
            pts.append(VertexRef(int(rng.integers(g.n_vertices))))
        else:
            e = int(rng.integers(len(g.edges)))
            pts.append(EdgePoint(e, float(rng.uniform(0.05, 0.95)) * g.edges[e][2]))
    return DiscreteMeasure(zip(pts, rng.dirichlet(np.ones(k))), g)


def random_edi_steps(n: int, seed: int) -> list:
    """EDI residual of n random single-step problems (quadratic closed form and
    geodesic search on a linear profile, alternating)."""
    from .scheme import SchemeState, jko_step_numeric, jko_step_quadratic
    rng = np.random.default_rng([seed, 5])
    out = []
    for k in range(n):
        g = star_tree(list(rng.uniform(0.5, 2.0, size=int(rng.integers(2, 5)))))
        f0 = MemoryField([("x", 1.0, random_star_measure(rng, g, int(rng.integers(1, 4))))])
        h = {"x": random_star_measure(rng, g, int(rng.integers(1, 4)))}
        tau = float(rng.uniform(0.05, 2.0))
        if k % 2 == 0:
            energy = PurelyQuadratic(float(rng.uniform(0.2, 5.0)))
            nxt = jko_step_quadratic(SchemeState(0, tau, f0, h, energy), g)
        else:
            energy = Isotropic(lambda r: r)
            nxt = jko_step_numeric(SchemeState(0, tau, f0, h, energy), g)
        out.append(edi_residual(f0, nxt, h, energy, tau, g))
    return out


def verify_edi(seed=0, **_):
    v = []
    for name in ("quadratic-contraction", "projector-ema", "numeric-isotropic"):
        _, vs = run_scenario(name, RunParams(seed=seed))
        v += [dict(x, check=f"{name}:{x['check']}") for x in vs if x["check"] == "edi"]
    _, vs = run_scenario("sleep-mode-limit", RunParams(seed=seed))
    v += [x for x in vs if x["check"] == "perturbed-edi"]
    res = random_edi_steps(1000, seed)
    k = int(np.argmin(res))
    v.append(verdict("random-edi", -res[k], 1e-9, k))
    return v


def _sleep_reports(taus, horizon=1.0, declared_L=None, strong=False):
    from . import limit_lab as ll
    make = ll.strong_sleep_scenario if strong else ll.star_sleep_scenario
    sc = make(declared_L=declared_L)
    return sc, {tau: ll.run_sleep_mode(sc, tau, horizon) for tau in taus}


def verify_freezing(tau=1 / 16, declared_L=None, strong=False, **_):
    from . import limit_lab as ll
    _, reps = _sleep_reports([tau], declared_L=declared_L, strong=strong)
    return [ll.freezing_error_check(reps[tau])[1].to_json()]


def verify_groenwall(tau=1 / 16, declared_L=None, strong=False, **_):
    from . import limit_lab as ll
    _, reps = _sleep_reports([tau], declared_L=declared_L, strong=strong)
    a, b, _ = ll.groenwall_check(reps[tau])
    return [a.to_json(), b.to_json()]


def verify_stability(tau=1 / 8, horizon=1.0, **_):
    from . import limit_lab as ll
    taus = [tau, tau / 2, tau / 4]
    _, reps = _sleep_reports(taus, horizon)
    v, stab = [], []
    for t in taus:
        s = ll.stability_report(reps[t], horizon)
        stab.append(s)
        v += [verdict(f"energy-bound@{t!r}", s.sup_energy, s.constants[0]),
              verdict(f"action-bound@{t!r}", s.action, s.constants[1]),
              verdict(f"moment-bound@{t!r}", s.sup_moment, s.constants[2])]
    _, spread = ll.uniformity(stab)
    v += [verdict(f"uniformity-{k}", val, 0.10) for k, val in sorted(spread.items())]
    return v


def verify_tau_refine(horizon=1.0, **_):
    from . import limit_lab as ll
    taus = [1 / 4, 1 / 8, 1 / 16, 1 / 32]
    sc, reps = _sleep_reports(taus, horizon)
    table = ll.tau_refinement(lambda t: reps[t].fields, sc.graph, taus, [horizon / 2, horizon],
                              lambda t: ll.stability_constants(reps[t], horizon)[1])
    v = []
    for k, f in enumerate(table.factors):
        v += [verdict("cauchy-factor-low", 1.2, f, k), verdict("cauchy-factor-high", f, 4.0, k)]
    for t, (worst, _) in zip(taus, table.holder):
        v.append(verdict(f"holder@{t!r}", worst, 1e-9))
    return v


def verify_spectral(tau=1.0, **_):
    _, v = fixed_point_spectral(RunParams(tau=tau))
    return v


VERIFIERS = {
    "edi": verify_edi,
    "freezing": verify_freezing,
    "groenwall": verify_groenwall,
    "stability": verify_stability,
    "tau-refine": verify_tau_refine,
    "spectral": verify_spectral,
}
