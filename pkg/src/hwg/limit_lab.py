"""Quantitative checks of the descent, stability and limit inequalities.

The scenario family here ("sleep mode") closes the loop between field and
context: the context is a scaled mean edge embedding of the field, and the
per-fiber signal slides along a fixed geodesic by an amount read from the
context. Both maps have Lipschitz constants known by construction, so the
constant L of the freezing-error bound is exact metadata, not an estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgument, PreconditionError
from .graph import EdgePoint, MetricGraph, VertexRef
from .measures import Context, DiscreteMeasure, MemoryField, context_distance, second_moment
from .scheme import GQE, SchemeState, contraction_factor, frozen_energy, jko_step_quadratic
from .transport import displacement, field_w, solve_ot, w2

SLACK = 1e-9


# ---------------------------------------------------------------------------
# sleep-mode scenario family

def edge_embedding(g: MetricGraph, m: DiscreteMeasure) -> np.ndarray:
    """Mean of y -> (distance from the edge's first endpoint) * e_edge.

    On a star whose edges start at the hub this map is 1-Lipschitz from the
    path metric into l1, so the mean is 1-Lipschitz for W1 <= W2.
    """
    out = np.zeros(len(g.edges))
    for p, mass in m:
        if isinstance(p, EdgePoint):
            out[p.edge] += mass * p.offset
            continue
        for k, (a, b, length) in enumerate(g.edges):
            if p.index == b:
                out[k] += mass * length
                break
    return out


@dataclass
class SleepModeScenario:
    """Context phi_x = kappa * edge_embedding(rho_x); signal S_x slides from
    A_x to B_x to the parameter clip(lam0 + c Re<v, phi_x>, 0, 1)."""
    graph: MetricGraph
    field0: MemoryField
    A: dict
    B: dict
    alpha: float = 1.0
    kappa: float = 0.5
    c: float = 0.05
    lam0: float = 0.5
    v: np.ndarray | None = None
    declared_L: float | None = None      # override (for adversarial checks)

    def __post_init__(self):
        if not self.graph.is_tree:
            raise InvalidArgument("sleep-mode scenarios live on trees")
        for k, (a, _, _) in enumerate(self.graph.edges):
            if a != 0:
                raise InvalidArgument("edge embedding needs edges oriented away from vertex 0")
        if self.v is None:
            self.v = np.ones(len(self.graph.edges))
        self.v = np.asarray(self.v, dtype=float)
        self._plans = {fid: solve_ot(self.graph, self.A[fid], self.B[fid]) for fid in self.field0.ids}
        self._D = {fid: math.sqrt(max(p.cost, 0.0)) for fid, p in self._plans.items()}

    # Lipschitz metadata ------------------------------------------------
    @property
    def L_C(self) -> float:
        return self.kappa

    @property
    def L_S(self) -> float:
        vmax = float(np.abs(self.v).max())
        return max(self.c * vmax * self._D[f.id] / math.sqrt(f.weight)
                   for f in self.field0 if f.weight > 0)

    @property
    def L_H(self) -> float:
        return 1.0

    @property
    def L(self) -> float:
        if self.declared_L is not None:
            return self.declared_L
        return (self.L_S * (1.0 + self.L_H) * math.sqrt(1.0 + self.L_C ** 2)
                * math.sqrt(self.field0.total_weight))

    @property
    def energy(self) -> GQE:
        return GQE(self.alpha, "identity", self.L_S, self.L_H)

    # maps ----------------------------------------------------------------
    def context(self, rho: MemoryField) -> Context:
        return Context({f.id: self.kappa * edge_embedding(self.graph, f.measure) for f in rho})

    def lam(self, fid, ctx: Context) -> float:
        return float(np.clip(self.lam0 + self.c * np.real(np.dot(self.v, ctx[fid])), 0.0, 1.0))

    def signal(self, rho: MemoryField, ctx: Context) -> dict:
        return {fid: displacement(self.graph, self._plans[fid], self.lam(fid, ctx)) for fid in rho.ids}

    def energy_at(self, rho: MemoryField, ctx: Context) -> float:
        return frozen_energy(rho, self.signal(rho, ctx), self.energy, self.graph)


@dataclass
class TrajectoryReport:
    tau: float
    alpha: float
    L: float
    energies: list          # E(rho^n, phi^n), n = 0..N
    frozen_next: list       # E_frozen^n(rho^{n+1}), n = 0..N-1
    w_steps: list           # W(rho^{n+1}, rho^n)
    context_steps: list     # d_C(phi^n, phi^{n+1})
    moments: list           # M(rho^n)
    fields: list = field(default_factory=list, repr=False)

    @property
    def steps(self) -> int:
        return len(self.w_steps)

    @property
    def action(self) -> list:
        """Partial sums sum_{k<n} W_k^2 / tau, n = 0..N."""
        out = [0.0]
        for w in self.w_steps:
            out.append(out[-1] + w * w / self.tau)
        return out


def run_sleep_mode(sc: SleepModeScenario, tau: float, horizon: float, basepoint=VertexRef(0),
                   keep_fields: bool = True) -> TrajectoryReport:
    steps = int(round(horizon / tau))
    if abs(steps * tau - horizon) > 1e-12:
        raise InvalidArgument("horizon must be a multiple of tau")
    g = sc.graph
    weights = sc.field0.weights
    rho = sc.field0
    ctx = sc.context(rho)
    energies, frozen, ws, cs, moments, fields = [], [], [], [], [], [rho]
    energies.append(sc.energy_at(rho, ctx))
    moments.append(sum(f.weight * second_moment(f.measure, g, basepoint) for f in rho))
    for n in range(steps):
        h = sc.signal(rho, ctx)
        nxt = jko_step_quadratic(SchemeState(n, tau, rho, h, sc.energy, ctx), g)
        ctx_next = sc.context(nxt)
        frozen.append(frozen_energy(nxt, h, sc.energy, g))
        ws.append(field_w(g, nxt, rho))
        cs.append(context_distance(ctx, ctx_next, weights))
        energies.append(sc.energy_at(nxt, ctx_next))
        moments.append(sum(f.weight * second_moment(f.measure, g, basepoint) for f in nxt))
        rho, ctx = nxt, ctx_next
        if keep_fields:
            fields.append(rho)
    return TrajectoryReport(tau, sc.alpha, sc.L, energies, frozen, ws, cs, moments, fields)


def star_sleep_scenario(kappa: float = 0.5, c: float = 0.05, alpha: float = 1.0,
                        declared_L: float | None = None, v=None) -> SleepModeScenario:
    """Two fibers on a 3-star: one starting at leaves, one spread over two leaves."""
    from .graph import star_tree
    g = star_tree([1.0, 1.0, 1.0])
    leaf = [VertexRef(i) for i in (1, 2, 3)]
    field0 = MemoryField([
        ("x", 1.0, DiscreteMeasure(zip(leaf, [0.6, 0.3, 0.1]))),
        ("y", 0.5, DiscreteMeasure(zip(leaf[:2], [0.5, 0.5]))),
    ])
    A = {"x": DiscreteMeasure(zip(leaf, [0.1, 0.2, 0.7])),
         "y": DiscreteMeasure(zip(leaf, [0.2, 0.2, 0.6]))}
    B = {"x": DiscreteMeasure(zip(leaf, [0.4, 0.5, 0.1])),
         "y": DiscreteMeasure(zip(leaf, [0.7, 0.1, 0.2]))}
    return SleepModeScenario(g, field0, A, B, alpha=alpha, kappa=kappa, c=c, v=v,
                             declared_L=declared_L)


def strong_sleep_scenario(declared_L: float | None = None) -> SleepModeScenario:
    """Strongly coupled variant: moving mass between leaves 1 and 2 slides the signal."""
    return star_sleep_scenario(kappa=2.0, c=1.0, v=np.array([1.0, -1.0, 0.0]), declared_L=declared_L)


# ---------------------------------------------------------------------------
# checks

@dataclass
class Verdict:
    check: str
    step: int | None
    lhs: float
    rhs: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"check": self.check, "step": self.step, "lhs": self.lhs, "rhs": self.rhs,
                "pass": self.passed}


def _worst(check, rows, slack):
    """Pick the step with the largest lhs - rhs and build a verdict."""
    step, lhs, rhs = max(rows, key=lambda r: r[1] - r[2])
    return Verdict(check, step, lhs, rhs, lhs - rhs <= slack)


def freezing_error_check(rep: TrajectoryReport, alpha: float | None = None, L: float | None = None,
                         tau: float | None = None) -> tuple[list, Verdict]:
    """|E^{n+1} - E_frozen^n(rho^{n+1})| vs W^2/4tau + alpha L^2 tau (E^{n+1} + E^n)."""
    alpha = rep.alpha if alpha is None else alpha
    L = rep.L if L is None else L
    tau = rep.tau if tau is None else tau
    if L is None:
        raise InvalidArgument("freezing check needs the Lipschitz constant L")
    rows = []
    for n in range(rep.steps):
        lhs = abs(rep.energies[n + 1] - rep.frozen_next[n])
        rhs = (rep.w_steps[n] ** 2 / (4 * tau)
               + alpha * L * L * tau * (rep.energies[n + 1] + rep.energies[n]))
        rows.append((n, lhs, rhs))
    residuals = [lhs - rhs for _, lhs, rhs in rows]
    if not rows:
        return residuals, Verdict("freezing", None, 0.0, 0.0, True)
    return residuals, _worst("freezing", rows, SLACK)


def groenwall_check(rep: TrajectoryReport, alpha: float | None = None, L: float | None = None,
                    tau: float | None = None) -> tuple[Verdict, Verdict, float]:
    """Per-step E^{n+1} <= (1 + 4 alpha L^2 tau) E^n and E^n <= E^0 e^{2 alpha L^2 n tau}."""
    alpha = rep.alpha if alpha is None else alpha
    L = rep.L if L is None else L
    tau = rep.tau if tau is None else tau
    if alpha * L * L * tau > 0.5:
        raise PreconditionError(f"alpha L^2 tau = {alpha * L * L * tau} exceeds 1/2")
    k = 1.0 + 4.0 * alpha * L * L * tau
    step_rows = [(n, rep.energies[n + 1], k * rep.energies[n]) for n in range(rep.steps)]
    cum_rows = [(n, rep.energies[n], rep.energies[0] * math.exp(2 * alpha * L * L * n * tau))
                for n in range(rep.steps + 1)]
    ratios = [rep.energies[n + 1] / rep.energies[n] for n in range(rep.steps) if rep.energies[n] > 0]
    per_step = _worst("groenwall-step", step_rows, SLACK) if step_rows else Verdict(
        "groenwall-step", None, 0.0, 0.0, True)
    return per_step, _worst("groenwall-cumulative", cum_rows, SLACK), max(ratios, default=0.0)


def stability_constants(rep: TrajectoryReport, horizon: float, alpha=None, L=None):
    """C_T^(1), C_T^(2), C_T^(3) of the energy, action and moment bounds."""
    alpha = rep.alpha if alpha is None else alpha
    L = rep.L if L is None else L
    e0, m0 = rep.energies[0], rep.moments[0]
    c1 = math.exp(4 * alpha * L * L * horizon) * e0
    c2 = 4 * e0 * (1 + 2 * alpha * L * L * horizon * math.exp(4 * alpha * L * L * horizon))
    c3 = (m0 + 2 * c2) * math.exp(horizon)
    return c1, c2, c3


@dataclass
class StabilityReport:
    sup_energy: float
    action: float
    sup_moment: float
    constants: tuple
    passed: bool


def stability_report(rep: TrajectoryReport, horizon: float) -> StabilityReport:
    if rep.steps * rep.tau > horizon + 1e-12:
        raise InvalidArgument("trajectory runs past the horizon")
    c = stability_constants(rep, horizon)
    sup_e, act, sup_m = max(rep.energies), rep.action[-1], max(rep.moments)
    ok = sup_e <= c[0] + SLACK and act <= c[1] + SLACK and (rep.tau > 1 or sup_m <= c[2] + SLACK)
    return StabilityReport(sup_e, act, sup_m, c, ok)


def uniformity(reports: Sequence[StabilityReport], tol: float = 0.10) -> tuple[bool, dict]:
    """Relative spread of each supremum across tau values (must stay within ``tol``)."""
    spread = {}
    for name in ("sup_energy", "action", "sup_moment"):
        vals = [getattr(r, name) for r in reports]
        top = max(vals)
        spread[name] = (top - min(vals)) / top if top > 0 else 0.0
    return all(v <= tol for v in spread.values()), spread


def perturbed_edi_check(rep: TrajectoryReport, alpha=None, L=None, tau=None) -> tuple[list, Verdict]:
    """E^n + (1/4) sum_{k<n} W_k^2/tau <= E^0 + 2 alpha L^2 (1 + 2 alpha L^2 tau) tau sum_{k<n} E^k.

    This is the summed pre-telescopic inequality with E^{k+1} bounded through
    the per-step Gronwall factor; at rate level it is the rectangle-rule
    version of E(t) + (1/4) int |rho'|^2 <= E(0) + 2 alpha L^2 int E.
    """
    alpha = rep.alpha if alpha is None else alpha
    L = rep.L if L is None else L
    tau = rep.tau if tau is None else tau
    k = 2 * alpha * L * L * (1 + 2 * alpha * L * L * tau) * tau
    rows, residuals = [], []
    act = rep.action
    for n in range(1, rep.steps + 1):
        lhs = rep.energies[n] + 0.25 * act[n]
        rhs = rep.energies[0] + k * sum(rep.energies[:n])
        rows.append((n, lhs, rhs))
        residuals.append(lhs - rhs)
    scale = max(1.0, max(rep.energies))
    if not rows:
        return residuals, Verdict("perturbed-edi", None, 0.0, 0.0, True)
    return residuals, _worst("perturbed-edi", rows, 1e-6 * scale)


def pre_telescopic_check(rep: TrajectoryReport, alpha=None, L=None, tau=None) -> Verdict:
    alpha = rep.alpha if alpha is None else alpha
    L = rep.L if L is None else L
    tau = rep.tau if tau is None else tau
    rows = [(n, rep.energies[n + 1] + rep.w_steps[n] ** 2 / (4 * tau),
             rep.energies[n] + alpha * L * L * tau * (rep.energies[n + 1] + rep.energies[n]))
            for n in range(rep.steps)]
    return _worst("pre-telescopic", rows, SLACK)


def sleep_mode_check(rep: TrajectoryReport, L_C: float) -> Verdict:
    """d_C(phi^n, phi^{n+1}) <= L_C W(rho^n, rho^{n+1}) on every step."""
    rows = [(n, rep.context_steps[n], L_C * rep.w_steps[n]) for n in range(rep.steps)]
    return _worst("sleep-mode", rows, SLACK)


# ---------------------------------------------------------------------------
# tau refinement

@dataclass
class RefinementTable:
    taus: list
    probe_times: list
    gaps: list              # gaps[k][p]: W between tau_k and tau_{k+1} runs at probe p
    factors: list           # max-over-probes gap ratios between consecutive halvings
    holder: list            # per tau: (max lhs - rhs, C_T) of the Holder-1/2 modulus
    passed: bool


def tau_refinement(run: Callable[[float], list], g: MetricGraph, taus: Sequence[float],
                   probe_times: Sequence[float], C_T: Callable[[float], float],
                   band=(1.2, 4.0)) -> RefinementTable:
    """Compare trajectories at consecutive step sizes at common probe times.

    ``run(tau)`` returns the fields rho^0..rho^N at times n tau; ``C_T(tau)``
    gives the stability constant used by the Holder bound.
    """
    taus = list(taus)
    for a, b in zip(taus, taus[1:]):
        if abs(a / b - 2.0) > 1e-12:
            raise InvalidArgument("tau list must halve at each entry")
    trajs = [run(t) for t in taus]

    def at(k, t):
        n = int(round(t / taus[k]))
        if abs(n * taus[k] - t) > 1e-12:
            raise InvalidArgument(f"probe time {t} is not on the grid of tau = {taus[k]}")
        return trajs[k][n]

    gaps = [[field_w(g, at(k, t), at(k + 1, t)) for t in probe_times] for k in range(len(taus) - 1)]
    factors = []
    for k in range(len(gaps) - 1):
        a, b = max(gaps[k]), max(gaps[k + 1])
        factors.append(a / b if b > 0 else math.inf if a > 0 else 1.0)
    holder = []
    for k, tau in enumerate(taus):
        tr = trajs[k]
        const = C_T(tau)
        worst = -math.inf
        for i in range(len(tr)):
            for j in range(i + 1, len(tr)):
                lhs = field_w(g, tr[i], tr[j])
                worst = max(worst, lhs - math.sqrt(2 * const) * math.sqrt((j - i) * tau))
        holder.append((worst, const))
    ok = all(band[0] <= f <= band[1] for f in factors) and all(h[0] <= SLACK for h in holder)
    return RefinementTable(taus, list(probe_times), gaps, factors, holder, ok)


# ---------------------------------------------------------------------------
# spectral relation at fixed points

@dataclass
class SpectralCheck:
    fixed_point: np.ndarray
    grad_norm: float
    mu: np.ndarray            # eigenvalues of M^{-1} Hess E
    lam: np.ndarray           # eigenvalues of the Jacobian of the time-tau flow map
    max_error: float
    saddle: bool
    tau_invariance: dict      # tau -> size of the proximal step from the fixed point


def _fd_grad(E, x, h=1e-6):
    g = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (E(x + e) - E(x - e)) / (2 * h)
    return g


def hessian_fd(grad, x, h=1e-5):
    n = x.size
    H = np.zeros((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        H[:, k] = (grad(x + e) - grad(x - e)) / (2 * h)
    return 0.5 * (H + H.T)


def locate_fixed_point(E, grad, x0, gtol=1e-10, max_iter=200):
    """Descent to a critical point: BFGS, then Newton polish on the FD Hessian."""
    from scipy.optimize import minimize
    res = minimize(E, x0, jac=grad, method="BFGS", options={"gtol": 1e-12, "maxiter": 10_000})
    x = res.x
    for _ in range(max_iter):
        g = grad(x)
        if np.linalg.norm(g) <= gtol:
            break
        H = hessian_fd(grad, x)
        x = x - np.linalg.lstsq(H, g, rcond=None)[0]
    return x, float(np.linalg.norm(grad(x)))


def flow_map(grad, masses, tau, quadratic=False, x_ref=None):
    """Time-tau map of x' = -M^{-1} grad E(x).

    For quadratic energies the gradient is affine, so its matrix is read off
    exactly from gradient differences and the flow is a matrix exponential.
    """
    masses = np.asarray(masses, dtype=float)
    if quadratic:
        from scipy.linalg import expm
        n = masses.size
        base = np.zeros(n) if x_ref is None else x_ref
        g0 = grad(base)
        G = np.column_stack([grad(base + np.eye(n)[k]) - g0 for k in range(n)])
        A = G / masses[:, None]
        # fixed point of the affine field, then exact exponential
        xs = base - np.linalg.lstsq(G, g0, rcond=None)[0]
        P = expm(-tau * A)
        return lambda x: xs + P @ (x - xs)
    from scipy.integrate import solve_ivp

    def f(_, x):
        return -grad(x) / masses

    def step(x):
        sol = solve_ivp(f, (0.0, tau), x, method="DOP853", rtol=1e-13, atol=1e-15)
        return sol.y[:, -1]
    return step


def spectral_stability_check(E, x0, tau: float, masses=None, grad=None, quadratic: bool = False,
                             taus=(0.25, 0.5, 1.0), fd_step: float = 1e-5) -> SpectralCheck:
    """Eigen-relation lambda_i = exp(-tau mu_i) at a located fixed point.

    Atom positions with equal masses carry the Wasserstein geometry as the
    mass-weighted Euclidean one, so the Hessian operator is M^{-1} Hess E.
    """
    x0 = np.asarray(x0, dtype=float)
    masses = np.full(x0.size, 1.0) if masses is None else np.asarray(masses, dtype=float)
    grad = grad or (lambda x: _fd_grad(E, x))
    x_star, gnorm = locate_fixed_point(E, grad, x0)
    H = hessian_fd(grad, x_star, fd_step)
    A = H / np.sqrt(masses)[:, None] / np.sqrt(masses)[None, :]   # similar to M^{-1} H, symmetric
    mu = np.sort(np.linalg.eigvalsh(A))
    phi = flow_map(grad, masses, tau, quadratic, x_star)
    n = x_star.size
    J = np.zeros((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = fd_step
        J[:, k] = (phi(x_star + e) - phi(x_star - e)) / (2 * fd_step)
    lam = np.sort(np.real(np.linalg.eigvals(J)))[::-1]
    err = float(np.max(np.abs(lam - np.exp(-tau * mu))))
    inv = {}
    for t in taus:
        # one proximal Newton step of the position-space minimizing movement
        # least squares: at a saddle H + M/t can be singular for some t
        step = np.linalg.lstsq(H + np.diag(masses) / t, -grad(x_star), rcond=None)[0]
        inv[t] = float(np.linalg.norm(step))
    return SpectralCheck(x_star, gnorm, mu, lam, err, bool(mu.min() < -1e-9), inv)


# test energies -------------------------------------------------------------

def quadratic_energy(alpha, target):
    target = np.asarray(target, dtype=float)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), target.shape)
    E = lambda x: 0.5 * float(np.sum(alpha * (x - target) ** 2))
    G = lambda x: alpha * (x - target)
    return E, G


def pair_energy():
    """Two atoms in the plane: quartic confinement plus a soft spring (non-quadratic)."""
    c = np.array([0.3, -0.2, -0.5, 0.4])

    def E(x):
        p, q = x[:2], x[2:]
        conf = 0.25 * np.sum(x ** 4) + 0.5 * np.sum((x - c) ** 2)
        d = p - q
        return float(conf + 0.5 * math.log(1.0 + d @ d))

    def G(x):
        p, q = x[:2], x[2:]
        g = x ** 3 + (x - c)
        d = p - q
        s = d / (1.0 + d @ d)
        g[:2] += s
        g[2:] -= s
        return g
    return E, G
