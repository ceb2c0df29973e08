"""Generalized network with structural weights and complex synaptic moments.

Each output j owns a column p[:, j] on the simplex and, per synapse, the
first moment r e^{i theta} of its embedding distribution. With an affine
activation F_j(g) = a_j g + b_j the alignment energy expands into a cosine
double sum, which gives closed-form gradients for p, r and theta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import InvalidArgument, PreconditionError
from .projector import fiber_rng

TWO_PI = 2.0 * math.pi


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


@dataclass
class SpectralNetwork:
    p: np.ndarray                 # (M, N) structural weights, columns on the simplex
    r: np.ndarray                 # (M, N) amplitudes of the embedding means
    theta: np.ndarray             # (M, N) phases of the embedding means
    a: np.ndarray                 # (N,) affine activation slopes
    b: np.ndarray                 # (N,) affine activation offsets
    real: bool = False            # real mode: phases restricted to {0, pi}
    activation: Callable | None = None   # optional non-affine F(j, g)
    embeddings: Mapping | None = None    # (i, j) -> (atoms, weights)

    def __post_init__(self):
        self.p = np.array(self.p, dtype=float, ndmin=2)
        M, N = self.p.shape
        self.r = np.broadcast_to(np.asarray(self.r, dtype=float), (M, N)).copy()
        self.theta = np.broadcast_to(np.asarray(self.theta, dtype=float), (M, N)).copy()
        self.a = np.broadcast_to(np.asarray(self.a, dtype=complex), (N,)).copy()
        self.b = np.broadcast_to(np.asarray(self.b, dtype=complex), (N,)).copy()
        if np.any(self.p < 0) or np.any(np.abs(self.p.sum(axis=0) - 1.0) > 1e-12):
            raise InvalidArgument("structural weight columns must lie in the simplex")
        if np.any(self.r < 0):
            raise InvalidArgument("amplitudes must be non-negative")
        if self.real:
            s = np.sin(self.theta)
            if np.any(np.abs(s) > 1e-12) or np.any(np.abs(self.a.imag) > 0) or np.any(np.abs(self.b.imag) > 0):
                raise InvalidArgument("real mode needs phases in {0, pi} and real activations")
        if self.embeddings:
            for (i, j), (atoms, weights) in self.embeddings.items():
                mean = complex(np.dot(np.asarray(weights, dtype=float), np.asarray(atoms, dtype=complex)))
                if abs(mean - self.r[i, j] * np.exp(1j * self.theta[i, j])) > 1e-12:
                    raise InvalidArgument(f"embedding ({i}, {j}) mean does not match its moments")

    @property
    def shape(self):
        return self.p.shape

    def copy(self, **changes) -> "SpectralNetwork":
        base = dict(p=self.p.copy(), r=self.r.copy(), theta=self.theta.copy())
        base.update(changes)
        return replace(self, **base)


def _psi(net, psi):
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.size != net.shape[0]:
        raise InvalidArgument(f"input has length {psi.size}, network has {net.shape[0]} inputs")
    return psi


def _phi(net, phi):
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    if phi.size != net.shape[1]:
        raise InvalidArgument(f"target has length {phi.size}, network has {net.shape[1]} outputs")
    return phi


def observable_weights(net: SpectralNetwork) -> np.ndarray:
    return net.p * net.r * np.exp(1j * net.theta)


def forward_expected(net: SpectralNetwork, psi):
    psi = _psi(net, psi)
    ps = psi @ observable_weights(net)
    return ps, _activate(net, ps)


def _activate(net, ps):
    if net.activation is None:
        return net.a * ps + net.b
    return np.array([net.activation(j, g) for j, g in enumerate(ps)], dtype=complex)


def forward_sample(net: SpectralNetwork, psi, seed: int, draw: int = 0):
    """One realization of F(sum_i psi_i p_ij Z_ij) with Z_ij drawn from its embedding."""
    psi = _psi(net, psi)
    M, N = net.shape
    if not net.embeddings or len(net.embeddings) < M * N:
        raise InvalidArgument("sampling needs an embedding distribution for every synapse")
    rng = fiber_rng(seed, "forward", draw)
    Z = np.empty((M, N), dtype=complex)
    for i in range(M):
        for j in range(N):
            atoms, weights = net.embeddings[(i, j)]
            atoms = np.asarray(atoms, dtype=complex)
            Z[i, j] = atoms[rng.choice(atoms.size, p=np.asarray(weights, dtype=float))]
    ps = psi @ (net.p * Z)
    return ps, _activate(net, ps)


def alignment_energy(net: SpectralNetwork, psi, phi) -> float:
    _, pred = forward_expected(net, psi)
    return 0.5 * float(np.sum(np.abs(pred - _phi(net, phi)) ** 2))


def _angles(net, psi, phi, j):
    """Theta_i = theta_ij + arg psi_i and the alignment angle Theta_i + arg a - arg(phi - b)."""
    Theta = net.theta[:, j] + np.angle(psi)
    resid = phi[j] - net.b[j]
    return Theta, Theta + np.angle(net.a[j]) - np.angle(resid), abs(resid)


def local_energy_affine(net: SpectralNetwork, psi, phi, j: int, convention: str = "half") -> float:
    """Cosine expansion of the energy of output j.

    ``convention="half"`` uses the constant |phi_j - b_j|^2 / 2 that the
    expansion of the squared norm produces; ``"full"`` uses |phi_j - b_j|^2.
    """
    psi, phi = _psi(net, psi), _phi(net, phi)
    Theta, align, c = _angles(net, psi, phi, j)
    amp = np.abs(psi) * net.p[:, j] * net.r[:, j]
    A = abs(net.a[j])
    quad = 0.5 * A * A * float(amp @ np.cos(Theta[:, None] - Theta[None, :]) @ amp)
    lin = -A * c * float(amp @ np.cos(align))
    if convention == "half":
        const = 0.5 * c * c
    elif convention == "full":
        const = c * c
    else:
        raise InvalidArgument(f"unknown convention {convention!r}")
    return quad + lin + const


def _cross(net, psi, j, Theta, i, which):
    """sum over i' != i of |psi_i'| p_i'j r_i'j trig(Theta_i - Theta_i')."""
    amp = np.abs(psi) * net.p[:, j] * net.r[:, j]
    d = Theta[i] - Theta
    vals = amp * (np.cos(d) if which == "cos" else np.sin(d))
    return float(vals.sum() - vals[i])


def grad_amplitude(net, psi, phi, i, j) -> float:
    psi, phi = _psi(net, psi), _phi(net, phi)
    Theta, align, c = _angles(net, psi, phi, j)
    A, s, p, r = abs(net.a[j]), abs(psi[i]), net.p[i, j], net.r[i, j]
    return (A * A * s * s * p * p * r + A * A * s * p * _cross(net, psi, j, Theta, i, "cos")
            - A * c * s * p * math.cos(align[i]))


def grad_structural(net, psi, phi, i, j) -> float:
    psi, phi = _psi(net, psi), _phi(net, phi)
    Theta, align, c = _angles(net, psi, phi, j)
    A, s, p, r = abs(net.a[j]), abs(psi[i]), net.p[i, j], net.r[i, j]
    return (A * A * s * s * r * r * p + A * A * s * r * _cross(net, psi, j, Theta, i, "cos")
            - A * c * s * r * math.cos(align[i]))


def grad_phase(net, psi, phi, i, j) -> float:
    psi, phi = _psi(net, psi), _phi(net, phi)
    Theta, align, c = _angles(net, psi, phi, j)
    A, s, p, r = abs(net.a[j]), abs(psi[i]), net.p[i, j], net.r[i, j]
    return (-A * A * s * p * r * _cross(net, psi, j, Theta, i, "sin")
            + A * c * s * p * r * math.sin(align[i]))


def gradients(net, psi, phi):
    """All three gradient matrices (dE/dp, dE/dr, dE/dtheta), vectorized."""
    psi, phi = _psi(net, psi), _phi(net, phi)
    M, N = net.shape
    gp, gr, gt = np.zeros((M, N)), np.zeros((M, N)), np.zeros((M, N))
    s = np.abs(psi)
    for j in range(N):
        Theta, align, c = _angles(net, psi, phi, j)
        A = abs(net.a[j])
        amp = s * net.p[:, j] * net.r[:, j]
        d = Theta[:, None] - Theta[None, :]
        sin_sum = np.sin(d) @ amp
        # dE/dr = p * common and dE/dp = r * common; the i' = i term of the
        # cosine sum is the diagonal |a|^2 |psi_i|^2 p r contribution
        common = s * (A * A * (np.cos(d) @ amp) - A * c * np.cos(align))
        gr[:, j] = common * net.p[:, j]
        gp[:, j] = common * net.r[:, j]
        gt[:, j] = -A * A * s * net.p[:, j] * net.r[:, j] * sin_sum + A * c * amp * np.sin(align)
    return gp, gr, gt


def _need(cond, msg):
    if not cond:
        raise PreconditionError(msg)


def equilibrium_amplitude(net, psi, phi, i, j) -> float:
    psi, phi = _psi(net, psi), _phi(net, phi)
    Theta, align, c = _angles(net, psi, phi, j)
    s, p, A = abs(psi[i]), net.p[i, j], abs(net.a[j])
    _need(s > 0 and p > 0 and A > 0, "equilibrium amplitude needs psi_i != 0, p_ij > 0, a_j != 0")
    return c / (A * s * p) * math.cos(align[i]) - _cross(net, psi, j, Theta, i, "cos") / (s * p)


def equilibrium_structural(net, psi, phi, i, j) -> float:
    psi, phi = _psi(net, psi), _phi(net, phi)
    Theta, align, c = _angles(net, psi, phi, j)
    s, r, A = abs(psi[i]), net.r[i, j], abs(net.a[j])
    _need(s > 0 and r > 0 and A > 0, "equilibrium weight needs psi_i != 0, r_ij > 0, a_j != 0")
    return c / (A * s * r) * math.cos(align[i]) - _cross(net, psi, j, Theta, i, "cos") / (s * r)


def hebbian_equilibrium_residual(net, psi, phi, i, j) -> float:
    """LHS - RHS of the Hebbian equilibrium equation at the current parameters."""
    psi, phi = _psi(net, psi), _phi(net, phi)
    Theta, align, c = _angles(net, psi, phi, j)
    A = abs(net.a[j])
    _need(A > 0, "Hebbian equilibrium needs a_j != 0")
    amp = np.abs(psi) * net.p[:, j] * net.r[:, j]
    return float(amp @ np.cos(Theta[i] - Theta)) - c / A * math.cos(align[i])


def alignment_cosines(net, psi, phi, j) -> np.ndarray:
    psi, phi = _psi(net, psi), _phi(net, phi)
    return np.cos(_angles(net, psi, phi, j)[1])


def internal_cosines(net, psi, j) -> np.ndarray:
    psi = _psi(net, psi)
    Theta = net.theta[:, j] + np.angle(psi)
    return np.cos(Theta[:, None] - Theta[None, :])


@dataclass
class PressureReport:
    pressures: np.ndarray
    active: np.ndarray
    lam: float
    residual: float
    kkt_ok: bool
    kkt_slack: float


def pressure_report(net, psi, phi, j, active_tol: float = 1e-12) -> PressureReport:
    gp = gradients(net, psi, phi)[0][:, j]
    active = net.p[:, j] > active_tol
    lam = -float(gp[active].mean())
    residual = float(gp[active].max() - gp[active].min())
    inactive = ~active
    slack = float((gp[inactive] + lam).min()) if inactive.any() else math.inf
    return PressureReport(gp, active, lam, residual, slack >= -1e-6, slack)


@dataclass
class PlasticityStep:
    step: int
    energy: float
    lr: float
    active: list
    pressure_spread: list
    min_internal_cos: list
    max_internal_cos: list
    alignment: list


@dataclass
class PlasticityRun:
    net: SpectralNetwork
    history: list
    energies: list
    stalled: bool = False
    stall_step: int | None = None
    converged: bool = False


def _diagnostics(net, psi, phi, n, energy, lr):
    M, N = net.shape
    act, spread, mn, mx, al = [], [], [], [], []
    for j in range(N):
        rep = pressure_report(net, psi, phi, j)
        act.append(np.nonzero(rep.active)[0].tolist())
        spread.append(rep.residual)
        ic = internal_cosines(net, psi, j)
        off = ic[~np.eye(M, dtype=bool)] if M > 1 else np.array([1.0])
        mn.append(float(off.min()))
        mx.append(float(off.max()))
        al.append(alignment_cosines(net, psi, phi, j).tolist())
    return PlasticityStep(n, energy, lr, act, spread, mn, mx, al)


def _step(net, psi, phi, lr, free):
    gp, gr, gt = gradients(net, psi, phi)
    p, r, th = net.p, net.r, net.theta
    if "p" in free:
        p = np.column_stack([project_simplex(net.p[:, j] - lr * gp[:, j]) for j in range(net.shape[1])])
    if "r" in free:
        r = np.maximum(net.r - lr * gr, 0.0)
    if "theta" in free and not net.real:
        th = np.mod(net.theta - lr * gt, TWO_PI)
    return net.copy(p=p, r=r, theta=th)


def run_plasticity(net: SpectralNetwork, psi, phi, steps: int, lr: float,
                   free: Sequence[str] = ("p", "r", "theta"), max_halvings: int = 30,
                   tol: float = 0.0, record_every: int = 1) -> PlasticityRun:
    """Projected gradient descent with backtracking on the affine energy."""
    if not lr > 0:
        raise InvalidArgument("learning rate must be positive")
    if net.activation is not None:
        raise InvalidArgument("plasticity needs affine activations")
    psi, phi = _psi(net, psi), _phi(net, phi)
    energy = alignment_energy(net, psi, phi)
    history = [_diagnostics(net, psi, phi, 0, energy, lr)]
    energies = [energy]
    run = PlasticityRun(net, history, energies)
    for n in range(1, steps + 1):
        step = lr
        for _ in range(max_halvings + 1):
            cand = _step(net, psi, phi, step, free)
            e = alignment_energy(cand, psi, phi)
            if e <= energy:
                break
            step *= 0.5
        else:
            run.stalled, run.stall_step = True, n
            break
        moved = (np.abs(cand.p - net.p).max() + np.abs(cand.r - net.r).max()
                 + np.abs(cand.theta - net.theta).max())
        net, energy = cand, e
        energies.append(energy)
        if n % record_every == 0:
            history.append(_diagnostics(net, psi, phi, n, energy, step))
        if moved <= tol:
            run.converged = True
            break
    run.net = net
    if history[-1].step != len(energies) - 1:
        history.append(_diagnostics(net, psi, phi, len(energies) - 1, energy, step))
    return run


def run_multiscale(net: SpectralNetwork, psi, phi, cycles: int, fast_steps: int, slow_steps: int,
                   lr: float, assemblies: Sequence[Sequence[int]] | None = None) -> list:
    """Alternate fast (r, theta) phases and slow p phases.

    In the slow phase the input is averaged over each declared assembly,
    standing in for an activation that is effectively constant on the slow
    time scale.
    """
    psi = _psi(net, psi)
    slow_psi = psi.copy()
    for group in assemblies or []:
        group = list(group)
        slow_psi[group] = psi[group].mean()
    runs = []
    for _ in range(cycles):
        fast = run_plasticity(net, psi, phi, fast_steps, lr, free=("r", "theta"))
        slow = run_plasticity(fast.net, slow_psi, phi, slow_steps, lr, free=("p",))
        net = slow.net
        runs.append((fast, slow))
    return runs


def circle_fact(step_deg: float = 1.0, k: int = 4):
    """Largest phase set (first phase fixed at 0) on a grid with all pairwise
    cosines negative, searched exhaustively for sizes up to ``k``.

    Returns (found sets by size, example) where found[s] says whether a
    set of size s exists.
    """
    grid = np.deg2rad(np.arange(0.0, 360.0, step_deg))
    found, example = {1: True}, {1: (0.0,)}
    neg = np.cos(grid[:, None] - grid[None, :]) < 0
    from0 = neg[0]
    # size 2 and 3: direct search
    idx2 = np.nonzero(from0)[0]
    found[2] = idx2.size > 0
    example[2] = (0.0, float(np.rad2deg(grid[idx2[0]]))) if found[2] else None
    found[3], example[3] = False, None
    for a in idx2:
        both = np.nonzero(from0 & neg[a])[0]
        if both.size:
            found[3], example[3] = True, (0.0, float(np.rad2deg(grid[a])), float(np.rad2deg(grid[both[0]])))
            break
    if k >= 4:
        found[4], example[4] = False, None
        for a in idx2:
            cand = np.nonzero(from0 & neg[a])[0]
            if cand.size < 2:
                continue
            sub = neg[np.ix_(cand, cand)]
            if sub.any():
                x, y = np.argwhere(sub)[0]
                found[4] = True
                example[4] = tuple(float(np.rad2deg(grid[v])) for v in (0, a, cand[x], cand[y]))
                break
    return found, example


# ---------------------------------------------------------------------------
# constructed scenarios

def pruning_scenario():
    """Structural pruning: the third synapse is anti-aligned with the target."""
    net = SpectralNetwork(p=np.full((3, 1), 1 / 3), r=np.ones((3, 1)),
                          theta=np.array([[0.0], [0.0], [math.pi]]), a=[1.0], b=[0.0])
    return net, np.ones(3), np.array([1.5]), ("p",)


def amplitude_pruning_scenario():
    net = SpectralNetwork(p=np.full((2, 1), 0.5), r=np.ones((2, 1)),
                          theta=np.array([[0.0], [math.pi]]), a=[1.0], b=[0.0])
    return net, np.ones(2), np.array([2.0]), ("r",)


def selectivity_scenario():
    """p_eq > 1 for the strong synapse: the other weights are driven to zero."""
    net = SpectralNetwork(p=np.full((3, 1), 1 / 3), r=np.array([[2.0], [0.5], [0.5]]),
                          theta=np.zeros((3, 1)), a=[1.0], b=[0.0])
    return net, np.ones(3), np.array([3.0]), ("p",)


def synchronized_scenario():
    """Synchronized group with a reachable target: interior convergence, E -> 0."""
    psi = np.array([1.0, 0.9 * np.exp(0.3j), 1.1 * np.exp(-0.2j)])
    net = SpectralNetwork(p=np.array([[0.4], [0.35], [0.25]]), r=np.array([[1.0], [0.8], [1.2]]),
                          theta=np.array([[0.1], [-0.2], [0.3]]), a=[1.0 + 0.2j], b=[0.1])
    return net, psi, np.array([0.9 * np.exp(0.6j)]), ("p", "r", "theta")
