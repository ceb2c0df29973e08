"""Exact quadratic-cost optimal transport between discrete measures.

The solver is a transportation simplex: north-west corner start, u-v duals,
most-negative reduced cost enters (lowest cell index on ties) and the lowest
cell index leaves among ratio-test ties. After a run of degenerate pivots the
entering rule switches to Bland's (lowest index with negative reduced cost),
which rules out cycling, so supplies are never perturbed. A brute-force
oracle enumerates every spanning tree of the bipartite graph K_{m,n} (the
basic solutions) and solves each with a dense least-squares system, sharing
no code with the simplex.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InvalidArgument
from .graph import GraphPoint, MetricGraph
from .measures import DiscreteMeasure, MemoryField

MAX_ATOMS = 512
BRUTE_MAX = 5
# reduced costs above this (relative to the cost scale) mark a unique optimal basis
UNIQUE_TOL = 1e-10
MAX_PIVOTS = 1_000_000
# consecutive degenerate pivots after which entering switches to Bland's rule
BLAND_AFTER = 50


@dataclass(frozen=True)
class TransportPlan:
    source: tuple            # source points (or indices for raw problems)
    target: tuple
    pi: np.ndarray           # (len(source), len(target)) masses
    cost: float
    unique: bool = True

    def entries(self, tol: float = 0.0):
        """Yield (k, l, mass) for the cells carrying more than ``tol`` mass."""
        ks, ls = np.nonzero(self.pi > tol)
        for k, l in zip(ks.tolist(), ls.tolist()):
            yield k, l, float(self.pi[k, l])

    def to_literal(self) -> dict:
        return {"cost": self.cost, "unique": self.unique,
                "entries": [{"k": k, "l": l, "mass": m} for k, l, m in self.entries()]}


# ---------------------------------------------------------------------------
# transportation simplex on a raw cost matrix

def _check_marginals(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or a.size == 0 or b.size == 0:
        raise InvalidArgument("marginals must be non-empty vectors")
    if np.any(a < 0) or np.any(b < 0):
        raise InvalidArgument("marginals must be non-negative")
    if abs(a.sum() - b.sum()) > 1e-9 * max(1.0, a.sum()):
        raise InvalidArgument("marginals must have equal total mass")
    return a, b


def _northwest(a, b):
    m, n = a.size, b.size
    cells = []
    ra, rb = a.copy(), b.copy()
    i = j = 0
    while i < m and j < n:
        cells.append((i, j))
        x = min(ra[i], rb[j])
        ra[i] -= x
        rb[j] -= x
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return cells


def _tree_adjacency(m, n, basis):
    # row nodes 0..m-1, column nodes m..m+n-1
    adj = [[] for _ in range(m + n)]
    for i, j in basis:
        adj[i].append(m + j)
        adj[m + j].append(i)
    return adj


def _flows(a, b, basis):
    """Basic flows by peeling leaves of the spanning tree."""
    m, n = a.size, b.size
    adj = _tree_adjacency(m, n, basis)
    residual = np.concatenate([a, b])
    degree = [len(x) for x in adj]
    used = set()
    flow = {}
    queue = deque(v for v in range(m + n) if degree[v] == 1)
    while queue:
        v = queue.popleft()
        if degree[v] != 1:
            continue
        w = next(u for u in adj[v] if (min(u, v), max(u, v)) not in used)
        used.add((min(w, v), max(w, v)))
        cell = (v, w - m) if v < m else (w, v - m)
        x = residual[v]
        flow[cell] = x
        residual[w] -= x
        degree[v] -= 1
        degree[w] -= 1
        if degree[w] == 1:
            queue.append(w)
    return flow


def _duals(C, m, n, basis):
    adj = _tree_adjacency(m, n, basis)
    pot = [None] * (m + n)
    pot[0] = 0.0
    stack = [0]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if pot[w] is None:
                if v < m:
                    pot[w] = C[v, w - m] - pot[v]
                else:
                    pot[w] = C[w, v - m] - pot[v]
                stack.append(w)
    return np.array(pot[:m]), np.array(pot[m:])


def _tree_path(adj, start, goal):
    prev = {start: None}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        if v == goal:
            break
        for w in adj[v]:
            if w not in prev:
                prev[w] = v
                queue.append(w)
    path = [goal]
    while path[-1] != start:
        path.append(prev[path[-1]])
    return path[::-1]


def solve_transportation(a, b, C):
    """Optimal plan for marginals a, b and cost matrix C.

    Returns (pi, cost, unique). ``unique`` is True when every nonbasic reduced
    cost is strictly positive, i.e. the optimal basis is the only one.
    """
    a, b = _check_marginals(a, b)
    C = np.asarray(C, dtype=float)
    m, n = a.size, b.size
    if C.shape != (m, n):
        raise InvalidArgument(f"cost matrix shape {C.shape} != ({m}, {n})")
    scale = max(1.0, float(np.abs(C).max()))
    tol = 1e-12 * scale
    basis = _northwest(a, b)
    degenerate_run = 0
    for _ in range(MAX_PIVOTS):
        u, v = _duals(C, m, n, basis)
        reduced = C - u[:, None] - v[None, :]
        for i, j in basis:
            reduced[i, j] = 0.0
        negative = np.flatnonzero(reduced.ravel() < -tol)
        if negative.size == 0:
            break
        if degenerate_run < BLAND_AFTER:
            flat = reduced.ravel()
            pick = int(negative[np.argmin(flat[negative])])
        else:
            pick = int(negative[0])
        ei, ej = divmod(pick, n)
        flow = _flows(a, b, basis)
        adj = _tree_adjacency(m, n, basis)
        path = _tree_path(adj, ei, m + ej)
        minus = []
        for k in range(len(path) - 1):
            x, y = path[k], path[k + 1]
            cell = (x, y - m) if x < m else (y, x - m)
            if k % 2 == 0:
                minus.append(cell)
        theta = min(max(flow[c], 0.0) for c in minus)
        ties = [c for c in minus if max(flow[c], 0.0) <= theta + 1e-15]
        leave = min(ties, key=lambda c: c[0] * n + c[1])
        degenerate_run = degenerate_run + 1 if theta <= 1e-15 else 0
        basis = [c for c in basis if c != leave] + [(ei, ej)]
    else:
        raise CapacityError("transportation simplex exceeded pivot limit")
    flow = _flows(a, b, basis)
    pi = np.zeros((m, n))
    for (i, j), x in flow.items():
        pi[i, j] = max(x, 0.0)
    u, v = _duals(C, m, n, basis)
    reduced = C - u[:, None] - v[None, :]
    mask = np.ones((m, n), dtype=bool)
    for i, j in basis:
        mask[i, j] = False
    unique = bool(np.all(reduced[mask] > UNIQUE_TOL * scale))
    return pi, float((pi * C).sum()), unique


def brute_force_transportation(a, b, C):
    """Oracle: minimum over all basic feasible solutions (spanning trees)."""
    a, b = _check_marginals(a, b)
    C = np.asarray(C, dtype=float)
    m, n = a.size, b.size
    if m > BRUTE_MAX or n > BRUTE_MAX:
        raise CapacityError(f"brute force limited to {BRUTE_MAX}x{BRUTE_MAX}, got {m}x{n}")
    cells = [(i, j) for i in range(m) for j in range(n)]
    need = m + n - 1
    rhs = np.concatenate([a, b])
    best = (math.inf, None)

    parent = list(range(m + n))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    def solve(chosen):
        A = np.zeros((m + n, need))
        for k, (i, j) in enumerate(chosen):
            A[i, k] = 1.0
            A[m + j, k] = 1.0
        x = np.linalg.lstsq(A, rhs, rcond=None)[0]
        return x

    def visit(start, chosen):
        nonlocal best
        if len(chosen) == need:
            x = solve(chosen)
            if np.all(x >= -1e-12):
                pi = np.zeros((m, n))
                for (i, j), val in zip(chosen, x):
                    pi[i, j] = max(val, 0.0)
                cost = float((pi * C).sum())
                if cost < best[0] - 1e-14:
                    best = (cost, pi)
            return
        if len(cells) - start < need - len(chosen):
            return
        for k in range(start, len(cells)):
            i, j = cells[k]
            ri, rj = find(i), find(m + j)
            if ri == rj:
                continue
            saved = parent[ri]
            parent[ri] = rj
            chosen.append(cells[k])
            visit(k + 1, chosen)
            chosen.pop()
            parent[ri] = saved

    visit(0, [])
    return best[1], best[0]


# ---------------------------------------------------------------------------
# measures on a graph

def cost_matrix(g: MetricGraph, src, tgt) -> np.ndarray:
    return np.array([[g.distance(p, q) ** 2 for q in tgt] for p in src], dtype=float)


def _check_size(m1, m2):
    if len(m1) + len(m2) > MAX_ATOMS:
        raise CapacityError(f"combined support {len(m1) + len(m2)} exceeds {MAX_ATOMS} atoms")


def solve_ot(g: MetricGraph, m1: DiscreteMeasure, m2: DiscreteMeasure) -> TransportPlan:
    _check_size(m1, m2)
    C = cost_matrix(g, m1.points, m2.points)
    a, b = np.asarray(m1.masses), np.asarray(m2.masses)
    if len(m1) == 1 or len(m2) == 1:
        pi = np.outer(a, b)
        return TransportPlan(m1.points, m2.points, pi, float((pi * C).sum()), True)
    pi, cost, unique = solve_transportation(a, b, C)
    return TransportPlan(m1.points, m2.points, pi, cost, unique)


def brute_force_ot(g: MetricGraph, m1: DiscreteMeasure, m2: DiscreteMeasure) -> TransportPlan:
    C = cost_matrix(g, m1.points, m2.points)
    pi, cost = brute_force_transportation(m1.masses, m2.masses, C)
    return TransportPlan(m1.points, m2.points, pi, cost, True)


def is_plan_unique(plan: TransportPlan) -> bool:
    return plan.unique


def w2(g: MetricGraph, m1: DiscreteMeasure, m2: DiscreteMeasure) -> float:
    if m1 == m2:
        return 0.0
    return math.sqrt(max(solve_ot(g, m1, m2).cost, 0.0))


def displacement(g: MetricGraph, plan: TransportPlan, t: float) -> DiscreteMeasure:
    """Push every plan cell along its geodesic to parameter ``t``."""
    # off trees, geodesic_point raises on tied shortest paths instead of choosing
    atoms = [(g.geodesic_point(plan.source[k], plan.target[l], t), mass)
             for k, l, mass in plan.entries()]
    return DiscreteMeasure(atoms)


def geodesic_measure(g: MetricGraph, m1: DiscreteMeasure, m2: DiscreteMeasure, t: float) -> DiscreteMeasure:
    return displacement(g, solve_ot(g, m1, m2), t)


def field_w(g: MetricGraph, f1: MemoryField, f2: MemoryField) -> float:
    if not f1.same_layout(f2):
        raise InvalidArgument("fields must share fiber ids and weights")
    return math.sqrt(sum(f.weight * w2(g, f.measure, f2[f.id]) ** 2 for f in f1))
