"""Finitely supported probability measures, memory fields and contexts."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidArgument
from .graph import EdgePoint, GraphPoint, MetricGraph, VertexRef, parse_point, point_key, point_literal

# atoms lighter than this after arithmetic are dropped and the rest renormalized
PRUNE = 1e-15
# accepted deviation of user-supplied total mass from 1 (renormalized afterwards)
MASS_TOL = 1e-9
# edge points on one edge closer than this (relative) are merged into one atom
MERGE = 1e-12


def _same_point(p, q):
    if p == q:
        return True
    if isinstance(p, EdgePoint) and isinstance(q, EdgePoint) and p.edge == q.edge:
        return abs(p.offset - q.offset) <= MERGE * max(1.0, abs(p.offset))
    return False


class DiscreteMeasure:
    """Probability measure with finitely many atoms, sorted by point order."""

    __slots__ = ("points", "masses")

    def __init__(self, atoms: Iterable[tuple[GraphPoint, float]], graph: MetricGraph | None = None):
        items = []
        for p, m in atoms:
            m = float(m)
            if not m >= 0 or not math.isfinite(m):
                raise InvalidArgument(f"atom mass must be non-negative, got {m}")
            if graph is not None:
                p = graph.canonical(p)
            items.append((p, m))
        total = sum(m for _, m in items)
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidArgument(f"masses sum to {total!r}, expected 1")
        items.sort(key=lambda a: point_key(a[0]))
        merged: list[list] = []
        for p, m in items:
            if merged and _same_point(merged[-1][0], p):
                merged[-1][1] += m
            else:
                merged.append([p, m])
        merged = [a for a in merged if a[1] > PRUNE]
        if not merged:
            raise InvalidArgument("measure has no mass")
        masses = np.array([m for _, m in merged])
        masses = masses / masses.sum()
        masses.setflags(write=False)
        self.points = tuple(p for p, _ in merged)
        self.masses = masses

    @classmethod
    def dirac(cls, p: GraphPoint, graph: MetricGraph | None = None) -> "DiscreteMeasure":
        return cls([(p, 1.0)], graph)

    @classmethod
    def on_vertices(cls, vertices: Sequence[int], masses: Sequence[float]) -> "DiscreteMeasure":
        return cls(zip([VertexRef(v) for v in vertices], masses))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(zip(self.points, self.masses.tolist()))

    def __repr__(self):
        body = ", ".join(f"{p!r}: {m:.6g}" for p, m in self)
        return f"DiscreteMeasure({{{body}}})"

    def mass_of(self, p: GraphPoint) -> float:
        for q, m in self:
            if _same_point(p, q):
                return m
        return 0.0

    def as_dict(self) -> dict:
        return dict(zip(self.points, self.masses.tolist()))

    def vector(self, points: Sequence[GraphPoint]) -> np.ndarray:
        """Masses on a fixed list of points; mass off that list raises."""
        index = {p: k for k, p in enumerate(points)}
        out = np.zeros(len(points))
        for p, m in self:
            if p not in index:
                raise InvalidArgument(f"atom {p!r} outside the given point list")
            out[index[p]] += m
        return out

    def supported_on(self, points: Iterable[GraphPoint]) -> bool:
        allowed = set(points)
        return all(p in allowed for p in self.points)

    def max_gap(self, other: "DiscreteMeasure") -> float:
        """Largest absolute mass difference over the union of supports."""
        a, b = self.as_dict(), other.as_dict()
        return max(abs(a.get(p, 0.0) - b.get(p, 0.0)) for p in set(a) | set(b))

    def l1_gap(self, other: "DiscreteMeasure") -> float:
        a, b = self.as_dict(), other.as_dict()
        return sum(abs(a.get(p, 0.0) - b.get(p, 0.0)) for p in set(a) | set(b))

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return self.points == other.points and np.array_equal(self.masses, other.masses)

    def __hash__(self):
        return hash((self.points, self.masses.tobytes()))

    def to_literal(self) -> list:
        return [{"point": point_literal(p), "mass": m} for p, m in self]

    @classmethod
    def from_literal(cls, lit, graph: MetricGraph | None = None) -> "DiscreteMeasure":
        return cls([(parse_point(a["point"]), a["mass"]) for a in lit], graph)


def from_vector(points: Sequence[GraphPoint], masses) -> DiscreteMeasure:
    """Measure from parallel point/mass arrays; zero entries are dropped."""
    return DiscreteMeasure(zip(points, np.asarray(masses, dtype=float)))


def second_moment(m: DiscreteMeasure, g: MetricGraph, basepoint: GraphPoint) -> float:
    return float(sum(mass * g.distance(p, basepoint) ** 2 for p, mass in m))


def mixture(m1: DiscreteMeasure, m2: DiscreteMeasure, t: float) -> DiscreteMeasure:
    if not 0.0 <= t <= 1.0:
        raise InvalidArgument(f"t must lie in [0, 1], got {t}")
    atoms = [(p, (1.0 - t) * m) for p, m in m1] + [(p, t * m) for p, m in m2]
    return DiscreteMeasure(atoms)


@dataclass(frozen=True)
class Fiber:
    id: str
    weight: float
    measure: DiscreteMeasure


class MemoryField:
    """Fiber-indexed family of measures with non-negative fiber weights."""

    __slots__ = ("fibers", "_index")

    def __init__(self, fibers: Iterable):
        fs = []
        for f in fibers:
            if not isinstance(f, Fiber):
                f = Fiber(str(f[0]), float(f[1]), f[2])
            if not f.weight >= 0:
                raise InvalidArgument(f"fiber weight must be >= 0, got {f.weight}")
            fs.append(f)
        ids = [f.id for f in fs]
        if len(set(ids)) != len(ids):
            raise InvalidArgument("fiber ids must be unique")
        if not any(f.weight > 0 for f in fs):
            raise InvalidArgument("at least one fiber weight must be positive")
        self.fibers = tuple(fs)
        self._index = {f.id: k for k, f in enumerate(fs)}

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.fibers)

    @property
    def weights(self) -> dict:
        return {f.id: f.weight for f in self.fibers}

    @property
    def total_weight(self) -> float:
        return sum(f.weight for f in self.fibers)

    def __len__(self):
        return len(self.fibers)

    def __iter__(self):
        return iter(self.fibers)

    def __getitem__(self, fid) -> DiscreteMeasure:
        try:
            return self.fibers[self._index[fid]].measure
        except KeyError:
            raise InvalidArgument(f"unknown fiber {fid!r}") from None

    def weight(self, fid) -> float:
        return self.fibers[self._index[fid]].weight

    def with_measures(self, measures: Mapping) -> "MemoryField":
        return MemoryField(Fiber(f.id, f.weight, measures[f.id]) for f in self.fibers)

    def same_layout(self, other: "MemoryField") -> bool:
        return self.ids == other.ids and all(
            a.weight == b.weight for a, b in zip(self.fibers, other.fibers))

    def __eq__(self, other):
        if not isinstance(other, MemoryField):
            return NotImplemented
        return self.fibers == other.fibers

    def to_literal(self) -> list:
        return [{"fiber": f.id, "weight": f.weight, "measure": f.measure.to_literal()}
                for f in self.fibers]

    @classmethod
    def from_literal(cls, lit, graph: MetricGraph | None = None) -> "MemoryField":
        return cls(Fiber(str(f["fiber"]), float(f["weight"]),
                         DiscreteMeasure.from_literal(f["measure"], graph)) for f in lit)


class Context:
    """Per-fiber complex vectors over a shared finite index set."""

    __slots__ = ("vectors",)

    def __init__(self, vectors: Mapping):
        vs = {str(k): np.asarray(v, dtype=complex).reshape(-1) for k, v in vectors.items()}
        sizes = {v.size for v in vs.values()}
        if len(sizes) > 1:
            raise InvalidArgument(f"context vectors have different lengths {sorted(sizes)}")
        for v in vs.values():
            if not np.all(np.isfinite(v)):
                raise InvalidArgument("context entries must be finite")
        self.vectors = vs

    def __getitem__(self, fid):
        return self.vectors[fid]

    def tv(self, fid) -> float:
        return float(np.abs(self.vectors[fid]).sum())


def context_distance(c1: Context, c2: Context, weights: Mapping) -> float:
    if set(c1.vectors) != set(c2.vectors) or set(weights) - set(c1.vectors):
        raise InvalidArgument("contexts must share fiber sets")
    total = 0.0
    for fid, w in weights.items():
        a, b = c1[fid], c2[fid]
        if a.shape != b.shape:
            raise InvalidArgument("contexts must share the index set")
        total += w * float(np.abs(a - b).sum()) ** 2
    return math.sqrt(total)


def induced_pseudometric(f: MemoryField, g: MetricGraph, x, y) -> float:
    from .transport import w2
    return w2(g, f[x], f[y])
