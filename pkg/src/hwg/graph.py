"""Metric graphs: exact path distances and constant-speed geodesics.

Points live either at a vertex or in the interior of an edge, measured by
arclength from the edge's first endpoint. All shortest paths are exhaustive
Dijkstra runs over the (desk-scale) vertex set, computed once per graph.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .errors import AmbiguityError, InvalidArgument

# relative tolerance used to snap near-vertex offsets and to detect tied paths
SNAP = 1e-12


@dataclass(frozen=True)
class VertexRef:
    index: int

    def __repr__(self):
        return f"v{self.index}"


@dataclass(frozen=True)
class EdgePoint:
    edge: int
    offset: float

    def __repr__(self):
        return f"e{self.edge}@{self.offset!r}"


GraphPoint = Union[VertexRef, EdgePoint]


def point_key(p: GraphPoint):
    """Total order on points: vertices first, then edge points by (edge, offset)."""
    if isinstance(p, VertexRef):
        return (0, p.index, 0.0)
    return (1, p.edge, p.offset)


class MetricGraph:
    """Finite connected graph with positive edge lengths and the path metric."""

    def __init__(self, edges: Iterable[Sequence], n_vertices: int | None = None,
                 labels: Sequence[str] | None = None):
        parsed = []
        for e in edges:
            if len(e) != 3:
                raise InvalidArgument(f"edge literal must be [a, b, length], got {e!r}")
            a, b, length = int(e[0]), int(e[1]), float(e[2])
            if not (length > 0 and math.isfinite(length)):
                raise InvalidArgument(f"edge length must be positive, got {length}")
            if a == b:
                raise InvalidArgument(f"self-loop at vertex {a}")
            if a < 0 or b < 0:
                raise InvalidArgument("vertex indices must be non-negative")
            parsed.append((a, b, length))
        if not parsed and not n_vertices:
            raise InvalidArgument("graph needs at least one vertex")
        top = max((max(a, b) for a, b, _ in parsed), default=-1) + 1
        n = top if n_vertices is None else int(n_vertices)
        if n < top:
            raise InvalidArgument(f"edge references vertex >= n_vertices={n}")
        self.n_vertices = n
        self.edges = tuple(parsed)
        self.labels = tuple(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != n:
            raise InvalidArgument("one label per vertex required")

        self._edge_index = {}
        self._adj = [[] for _ in range(n)]
        for k, (a, b, length) in enumerate(self.edges):
            key = (min(a, b), max(a, b))
            if key in self._edge_index:
                raise InvalidArgument(f"duplicate edge between {a} and {b}")
            self._edge_index[key] = k
            self._adj[a].append((b, length))
            self._adj[b].append((a, length))

        self._dist, self._npaths, self._pred = zip(*(self._dijkstra(s) for s in range(n)))
        if any(math.isinf(d) for d in self._dist[0]):
            raise InvalidArgument("graph is not connected")

    # ------------------------------------------------------------------
    def _dijkstra(self, source):
        n = self.n_vertices
        dist = [math.inf] * n
        count = [0] * n
        pred = [-1] * n
        dist[source] = 0.0
        count[source] = 1
        heap = [(0.0, source)]
        done = [False] * n
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for v, length in self._adj[u]:
                nd = d + length
                tol = SNAP * max(1.0, nd)
                if nd < dist[v] - tol:
                    dist[v] = nd
                    count[v] = count[u]
                    pred[v] = u
                    heapq.heappush(heap, (nd, v))
                elif abs(nd - dist[v]) <= tol and not done[v]:
                    count[v] += count[u]
        return dist, count, pred

    @property
    def is_tree(self) -> bool:
        return len(self.edges) == self.n_vertices - 1

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def leaves(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.n_vertices) if self.degree(v) == 1)

    def edge_between(self, a: int, b: int) -> int:
        return self._edge_index[(min(a, b), max(a, b))]

    def vertex_distance(self, u: int, v: int) -> float:
        return self._dist[u][v]

    # ------------------------------------------------------------------
    def canonical(self, p: GraphPoint) -> GraphPoint:
        """Validate ``p`` and map edge-end offsets onto the endpoint vertex."""
        if isinstance(p, VertexRef):
            if not 0 <= p.index < self.n_vertices:
                raise InvalidArgument(f"dangling vertex index {p.index}")
            return p
        if isinstance(p, EdgePoint):
            if not 0 <= p.edge < len(self.edges):
                raise InvalidArgument(f"dangling edge index {p.edge}")
            a, b, length = self.edges[p.edge]
            tol = SNAP * max(1.0, length)
            if not -tol <= p.offset <= length + tol:
                raise InvalidArgument(f"offset {p.offset} outside edge {p.edge} of length {length}")
            if p.offset <= tol:
                return VertexRef(a)
            if p.offset >= length - tol:
                return VertexRef(b)
            return EdgePoint(p.edge, float(p.offset))
        raise InvalidArgument(f"not a graph point: {p!r}")

    def _anchors(self, p):
        """(vertex, distance from p to that vertex along p's own edge)."""
        if isinstance(p, VertexRef):
            return [(p.index, 0.0)]
        a, b, length = self.edges[p.edge]
        return [(a, p.offset), (b, length - p.offset)]

    def _routes(self, p, q):
        routes = []
        if isinstance(p, EdgePoint) and isinstance(q, EdgePoint) and p.edge == q.edge:
            routes.append((abs(p.offset - q.offset), None, None, 1))
        for u, du in self._anchors(p):
            for v, dv in self._anchors(q):
                routes.append((du + self._dist[u][v] + dv, u, v, self._npaths[u][v]))
        return routes

    def distance(self, p: GraphPoint, q: GraphPoint) -> float:
        p, q = self.canonical(p), self.canonical(q)
        if p == q:
            return 0.0
        return min(r[0] for r in self._routes(p, q))

    def vertex_path(self, u: int, v: int) -> list[int]:
        path = [v]
        while path[-1] != u:
            path.append(self._pred[u][path[-1]])
        return path[::-1]

    def geodesic_point(self, p: GraphPoint, q: GraphPoint, t: float) -> GraphPoint:
        """Point at arclength ``t * distance(p, q)`` from ``p`` on the shortest path.

        Raises AmbiguityError when several shortest paths join p and q.
        """
        if not 0.0 <= t <= 1.0:
            raise InvalidArgument(f"t must lie in [0, 1], got {t}")
        p, q = self.canonical(p), self.canonical(q)
        if p == q or t == 0.0:
            return p
        if t == 1.0:
            return q
        routes = self._routes(p, q)
        d = min(r[0] for r in routes)
        tol = SNAP * max(1.0, d)
        best = [r for r in routes if r[0] <= d + tol]
        n_paths = sum(r[3] for r in best)
        if n_paths > 1:
            raise AmbiguityError(
                f"{n_paths} shortest paths between {p!r} and {q!r}", n_paths)
        _, u, v, _ = best[0]
        return self._walk(self._segments(p, q, u, v), t * d, q)

    def _segments(self, p, q, u, v):
        if u is None:
            return [(p.edge, p.offset, q.offset)]
        segs = []
        if isinstance(p, EdgePoint):
            a, _, length = self.edges[p.edge]
            segs.append((p.edge, p.offset, 0.0 if u == a else length))
        path = self.vertex_path(u, v)
        for x, y in zip(path, path[1:]):
            k = self.edge_between(x, y)
            a, _, length = self.edges[k]
            segs.append((k, 0.0, length) if x == a else (k, length, 0.0))
        if isinstance(q, EdgePoint):
            a, _, length = self.edges[q.edge]
            segs.append((q.edge, 0.0 if v == a else length, q.offset))
        return segs

    def _walk(self, segs, s, q):
        for k, start, end in segs:
            seglen = abs(end - start)
            if s <= seglen:
                offset = start + s if end >= start else start - s
                return self.canonical(EdgePoint(k, min(max(offset, 0.0), self.edges[k][2])))
            s -= seglen
        return q

    def to_literal(self) -> dict:
        out = {"edges": [[a, b, length] for a, b, length in self.edges]}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_literal(cls, lit: dict) -> "MetricGraph":
        return cls(lit["edges"], n_vertices=lit.get("n_vertices"), labels=lit.get("labels"))


def star_tree(leaf_lengths: Sequence[float]) -> MetricGraph:
    """Star with hub vertex 0 and leaf i joined to it by edge i-1."""
    if len(leaf_lengths) < 1:
        raise InvalidArgument("a star needs at least one leaf")
    for length in leaf_lengths:
        if not length > 0:
            raise InvalidArgument(f"leaf length must be positive, got {length}")
    return MetricGraph([(0, i + 1, float(length)) for i, length in enumerate(leaf_lengths)])


def parse_point(obj) -> GraphPoint:
    """Config/JSON literal -> point: {"vertex": i} or {"edge": k, "offset": s}."""
    if isinstance(obj, dict):
        if "vertex" in obj:
            return VertexRef(int(obj["vertex"]))
        if "edge" in obj:
            return EdgePoint(int(obj["edge"]), float(obj["offset"]))
    if isinstance(obj, int):
        return VertexRef(obj)
    raise InvalidArgument(f"cannot parse point literal {obj!r}")


def point_literal(p: GraphPoint) -> dict:
    if isinstance(p, VertexRef):
        return {"vertex": p.index}
    return {"edge": p.edge, "offset": p.offset}


def point_label(p: GraphPoint) -> str:
    if isinstance(p, VertexRef):
        return f"v{p.index}"
    return f"e{p.edge}@{p.offset!r}"
