import numpy as np
import pytest
from hypothesis import strategies as st

from hwg.graph import EdgePoint, MetricGraph, VertexRef, star_tree
from hwg.measures import DiscreteMeasure


def random_tree(rng, n_vertices):
    """Tree with random parent attachment and lengths in [0.5, 2]."""
    edges = [(int(rng.integers(v)), v, float(rng.uniform(0.5, 2.0))) for v in range(1, n_vertices)]
    return MetricGraph(edges)


def random_measure(rng, g, k):
    pts = []
    for _ in range(k):
        if rng.random() < 0.5:
            pts.append(VertexRef(int(rng.integers(g.n_vertices))))
        else:
            e = int(rng.integers(len(g.edges)))
            pts.append(EdgePoint(e, float(rng.uniform(0.05, 0.95)) * g.edges[e][2]))
    return DiscreteMeasure(zip(pts, rng.dirichlet(np.ones(k))), g)


def leaves(M):
    return [VertexRef(i + 1) for i in range(M)]


@st.composite
def tree_and_measures(draw, n_measures=2, max_vertices=6, max_atoms=4):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    g = random_tree(rng, draw(st.integers(2, max_vertices)))
    ms = [random_measure(rng, g, draw(st.integers(1, max_atoms))) for _ in range(n_measures)]
    return g, ms


@pytest.fixture
def star3():
    return star_tree([1.0, 1.0, 1.0])


@pytest.fixture
def uniform3():
    return DiscreteMeasure(zip(leaves(3), [1 / 3, 1 / 3, 1 / 3]))


@pytest.fixture
def skewed3():
    return DiscreteMeasure(zip(leaves(3), [2 / 3, 1 / 6, 1 / 6]))
