import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hwg.errors import InvalidArgument
from hwg.graph import EdgePoint, VertexRef
from hwg.measures import (Context, DiscreteMeasure, MemoryField, context_distance, mixture,
                          second_moment)

from conftest import leaves


def test_mass_checks():
    with pytest.raises(InvalidArgument):
        DiscreteMeasure([(VertexRef(1), 0.5)])
    with pytest.raises(InvalidArgument):
        DiscreteMeasure([(VertexRef(1), -0.1), (VertexRef(2), 1.1)])
    # tiny rounding is accepted and renormalized
    m = DiscreteMeasure([(VertexRef(1), 0.5), (VertexRef(2), 0.5 + 5e-10)])
    assert m.masses.sum() == pytest.approx(1.0, abs=1e-15)


def test_duplicate_points_merge(star3):
    m = DiscreteMeasure([(EdgePoint(0, 0.5), 0.25), (EdgePoint(0, 0.5 + 1e-14), 0.25),
                         (EdgePoint(0, 1.0), 0.5)], star3)
    assert len(m) == 2
    assert m.mass_of(EdgePoint(0, 0.5)) == pytest.approx(0.5)
    assert m.mass_of(VertexRef(1)) == pytest.approx(0.5)


def test_second_moment(star3, uniform3):
    assert second_moment(uniform3, star3, VertexRef(0)) == pytest.approx(1.0)
    assert second_moment(uniform3, star3, VertexRef(1)) == pytest.approx(8 / 3)


def test_mixture_expectation(uniform3, skewed3):
    m = mixture(uniform3, skewed3, 0.25)
    assert np.allclose(m.vector(leaves(3)), [5 / 12, 7 / 24, 7 / 24], atol=1e-15)


def test_field_rules():
    d = DiscreteMeasure.dirac(VertexRef(1))
    with pytest.raises(InvalidArgument):
        MemoryField([("x", 1.0, d), ("x", 1.0, d)])
    with pytest.raises(InvalidArgument):
        MemoryField([("x", 0.0, d)])
    f = MemoryField([("x", 2.0, d), ("y", 0.0, d)])
    assert f.total_weight == 2.0
    assert MemoryField.from_literal(f.to_literal()) == f


def test_context_distance():
    a = Context({"x": [1, 0], "y": [0, 0]})
    b = Context({"x": [0, 1j], "y": [0, 0]})
    assert context_distance(a, b, {"x": 0.25, "y": 1.0}) == pytest.approx(math.sqrt(0.25 * 4))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 10), min_size=1, max_size=6))
def test_vector_round_trip(raw):
    v = np.array(raw) / sum(raw)
    m = DiscreteMeasure(zip(leaves(len(v)), v))
    assert np.allclose(m.vector(leaves(len(v))), v, atol=1e-15)
    back = DiscreteMeasure.from_literal(m.to_literal())
    assert back.points == m.points
    assert back.max_gap(m) <= 1e-15
