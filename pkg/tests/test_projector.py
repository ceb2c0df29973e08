import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hwg.errors import InvalidArgument
from hwg.graph import VertexRef, star_tree
from hwg.measures import DiscreteMeasure, MemoryField
from hwg.projector import (LabeledChain, consensus_gap, empirical_backward_mean,
                           expectation_operator, fiber_rng, observable_closed_form, ode_limit,
                           ode_vector, project_trajectory, recurrence, sample_backward)
from hwg.scheme import ConstantTarget, PurelyQuadratic, contraction_factor, run_scheme
from hwg.transport import solve_ot

from conftest import leaves


def _one_step(star3, uniform3, skewed3):
    plan = solve_ot(star3, uniform3, skewed3)
    traj = run_scheme(star3, MemoryField([("x", 1.0, uniform3)]), PurelyQuadratic(1.0), 1.0, 1,
                      ConstantTarget({"x": skewed3}))
    return plan, traj.fields[1]["x"]


def test_expectation_example(star3, uniform3, skewed3):
    plan, rho1 = _one_step(star3, uniform3, skewed3)
    out = expectation_operator(star3, rho1, plan, 0.5, leaves(3), rho1)
    assert out.vector(leaves(3)) == pytest.approx([1 / 2, 1 / 4, 1 / 4], abs=1e-15)


def test_monte_carlo_matches_expectation(star3, uniform3, skewed3):
    plan, rho1 = _one_step(star3, uniform3, skewed3)
    exp = expectation_operator(star3, rho1, plan, 0.5, leaves(3), rho1)
    emp = empirical_backward_mean(star3, rho1, plan, 0.5, leaves(3), rho1, draws=100_000, seed=3)
    assert emp.l1_gap(exp) <= 0.01 * 3
    assert max(abs(emp.mass_of(p) - exp.mass_of(p)) for p in leaves(3)) <= 0.01


def test_single_sample_lands_on_leaves(star3, uniform3, skewed3):
    plan, rho1 = _one_step(star3, uniform3, skewed3)
    s = sample_backward(star3, rho1, plan, 0.5, leaves(3), rho1, seed=11)
    assert s.supported_on(leaves(3))
    again = sample_backward(star3, rho1, plan, 0.5, leaves(3), rho1, seed=11)
    assert s == again


def test_support_outside_chain_rejected(star3, uniform3, skewed3):
    plan, rho1 = _one_step(star3, uniform3, skewed3)
    off = DiscreteMeasure.dirac(VertexRef(0))
    with pytest.raises(InvalidArgument):
        expectation_operator(star3, off, plan, 0.5, leaves(3), uniform3)


def test_fiber_streams_are_independent_of_order():
    a = fiber_rng(7, "x", 3).random(4)
    fiber_rng(7, "y", 3).random(10)
    assert np.array_equal(a, fiber_rng(7, "x", 3).random(4))
    assert not np.array_equal(a, fiber_rng(7, "y", 3).random(4))


def _random_trajectory(seed, steps, tau=1.0, alpha=1.0, M=3):
    rng = np.random.default_rng(seed)
    g = star_tree([1.0] * M)
    leaf_measure = lambda: DiscreteMeasure(zip(leaves(M), rng.dirichlet(np.ones(M))))
    field0 = MemoryField([("a", 0.5, leaf_measure()), ("b", 0.5, leaf_measure())])
    hs = [{"a": leaf_measure(), "b": leaf_measure()} for _ in range(steps)]
    return g, run_scheme(g, field0, PurelyQuadratic(alpha), tau, steps, lambda r, c, n: hs[n]), hs


@pytest.mark.parametrize("seed", [0, 1])
def test_composed_projection_is_the_recurrence(seed):
    g, traj, hs = _random_trajectory(seed, 50)
    proj = project_trajectory(g, traj)
    assert proj.max_gap <= 1e-12
    t = contraction_factor(1.0, 1.0)
    for fid in ("a", "b"):
        closed = observable_closed_form(traj.fields[0][fid], [h[fid] for h in hs], t, 50)
        assert np.abs(closed.vector(leaves(3)) - proj.recurrence[fid][-1]).max() <= 1e-12


def test_labeled_chain_rejects_internal_signal(star3, uniform3):
    chain = LabeledChain(star3, uniform3, leaves(3))
    hub = DiscreteMeasure.dirac(VertexRef(0))
    with pytest.raises(InvalidArgument):
        chain.advance(solve_ot(star3, uniform3, hub), 0.5, hub)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 12), st.floats(0.01, 0.99))
def test_closed_form_equals_recurrence(seed, n, t):
    rng = np.random.default_rng(seed)
    m = lambda: DiscreteMeasure(zip(leaves(4), rng.dirichlet(np.ones(4))))
    rho0, hs = m(), [m() for _ in range(n)]
    rec = recurrence(rho0, hs, t)
    for k in range(n + 1):
        assert observable_closed_form(rho0, hs, t, k).max_gap(rec[k]) <= 1e-12


def test_ode_constant_signal(uniform3, skewed3):
    out = ode_limit(uniform3, [(0.0, 2.0, skewed3)], 1.5, 2.0)
    want = math.exp(-3.0) * uniform3.vector(leaves(3)) + (1 - math.exp(-3.0)) * skewed3.vector(leaves(3))
    assert out.vector(leaves(3)) == pytest.approx(want, abs=1e-15)


def test_ode_pieces_must_tile():
    with pytest.raises(InvalidArgument):
        ode_vector([1.0, 0.0], [(0.0, 0.5, [0.0, 1.0]), (0.75, 1.0, [1.0, 0.0])], 1.0, 1.0)


def ode_gap(tau, alpha=1.0, horizon=2.0):
    """Sup over grid times of |discrete observable - exact ODE| for a signal
    switching at t = 1 (aligned with every tau in the halving list)."""
    h1, h2 = np.array([0.7, 0.2, 0.1]), np.array([0.1, 0.3, 0.6])
    rho0 = np.array([1 / 3, 1 / 3, 1 / 3])
    t = contraction_factor(alpha, tau)
    steps = int(round(horizon / tau))
    vec, worst = rho0.copy(), 0.0
    for n in range(steps):
        h = h1 if n * tau < 1.0 else h2
        vec = (1 - t) * vec + t * h
        time = (n + 1) * tau
        pieces = [(0.0, 1.0, h1), (1.0, horizon, h2)]
        exact = ode_vector(rho0, pieces, alpha, time)
        worst = max(worst, float(np.abs(vec - exact).max()))
    return worst


def test_ode_limit_first_order():
    gaps = [ode_gap(tau) for tau in (1 / 4, 1 / 8, 1 / 16, 1 / 32)]
    for a, b in zip(gaps, gaps[1:]):
        assert 1.5 <= a / b <= 3.0


def test_consensus_factor_and_rate(star3):
    rng = np.random.default_rng(5)
    m = lambda: DiscreteMeasure(zip(leaves(3), rng.dirichlet(np.ones(3))))
    fa = MemoryField([("x", 1.0, m()), ("y", 0.5, m())])
    fb = MemoryField([("x", 1.0, m()), ("y", 0.5, m())])
    run = consensus_gap(star3, fa, fb, alpha=1.0, tau=1 / 16, steps=40)
    assert run.max_recurrence_error <= 1e-12
    assert abs(run.rate + 2.0) / 2.0 <= 0.05
    assert run.discrete_factor == pytest.approx(1 - 2 * contraction_factor(1.0, 1 / 16))
