import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hwg.errors import AdmissibilityError, InvalidArgument, PreconditionError
from hwg.mirror import (MirrorProblem, internal_lift, linear_loss, md_step, min_admissible_t,
                        quadratic_loss, run_equivalence, signal_from_md, verify_equivalence)


def test_md_step_examples():
    w = np.array([[0.5], [0.5]])
    out = md_step(w, np.array([[1.0], [0.0]]), 0.1)
    e = math.exp(-0.1)
    assert out[:, 0] == pytest.approx([e / (e + 1), 1 / (e + 1)], abs=1e-15)
    assert np.array_equal(md_step(w, np.zeros((2, 1)), 0.3), w)
    u = np.full((3, 2), 1 / 3)
    assert np.allclose(md_step(u, np.full((3, 2), 0.7), 0.5), u, atol=1e-16)


def test_min_admissible_t():
    assert min_admissible_t(0.1, 1.0) == pytest.approx(1 - math.exp(-0.2))
    assert min_admissible_t(0.5, 1.0) == pytest.approx(0.63212, abs=1e-5)
    assert min_admissible_t(1e-12, 1.0) == pytest.approx(0.0, abs=1e-11)


def test_signal_trivial_cases():
    w = np.array([[0.2], [0.8]])
    assert np.allclose(signal_from_md(w, w, 0.4), w)
    w1 = md_step(w, np.array([[1.0], [0.0]]), 0.1)
    assert np.array_equal(signal_from_md(w, w1, 1.0), w1)
    assert np.allclose(signal_from_md(w, w1, 0.5), 2 * w1 - w)


def test_admissibility_error_reports_index():
    w = np.array([[0.5], [0.5]])
    w1 = np.array([[0.1], [0.9]])
    with pytest.raises(AdmissibilityError) as err:
        signal_from_md(w, w1, 0.5)
    assert err.value.index == (0, 0)
    assert err.value.min_t == pytest.approx(0.8)


def test_gradient_bound_enforced():
    prob = MirrorProblem(linear_loss(np.array([[2.0], [0.0]])), 0.1, 1.0, np.array([[0.5], [0.5]]))
    with pytest.raises(PreconditionError):
        run_equivalence(prob, 3, 0.5)


def test_t_below_threshold_rejected():
    prob = MirrorProblem(linear_loss(np.zeros((2, 1))), 0.5, 1.0, np.array([[0.5], [0.5]]))
    with pytest.raises(PreconditionError):
        run_equivalence(prob, 3, 0.5)


def test_columns_checked():
    with pytest.raises(InvalidArgument):
        MirrorProblem(linear_loss(np.zeros((2, 1))), 0.1, 1.0, np.array([[0.5], [0.6]]))


def test_zero_steps():
    prob = MirrorProblem(linear_loss(np.zeros((2, 1))), 0.1, 1.0, np.array([[0.5], [0.5]]))
    assert verify_equivalence(prob, 0, 0.5) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["linear", "quadratic"]))
def test_equivalence_is_exact(seed, kind):
    rng = np.random.default_rng(seed)
    M, N = int(rng.integers(2, 5)), int(rng.integers(1, 4))
    w0 = rng.dirichlet(np.ones(M), size=N).T
    grad = (linear_loss(rng.uniform(-0.9, 0.9, size=(M, N))) if kind == "linear"
            else quadratic_loss(rng.dirichlet(np.ones(M), size=N).T))
    eta = float(rng.uniform(0.05, 0.5))
    t = 0.5 * (1 + min_admissible_t(eta, 1.0))
    run = run_equivalence(MirrorProblem(grad, eta, 1.0, w0), 100, t)
    assert run.deviation <= 1e-12
    assert run.min_ratio >= 1.0 - 1e-12
    for h in run.signals:
        assert h.min() >= 0
        assert np.abs(h.sum(axis=0) - 1).max() <= 1e-12


def test_internal_lift_matches():
    w0 = np.array([[0.5, 0.2], [0.3, 0.3], [0.2, 0.5]])
    prob = MirrorProblem(linear_loss(np.array([[0.5, -0.3], [0.0, 0.2], [-0.4, 0.1]])), 0.1, 1.0, w0)
    run, lifted, composed = internal_lift(prob, 8, 0.5)
    for n in range(9):
        assert np.abs(lifted[n] - run.w_md[n]).max() <= 1e-12
        assert np.abs(composed[n] - run.w_md[n]).max() <= 1e-12
