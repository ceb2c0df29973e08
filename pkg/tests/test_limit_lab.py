import math

import numpy as np
import pytest

from hwg.errors import InvalidArgument, PreconditionError
from hwg.graph import star_tree
from hwg.limit_lab import (edge_embedding, freezing_error_check, groenwall_check,
                           perturbed_edi_check, pre_telescopic_check, quadratic_energy,
                           run_sleep_mode, sleep_mode_check, spectral_stability_check,
                           stability_constants, stability_report, star_sleep_scenario,
                           strong_sleep_scenario, tau_refinement, uniformity, pair_energy)
from hwg.measures import DiscreteMeasure
from hwg.graph import EdgePoint, VertexRef
from hwg.transport import w2

TAUS = [1 / 8, 1 / 16, 1 / 32]


@pytest.fixture(scope="module")
def reports():
    sc = star_sleep_scenario()
    return sc, {t: run_sleep_mode(sc, t, 1.0) for t in TAUS}


def test_edge_embedding_is_lipschitz():
    g = star_tree([1.0, 2.0, 1.0])
    rng = np.random.default_rng(5)
    for _ in range(30):
        pts = [VertexRef(0), VertexRef(1), VertexRef(2), VertexRef(3), EdgePoint(1, 0.7)]
        m1 = DiscreteMeasure(zip(pts, rng.dirichlet(np.ones(5))))
        m2 = DiscreteMeasure(zip(pts, rng.dirichlet(np.ones(5))))
        gap = np.abs(edge_embedding(g, m1) - edge_embedding(g, m2)).sum()
        assert gap <= w2(g, m1, m2) + 1e-12


def test_lipschitz_metadata():
    sc = star_sleep_scenario()
    assert sc.L_C == 0.5 and sc.L_H == 1.0
    want = sc.L_S * 2 * math.sqrt(1 + 0.25) * math.sqrt(1.5)
    assert sc.L == pytest.approx(want)
    assert star_sleep_scenario(declared_L=3.0).L == 3.0


@pytest.mark.parametrize("tau", TAUS)
def test_freezing_bound(reports, tau):
    residuals, v = freezing_error_check(reports[1][tau])
    assert v.passed, v
    assert max(residuals) <= 1e-9


@pytest.mark.parametrize("tau", TAUS)
def test_groenwall(reports, tau):
    step, cum, ratio = groenwall_check(reports[1][tau])
    assert step.passed and cum.passed
    assert ratio <= 1 + 4 * reports[1][tau].alpha * reports[1][tau].L ** 2 * tau


@pytest.mark.parametrize("tau", TAUS)
def test_perturbed_edi_and_pre_telescopic(reports, tau):
    rep = reports[1][tau]
    assert perturbed_edi_check(rep)[1].passed
    assert pre_telescopic_check(rep).passed
    assert sleep_mode_check(rep, reports[0].L_C).passed


def test_stability_and_uniformity(reports):
    stab = [stability_report(reports[1][t], 1.0) for t in TAUS]
    assert all(s.passed for s in stab)
    ok, spread = uniformity(stab)
    assert ok, spread


def test_stability_constants_formula(reports):
    rep = reports[1][1 / 8]
    a, L, e0, m0 = rep.alpha, rep.L, rep.energies[0], rep.moments[0]
    c1, c2, c3 = stability_constants(rep, 2.0)
    assert c1 == pytest.approx(math.exp(8 * a * L * L) * e0)
    assert c2 == pytest.approx(4 * e0 * (1 + 4 * a * L * L * math.exp(8 * a * L * L)))
    assert c3 == pytest.approx((m0 + 2 * c2) * math.exp(2.0))


def test_constant_signal_is_exact():
    sc = star_sleep_scenario(c=0.0)
    assert sc.L == 0.0
    rep = run_sleep_mode(sc, 1 / 8, 1.0)
    residuals, v = freezing_error_check(rep)
    assert v.passed and max(abs(r) for r in residuals) <= rep.w_steps[0] ** 2 / (4 / 8) + 1e-12
    assert all(abs(e - f) <= 1e-12 for e, f in zip(rep.energies[1:], rep.frozen_next))
    assert all(b <= a + 1e-12 for a, b in zip(rep.energies, rep.energies[1:]))


def test_understated_L_is_caught():
    rep = run_sleep_mode(strong_sleep_scenario(declared_L=1e-3), 1 / 16, 1.0)
    _, v = freezing_error_check(rep)
    assert not v.passed
    assert v.lhs > v.rhs


def test_strong_scenario_honest_L_passes():
    rep = run_sleep_mode(strong_sleep_scenario(), 1 / 64, 0.25)
    assert freezing_error_check(rep)[1].passed


def test_groenwall_precondition():
    rep = run_sleep_mode(star_sleep_scenario(declared_L=10.0), 1 / 8, 0.25)
    with pytest.raises(PreconditionError):
        groenwall_check(rep)


def test_horizon_grid():
    with pytest.raises(InvalidArgument):
        run_sleep_mode(star_sleep_scenario(), 0.3, 1.0)


def test_tau_refinement(reports):
    taus = [1 / 4, 1 / 8, 1 / 16, 1 / 32]
    sc = reports[0]
    runs = {t: run_sleep_mode(sc, t, 1.0) for t in taus}
    table = tau_refinement(lambda t: runs[t].fields, sc.graph, taus, [0.5, 1.0],
                           lambda t: stability_constants(runs[t], 1.0)[1])
    assert table.passed, (table.factors, table.holder)
    assert all(1.2 <= f <= 4 for f in table.factors)
    with pytest.raises(InvalidArgument):
        tau_refinement(lambda t: runs[1 / 4].fields, sc.graph, [1 / 4, 1 / 16], [0.5], lambda t: 1.0)


def test_spectral_single_atom():
    E, G = quadratic_energy(1.0, [0.7])
    chk = spectral_stability_check(E, np.array([0.0]), 1.0, grad=G, quadratic=True)
    assert chk.fixed_point[0] == pytest.approx(0.7, abs=1e-9)
    assert chk.lam[0] == pytest.approx(math.exp(-1), abs=1e-6)
    assert not chk.saddle


@pytest.mark.parametrize("tau", [0.25, 0.5, 1.0, 2.0])
def test_spectral_isotropic(tau):
    E, G = quadratic_energy(2.0, [0.5, -0.25])
    chk = spectral_stability_check(E, np.zeros(2), tau, grad=G, quadratic=True)
    assert np.abs(chk.lam - math.exp(-2 * tau)).max() <= 1e-6
    assert max(chk.tau_invariance.values()) <= 1e-9


def test_spectral_flat_direction():
    E = lambda x: 0.5 * float((x[0] - 1.0) ** 2)
    G = lambda x: np.array([x[0] - 1.0, 0.0])
    chk = spectral_stability_check(E, np.array([0.0, 0.3]), 1.0, grad=G, quadratic=True)
    assert chk.lam.max() == pytest.approx(1.0, abs=1e-6)
    assert chk.max_error <= 1e-6


def test_spectral_pair_numeric():
    E, G = pair_energy()
    chk = spectral_stability_check(E, np.zeros(4), 0.5, grad=G)
    assert chk.grad_norm <= 1e-10
    assert chk.max_error <= 1e-4
    assert chk.mu.min() > 0


def test_spectral_saddle_is_flagged():
    E = lambda x: 0.5 * float(x[0] ** 2 - x[1] ** 2)
    G = lambda x: np.array([x[0], -x[1]])
    chk = spectral_stability_check(E, np.zeros(2), 0.5, grad=G, quadratic=True)
    assert chk.saddle
    assert chk.lam.max() == pytest.approx(math.exp(0.5), abs=1e-6)
