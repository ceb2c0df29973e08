import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hwg.errors import InvalidArgument, PreconditionError
from hwg.spectral import (SpectralNetwork, alignment_cosines, alignment_energy, circle_fact,
                          equilibrium_amplitude, forward_expected, forward_sample, grad_amplitude,
                          grad_phase, grad_structural, gradients, hebbian_equilibrium_residual,
                          internal_cosines, local_energy_affine, observable_weights,
                          pressure_report, project_simplex, pruning_scenario, run_plasticity,
                          selectivity_scenario, synchronized_scenario)


def random_net(rng, M=None, N=None):
    M = M or int(rng.integers(1, 5))
    N = N or int(rng.integers(1, 4))
    net = SpectralNetwork(p=rng.dirichlet(np.ones(M), size=N).T, r=rng.uniform(0.1, 2, (M, N)),
                          theta=rng.uniform(0, 2 * math.pi, (M, N)),
                          a=rng.normal(size=N) + 1j * rng.normal(size=N),
                          b=rng.normal(size=N) + 1j * rng.normal(size=N))
    psi = rng.normal(size=M) + 1j * rng.normal(size=M)
    phi = rng.normal(size=N) + 1j * rng.normal(size=N)
    return net, psi, phi


def test_observable_weight_example():
    net = SpectralNetwork(p=[[0.5], [0.5]], r=[[2.0], [1.0]], theta=[[math.pi], [0.0]], a=[1], b=[0])
    assert observable_weights(net)[0, 0] == pytest.approx(-1.0)


def test_forward_matches_matrix_product():
    rng = np.random.default_rng(0)
    net, psi, _ = random_net(rng, 3, 2)
    W = net.p * net.r * np.exp(1j * net.theta)
    ps, pred = forward_expected(net, psi)
    assert np.abs(ps - np.array([sum(psi[i] * W[i, j] for i in range(3)) for j in range(2)])).max() <= 1e-14
    assert np.allclose(pred, net.a * ps + net.b)


def test_dimension_mismatch():
    net, psi, phi = random_net(np.random.default_rng(1), 3, 2)
    with pytest.raises(InvalidArgument):
        forward_expected(net, psi[:2])


def test_energy_examples():
    net = SpectralNetwork(p=[[1.0]], r=[[0.0]], theta=[[0.0]], a=[1.0], b=[0.0])
    assert alignment_energy(net, [1.0], [1.0]) == pytest.approx(0.5)
    net2 = SpectralNetwork(p=[[1.0]], r=[[1.0]], theta=[[0.0]], a=[1.0], b=[0.0])
    assert alignment_energy(net2, [1.0], [1.0]) == 0.0


def test_sampling_two_atom_embedding():
    emb = {(0, 0): ([1.0, -1.0], [0.5, 0.5])}
    net = SpectralNetwork(p=[[1.0]], r=[[0.0]], theta=[[0.0]], a=[1.0], b=[0.0], embeddings=emb)
    vals = {complex(forward_sample(net, [2.0], seed=3, draw=d)[0][0]) for d in range(50)}
    assert vals == {2.0, -2.0}
    draws = [forward_sample(net, [2.0], seed=4, draw=d)[0][0] for d in range(20000)]
    assert abs(np.mean(draws)) <= 0.05


def test_simplex_projection():
    v = project_simplex([0.9, 0.6, -0.3])
    assert v.sum() == pytest.approx(1.0)
    assert v.min() >= 0
    assert np.allclose(project_simplex([0.2, 0.3, 0.5]), [0.2, 0.3, 0.5])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_local_energy_matches_norm(seed):
    net, psi, phi = random_net(np.random.default_rng(seed))
    total = sum(local_energy_affine(net, psi, phi, j) for j in range(net.shape[1]))
    assert abs(total - alignment_energy(net, psi, phi)) <= 1e-12 * max(1.0, total)
    offset = sum(0.5 * abs(phi[j] - net.b[j]) ** 2 for j in range(net.shape[1]))
    full = sum(local_energy_affine(net, psi, phi, j, convention="full") for j in range(net.shape[1]))
    assert full - total == pytest.approx(offset, rel=1e-12, abs=1e-12)


def _fd(net, psi, phi, which, i, j, h=1e-6):
    def e(delta):
        arr = getattr(net, which).copy()
        arr[i, j] += delta
        # p is perturbed as a free coordinate; the energy formula does not need the simplex
        probe = net.copy(**{which: arr})
        return alignment_energy(probe, psi, phi)
    return (e(h) - e(-h)) / (2 * h)


def _free_copy(net):
    # allow p off the simplex for finite differences
    class Loose(SpectralNetwork):
        def __post_init__(self):
            pass
    return Loose(net.p, net.r, net.theta, net.a, net.b)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_gradients_match_finite_differences(seed):
    net, psi, phi = random_net(np.random.default_rng(seed))
    loose = _free_copy(net)
    gp, gr, gt = gradients(net, psi, phi)
    M, N = net.shape
    for i in range(M):
        for j in range(N):
            for which, an, closed in (("p", gp, grad_structural), ("r", gr, grad_amplitude),
                                      ("theta", gt, grad_phase)):
                fd = _fd(loose, psi, phi, which, i, j)
                assert abs(fd - an[i, j]) / max(1.0, abs(an[i, j])) <= 1e-6
                assert abs(closed(net, psi, phi, i, j) - an[i, j]) <= 1e-12 * max(1.0, abs(an[i, j]))


def test_zero_input_gives_zero_gradient():
    net, _, phi = random_net(np.random.default_rng(2), 3, 1)
    psi = np.array([0.0, 1.0, 1j])
    assert grad_amplitude(net, psi, phi, 0, 0) == 0.0
    assert grad_structural(net, psi, phi, 0, 0) == 0.0


def test_single_synapse_equilibrium():
    net = SpectralNetwork(p=[[1.0]], r=[[0.5]], theta=[[0.2]], a=[2.0], b=[0.1])
    psi, phi = np.array([1.5 * np.exp(0.3j)]), np.array([0.1 + 2.0 * np.exp(0.9j)])
    want = 2.0 / (2.0 * 1.5 * 1.0) * math.cos(0.2 + 0.3 - 0.9)
    assert equilibrium_amplitude(net, psi, phi, 0, 0) == pytest.approx(want)
    anti = net.copy(theta=np.array([[0.2 + math.pi]]))
    assert equilibrium_amplitude(anti, psi, phi, 0, 0) < 0


def test_degenerate_equilibrium():
    net = SpectralNetwork(p=[[1.0]], r=[[0.5]], theta=[[0.0]], a=[1.0], b=[0.0])
    with pytest.raises(PreconditionError):
        equilibrium_amplitude(net, [0.0], [1.0], 0, 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_anti_alignment_grows_both_gradients(seed):
    # synchronized group (phases within a quarter turn) facing away from the target
    rng = np.random.default_rng(seed)
    M = int(rng.integers(1, 5))
    beta = rng.uniform(0, 2 * math.pi)
    spread = rng.uniform(-0.3, 0.3, M)
    a, b = complex(rng.uniform(0.5, 2)) * np.exp(1j * rng.uniform(0, 6)), complex(rng.normal())
    psi = rng.uniform(0.5, 2, M) * np.exp(1j * rng.uniform(0, 6, M))
    theta = (beta + spread - np.angle(psi))[:, None]
    delta = rng.uniform(-1.2, 1.2)
    phi = np.array([b + a * rng.uniform(0.1, 3) * np.exp(1j * (beta + math.pi + delta))])
    net = SpectralNetwork(p=rng.dirichlet(np.ones(M))[:, None], r=rng.uniform(0.1, 2, (M, 1)),
                          theta=np.mod(theta, 2 * math.pi), a=[a], b=[b])
    assert internal_cosines(net, psi, 0).min() > 0
    cos = alignment_cosines(net, psi, phi, 0)
    gp, gr, _ = gradients(net, psi, phi)
    for i in np.nonzero(cos < 0)[0]:
        assert gr[i, 0] > 0 and gp[i, 0] > 0


def test_circle_fact():
    found, example = circle_fact(1.0, 4)
    assert found == {1: True, 2: True, 3: True, 4: False}
    angles = np.deg2rad(example[3])
    assert all(math.cos(x - y) < 0 for k, x in enumerate(angles) for y in angles[k + 1:])


def test_pruning():
    net, psi, phi, free = pruning_scenario()
    run = run_plasticity(net, psi, phi, 500, 0.1, free=free)
    assert run.net.p[2, 0] == 0.0
    assert all(b <= a for a, b in zip(run.energies, run.energies[1:]))


def test_selectivity():
    net, psi, phi, free = selectivity_scenario()
    run = run_plasticity(net, psi, phi, 500, 0.1, free=free)
    assert run.net.p[0, 0] == pytest.approx(1.0)
    assert run.net.p[1:, 0].max() == 0.0
    rep = pressure_report(run.net, psi, phi, 0)
    assert rep.residual == 0.0 and rep.kkt_ok


def test_synchronized_alignment_and_equilibrium():
    net, psi, phi, free = synchronized_scenario()
    run = run_plasticity(net, psi, phi, 20000, 0.2, free=free)
    fin = run.net
    assert not run.stalled
    assert alignment_cosines(fin, psi, phi, 0).min() >= 0
    assert pressure_report(fin, psi, phi, 0).residual <= 1e-6
    for i in range(3):
        assert abs(hebbian_equilibrium_residual(fin, psi, phi, i, 0)) <= 1e-9
    for col in fin.p.T:
        assert abs(col.sum() - 1) <= 1e-12 and col.min() >= 0


def test_stationary_start_stays_put():
    net = SpectralNetwork(p=[[1.0]], r=[[1.0]], theta=[[0.0]], a=[1.0], b=[0.0])
    run = run_plasticity(net, [1.0], [1.0], 10, 0.1)
    assert np.array_equal(run.net.r, net.r) and run.energies[-1] == 0.0


def test_real_mode_restrictions():
    with pytest.raises(InvalidArgument):
        SpectralNetwork(p=[[1.0]], r=[[1.0]], theta=[[0.5]], a=[1.0], b=[0.0], real=True)
    net = SpectralNetwork(p=[[0.5], [0.5]], r=[[1.0], [1.0]], theta=[[0.0], [math.pi]], a=[1.0],
                          b=[0.0], real=True)
    run = run_plasticity(net, [1.0, 1.0], [0.7], 200, 0.1, free=("p", "r", "theta"))
    assert np.array_equal(run.net.theta, net.theta)
