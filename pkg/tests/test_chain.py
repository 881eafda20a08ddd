import math

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.optimize import linear_sum_assignment

from chiral_dimers import operators as ops
from chiral_dimers.chain import (ChainParams, build_liouvillian, dimer_pair, dimer_product, evolve,
                                 ground_density, imperfection_scan, liouvillian_gap,
                                 pair_purity_trend, singlet_fraction, steady_state,
                                 _spectrum_near_zero)
from chiral_dimers.errors import DimensionOverflow, InvalidState, OddChain, ZeroAsymmetry
from chiral_dimers.observables import fidelity, purity, two_level_steady_state


def random_params(rng, n):
    return ChainParams(n, rabi=complex(*rng.uniform(-1, 1, 2)), detuning=rng.uniform(-1, 1),
                       gamma_l=rng.uniform(0, 1), gamma_r=rng.uniform(0, 1),
                       epsilon_comm=rng.uniform(0, 0.5), gamma_prime=rng.uniform(0, 0.3))


def random_density(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    r = a @ a.conj().T
    return r / np.trace(r)


def test_trace_and_hermiticity_preserved():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        L = build_liouvillian(random_params(rng, n))
        X = random_density(rng, 2**n)
        Y = L.apply(X)
        assert abs(np.trace(Y)) < 1e-12
        assert np.abs(Y - Y.conj().T).max() < 1e-12


def test_matrix_free_matches_sparse():
    rng = np.random.default_rng(4)
    p = random_params(rng, 3)
    L = build_liouvillian(p)
    X = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    direct = L.apply(X)
    via = ops.unvec(L.matrix() @ ops.vec(X), 8)
    assert np.abs(direct - via).max() < 1e-12
    Y = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    # <Y, L X> = <L^dag Y, X>
    assert np.vdot(Y, direct) == pytest.approx(np.vdot(L.adjoint_apply(Y), X), abs=1e-10)


def test_mirror_spectra_agree():
    p = ChainParams(3, rabi=0.4 + 0.1j, gamma_l=0.3, gamma_r=0.9)
    a = np.linalg.eigvals(build_liouvillian(p).dense())
    b = np.linalg.eigvals(build_liouvillian(p.mirror()).dense())
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    assert cost[r, c].max() < 1e-9


@pytest.mark.parametrize("n", [2, 4])
@pytest.mark.parametrize("gamma_l", [0.0, 0.4])
def test_dimer_product_is_stationary(n, gamma_l):
    p = ChainParams(n, rabi=0.5, gamma_l=gamma_l)
    rho = dimer_product(p).projector()
    assert np.abs(build_liouvillian(p).apply(rho)).max() < 1e-11


def test_single_spin_decay_and_bloch_steady_state():
    L = build_liouvillian(ChainParams(1, rabi=0.0, gamma_r=1.0))
    excited = np.diag([0.0, 1.0]).astype(complex)
    # basis index 1 is |e> for a single spin
    rho = evolve(L, excited, [0.0, 1.0, 2.0])
    pops = [r[1, 1].real for r in rho]
    assert pops == pytest.approx([1.0, math.exp(-1), math.exp(-2)], abs=1e-8)
    p = ChainParams(1, rabi=0.3 + 0.2j, detuning=0.1, gamma_r=0.7)
    rho, nd = steady_state(build_liouvillian(p))
    assert nd == 1
    assert np.abs(rho - two_level_steady_state(p.rabi, 0.7, 0.1)).max() < 1e-10


def test_two_spin_evolution_matches_expm():
    rng = np.random.default_rng(8)
    p = ChainParams(2, rabi=0.5, gamma_l=0.2, epsilon_comm=0.1, gamma_prime=0.05)
    L = build_liouvillian(p)
    M = L.dense()
    rho0 = random_density(rng, 4)
    times = np.sort(rng.uniform(0, 10, 10))
    out = evolve(L, rho0, np.concatenate([[0.0], times]))[1:]
    for t, r in zip(times, out):
        ref = ops.unvec(expm(t * M) @ ops.vec(rho0), 4)
        assert np.abs(np.linalg.eigvalsh(r - ref)).sum() < 1e-8


def test_krylov_route_matches_rk():
    p = ChainParams(4, rabi=0.5, gamma_l=0.3)
    L = build_liouvillian(p)
    rho0 = ground_density(4)
    a = evolve(L, rho0, [0.0, 5.0], method="rk")[-1]
    b = evolve(L, rho0, [0.0, 5.0], method="krylov", krylov_tol=1e-12)[-1]
    assert np.abs(a - b).max() < 1e-7


def test_long_time_limit_matches_steady_state():
    p = ChainParams(2, rabi=0.5, gamma_l=0.3)
    L = build_liouvillian(p)
    rho_ss, _ = steady_state(L)
    _, t_ss = liouvillian_gap(L)
    late = evolve(L, ground_density(2), [0.0, 20 * t_ss])[-1]
    assert np.abs(late - rho_ss).max() < 1e-6


def test_singlet_fraction_examples():
    assert singlet_fraction(0.5, 1.0) == pytest.approx(1j * math.sqrt(2))
    v = dimer_pair(0.0)
    assert np.allclose(v, [1, 0, 0, 0])
    assert np.linalg.norm(dimer_pair(2 + 1j)) == pytest.approx(1)
    d = dimer_product(ChainParams(4, rabi=0.5, gamma_l=0.4))
    assert d.state.shape == (16,)
    assert np.linalg.norm(d.state) == pytest.approx(1)


def test_dimer_product_errors():
    with pytest.raises(OddChain):
        dimer_product(ChainParams(3))
    with pytest.raises(ZeroAsymmetry):
        dimer_product(ChainParams(2, gamma_l=1.0))


def test_degenerate_at_zero_asymmetry():
    rho, nd = steady_state(build_liouvillian(ChainParams(2, rabi=0.5, gamma_l=1.0)))
    assert rho is None and nd > 1


def test_steady_state_is_dimer_product():
    p = ChainParams(2, rabi=0.5, gamma_l=0.4)
    rho, nd = steady_state(build_liouvillian(p))
    assert nd == 1
    assert fidelity(rho, dimer_product(p).state) > 1 - 1e-10
    assert purity(rho) > 1 - 1e-10


def test_imperfection_scan_degrades_purity():
    p = ChainParams(4, rabi=0.5, gamma_l=0.1)
    rows = imperfection_scan(p, "epsilon_comm", [0.0, 0.2, 0.4])
    assert [r["error"] for r in rows] == ["", "", ""]
    P = [r["P_1_2"] for r in rows]
    assert P[0] > P[1] > P[2]
    assert pair_purity_trend(rows, 4) == 1.0
    with pytest.raises(OddChain):
        imperfection_scan(ChainParams(3), "gamma_prime", [0.1])


def test_caps():
    with pytest.raises(DimensionOverflow):
        build_liouvillian(ChainParams(13))
    with pytest.raises(InvalidState):
        evolve(build_liouvillian(ChainParams(2)), ground_density(3), [0.0, 1.0])
    with pytest.raises(ValueError):
        evolve(build_liouvillian(ChainParams(2)), ground_density(2), [1.0, 2.0])


@pytest.mark.parametrize("gamma_l", [0.5, 0.9])
def test_arnoldi_gap_matches_dense(gamma_l):
    L = build_liouvillian(ChainParams(4, rabi=0.5, gamma_l=gamma_l))
    dense = liouvillian_gap(L)[0]
    arnoldi = liouvillian_gap(L, spectrum=_spectrum_near_zero(L, dense_max=0))[0]
    assert abs(arnoldi - dense) < 1e-10 * abs(dense) + 1e-14
