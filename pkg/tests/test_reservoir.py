import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chiral_dimers.errors import (ConfinementResonanceWarning, NotInChiralWindow,
                                  PhaseConditionViolated)
from chiral_dimers.reservoir import (BOHR, AMU, ChiralChannel, ReservoirParams, analyze,
                                     asymmetry_sweep, bdg_modes, channel_rate, default_grid,
                                     g1d_from_scattering, lower_branch, photon_scattering_lifetime,
                                     quartic, quartic_root, resonant_channels, solve_plane_wave,
                                     validity_epsilons)

OMEGA = 1.46


def fig2(omega0=0.2, **kw):
    base = dict(omega0=omega0, delta0=-0.004, rho_bar=6.14, g_uu=0.23, g_dd=0.23, g_ud=0.23,
                g_au=-0.37, g_ad=-0.37, mass_ratio=2.0)
    base.update(kw)
    return ReservoirParams(**base)


@pytest.fixture(scope="module")
def fig2_modes():
    p = fig2()
    pw = solve_plane_wave(p)
    return p, pw, bdg_modes(p, pw, default_grid())


def test_quartic_trivial_root():
    assert quartic_root(0.0, 0.0) == 1.0


def test_quartic_small_coupling_expansion():
    q = quartic_root(0.001, 0.2)
    assert abs(q - (1 - 0.2**2 / 2)) < 1e-3
    assert round(q, 2) == 0.98


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 0.5), st.floats(0, 2.0))
def test_quartic_residual(C, D):
    q = quartic_root(C, D)
    assert 0 < q <= 1
    assert abs(quartic(q, C, D)) < 1e-12


def test_plane_wave_matches_polynomial_roots():
    p = fig2()
    pw = solve_plane_wave(p)
    C, D = pw.C, pw.D
    roots = np.roots([1, 2 * C, C * C + D * D - 1, -2 * C, -C * C])
    pos = [r.real for r in roots if abs(r.imag) < 1e-9 and 0 < r.real <= 1]
    assert len(pos) == 1
    assert pw.q == pytest.approx(pos[0], abs=1e-10)


def test_plane_wave_densities_and_angle():
    p = fig2(omega0=0.7)
    pw = solve_plane_wave(p)
    assert pw.rho_up + pw.rho_down == p.rho_bar
    assert pw.rho_up == pytest.approx(p.rho_bar * (1 + pw.q) / 2, rel=1e-14)
    assert pw.theta_q == pytest.approx(math.atan(pw.q / math.sqrt(1 - pw.q**2)), rel=1e-12)
    assert pw.k_m == pw.q * p.k0


def test_phase_condition_violation():
    # intraspecies imbalance pushes 2 G2 + G3 above |delta0|
    p = fig2(g_uu=0.3, g_dd=0.1)
    assert p.plane_wave_margin() >= 1
    with pytest.raises(PhaseConditionViolated):
        solve_plane_wave(p)


def test_symplectic_normalization(fig2_modes):
    _, _, modes = fig2_modes
    norms = np.array([m.normalization() for m in modes])
    assert np.max(np.abs(norms - 1)) < 1e-10
    assert np.all(modes.omega >= 0)


def test_goldstone_point(fig2_modes):
    p, pw, _ = fig2_modes
    assert lower_branch(p, pw, pw.k_m) < 1e-6
    # linear (phonon) opening on both sides
    w1, w2 = lower_branch(p, pw, pw.k_m + 1e-3), lower_branch(p, pw, pw.k_m + 2e-3)
    assert w2 / w1 == pytest.approx(2, rel=1e-2)


def test_structure_factor_vanishes_near_condensate(fig2_modes):
    p, pw, _ = fig2_modes
    h = 8.0 / 4095
    for sign in (1, -1):
        k = pw.k_m + sign * np.array([h, 2 * h])
        Q = bdg_modes(p, pw, np.sort(k)).Q[:, 0, :]
        if sign < 0:
            Q = Q[::-1]
        near, far = np.abs(Q[0]), np.abs(Q[1])
        assert np.all(near < 10 * far / 2)


def test_q_up_zero_crossing_at_negative_k():
    p = fig2(omega0=1.94)
    modes = bdg_modes(p, solve_plane_wave(p), default_grid())
    neg = modes.k < 0
    qu = modes.Q[neg, 0, 0]
    assert np.any(np.sign(qu[:-1]) != np.sign(qu[1:]))


def test_resonant_channels_geometry(fig2_modes):
    p, pw, modes = fig2_modes
    left, right = resonant_channels(modes, OMEGA)
    assert left.k_res < 0 and left.v_group < 0
    assert right.k_res > 0 and right.v_group > 0
    for ch in (left, right):
        assert abs(lower_branch(p, pw, ch.k_res) - OMEGA) < 1e-10


def test_resonances_agree_with_dense_scan(fig2_modes):
    p, pw, modes = fig2_modes
    left, right = resonant_channels(modes, OMEGA)
    k = np.linspace(-4, 4, 40001)
    w = bdg_modes(p, pw, k).omega[:, 0]
    s = np.sign(w - OMEGA)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    assert len(idx) == 2
    spacing = k[1] - k[0]
    assert abs(k[idx[0]] - left.k_res) <= spacing
    assert abs(k[idx[1]] - right.k_res) <= spacing


@pytest.mark.parametrize("omega", [-1.0, 200.0])
def test_outside_chiral_window(fig2_modes, omega):
    _, _, modes = fig2_modes
    with pytest.raises(NotInChiralWindow):
        resonant_channels(modes, omega)


def test_channel_sign_checked():
    with pytest.raises(NotInChiralWindow):
        ChiralChannel("L", -1.0, 0.5)


def test_rate_vanishes_at_condensate(fig2_modes):
    p, pw, modes = fig2_modes
    ch = ChiralChannel("R", pw.k_m, 1.0)
    gamma, eta = channel_rate(ch, p, pw, modes, OMEGA)
    assert eta == 0 and gamma == 0


def test_rates_grid_refinement():
    p = fig2(omega0=0.5)
    coarse = analyze(p, OMEGA)
    fine = analyze(p, OMEGA, k_grid=np.linspace(-4, 4, 2 * 4096 - 1))
    assert fine.gamma_r == pytest.approx(coarse.gamma_r, rel=1e-3)
    assert fine.gamma_l == pytest.approx(coarse.gamma_l, rel=1e-3)


def test_single_point_sweep_equals_decay_rates():
    p = fig2(omega0=0.8)
    res = analyze(p, OMEGA)
    (row,) = asymmetry_sweep(p, OMEGA, [0.8])
    assert row.gamma_l == res.gamma_l and row.gamma_r == res.gamma_r


def test_sweep_small_drive_is_polarized():
    rows = asymmetry_sweep(fig2(), OMEGA, [0.02, 0.5])
    assert rows[0].polarization < 1e-3
    assert rows[0].ratio < rows[1].ratio


def test_sweep_continuity():
    grid = np.round(np.arange(0.5, 0.7001, 0.01), 2)
    rows = asymmetry_sweep(fig2(), OMEGA, grid)
    r = np.array([x.ratio for x in rows])
    assert not any(x.error for x in rows)
    assert np.max(np.abs(np.diff(r)) / r[:-1]) < 0.1


def test_validity_scaling_with_density():
    l = 2.0
    base = fig2(omega0=1.0, coarse_length=l)
    reps = []
    for rho in (6.14, 12.28):
        p = base.replace(rho_bar=rho)
        reps.append(validity_epsilons(p, solve_plane_wave(p)))
    ratio = reps[0].eps1_plus / reps[1].eps1_plus
    assert ratio == pytest.approx(math.sqrt(2), rel=0.15)


def test_validity_order_of_magnitude():
    p = fig2(omega0=1.0, coarse_length=100 / 6.14)
    rep = validity_epsilons(p, solve_plane_wave(p))
    target = 1 / math.sqrt(50)
    for e in (rep.eps1_plus, rep.eps1_minus):
        assert target / 3 < e < target * 3
    assert all(v >= 0 for v in (rep.eps1_up, rep.eps1_down, rep.eps2_up, rep.eps2_down, rep.eps3))


def test_validity_missing_inputs_do_not_pass():
    p = fig2(omega0=1.0)
    rep = validity_epsilons(p, solve_plane_wave(p))
    assert not rep.markov_ok and not rep.deep_lattice_ok


def test_g1d():
    m = 87 * AMU
    w = 2 * math.pi * 10e3
    assert g1d_from_scattering(0.0, w, m) == 0.0
    g1 = g1d_from_scattering(-160.7 * BOHR, w, m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConfinementResonanceWarning)   # tighter trap crosses 0.1
        g2 = g1d_from_scattering(-160.7 * BOHR, 2 * w, m)
    assert g2 == pytest.approx(2 * g1)
    with pytest.warns(ConfinementResonanceWarning):
        g1d_from_scattering(1e-6, w, m)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        g1d_from_scattering(100 * BOHR, w, m)


def test_photon_scattering():
    rate, tau = photon_scattering_lifetime(3.0, 1e-6, 1.0)
    assert rate == pytest.approx(1.2e-5 * 3.0)
    assert tau == pytest.approx(2 * math.pi / rate)
    assert photon_scattering_lifetime(0.0, 1.0, 1.0) == (0.0, math.inf)
