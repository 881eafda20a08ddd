import numpy as np
import pytest

from chiral_dimers import _kernels_py, kernels, operators as ops
from chiral_dimers.chain import ChainParams, dimer_product
from chiral_dimers.trajectories import (Propagators, TrajectoryConfig, ensemble_average,
                                        ensemble_purity, generator_residual, run_trajectory,
                                        unravel)


def test_unravel_labels_and_defect():
    p = ChainParams(3, rabi=0.4, gamma_l=0.2, gamma_prime=0.1, epsilon_comm=0.3)
    g = unravel(p)
    assert g.labels == ["R", "L", "site1", "site2", "site3"]
    assert g.anti_hermitian_defect() < 1e-12
    assert generator_residual(g, p) < 1e-12


def test_mirrored_unravel():
    p = ChainParams(4, rabi=0.5 - 0.2j, gamma_l=0.9, gamma_r=0.3, gamma_prime=0.05,
                    epsilon_comm=0.2)
    g = unravel(p)
    assert generator_residual(g, p) < 1e-9
    assert g.labels[:2] == ["L", "R"]
    assert g.labels[2] == "site4"


def test_config_validation():
    with pytest.raises(ValueError):
        TrajectoryConfig(n_traj=0)
    with pytest.raises(ValueError):
        TrajectoryConfig(observables=("energy",))
    with pytest.raises(ValueError):
        TrajectoryConfig(seed=-1)
    cfg = TrajectoryConfig(dt_max=0.125)
    assert cfg.tick <= 1e-10 < 2 * cfg.tick
    assert cfg.grid()[-1] == pytest.approx(10.0)


def test_norm_constant_without_channels():
    g = unravel(ChainParams(3, rabi=0.7, gamma_r=0.0))
    assert g.weights.shape == (0, 3)
    cfg = TrajectoryConfig(t_final=5.0)
    prop = Propagators(g, cfg.dt_max, cfg.levels)
    psi = ops.ground_state(3)
    T, status = prop.advance(psi, 0.5, 0, int(cfg.grid_ticks()[-1]))
    assert status == 0
    assert abs(np.linalg.norm(psi) - 1) < 1e-12


def test_single_trajectory_ensemble_equals_run():
    p = ChainParams(3, rabi=0.5, gamma_l=0.3)
    g = unravel(p)
    cfg = TrajectoryConfig(seed=7, n_traj=1, t_final=5.0)
    ens = ensemble_average(g, ops.ground_state(3), cfg)
    path = run_trajectory(g, ops.ground_state(3), cfg, 0)
    assert np.array_equal(ens.means["populations"], path.observables["populations"])
    assert ens.total_jumps == path.n_jumps


def test_bitwise_reproducible_and_worker_independent():
    g = unravel(ChainParams(3, rabi=0.5, gamma_l=0.3))
    cfg = TrajectoryConfig(seed=11, n_traj=6, t_final=5.0)
    a = ensemble_average(g, ops.ground_state(3), cfg, workers=1)
    b = ensemble_average(g, ops.ground_state(3), cfg, workers=1)
    c = ensemble_average(g, ops.ground_state(3), cfg, workers=2)
    for other in (b, c):
        assert np.array_equal(a.means["pairs"], other.means["pairs"])
        assert np.array_equal(a.stderr["populations"], other.stderr["populations"])


def test_stderr_shrinks_with_sample_size():
    g = unravel(ChainParams(2, rabi=0.5, gamma_l=0.3))
    errs = []
    for n in (200, 800):
        cfg = TrajectoryConfig(seed=5, n_traj=n, t_final=4.0, dt_max=1.0)
        errs.append(ensemble_average(g, ops.ground_state(2), cfg).stderr["populations"][-1])
    assert np.mean(errs[0] / errs[1]) == pytest.approx(2, rel=0.2)


def test_dark_state_has_no_jumps():
    p = ChainParams(2, rabi=0.5, gamma_l=0.4)
    g = unravel(p)
    cfg = TrajectoryConfig(seed=1, n_traj=5, t_final=50.0, dt_max=1.0,
                           observables=("dimer_fidelity",))
    ens = ensemble_average(g, dimer_product(p).state, cfg)
    assert ens.total_jumps == 0
    assert np.abs(ens.means["dimer_fidelity"] - 1).max() < 1e-10


def test_purity_estimator():
    e0, e1 = np.eye(2, dtype=complex)
    states = [np.array([s]) for s in (e0, e0, e1, e1)]
    # ordered pairs with equal states: 4 of 12
    assert ensemble_purity(states)[0] == pytest.approx(1 / 3)
    assert ensemble_purity(states[:2])[0] == pytest.approx(1)


def test_python_backend_matches_compiled(monkeypatch):
    if kernels.BACKEND != "compiled":
        pytest.skip("compiled kernels not built")
    g = unravel(ChainParams(3, rabi=0.5, gamma_l=0.3, gamma_prime=0.05))
    cfg = TrajectoryConfig(seed=3, n_traj=1, t_final=8.0)
    fast = run_trajectory(g, ops.ground_state(3), cfg, 0)
    for name in ("advance", "collective_lower", "pair_marginals"):
        monkeypatch.setattr(kernels, name, getattr(_kernels_py, name))
    slow = run_trajectory(g, ops.ground_state(3), cfg, 0)
    assert np.array_equal(fast.jump_channels, slow.jump_channels)
    assert np.abs(fast.jump_times - slow.jump_times).max() < 1e-9
    assert np.abs(fast.observables["pairs"] - slow.observables["pairs"]).max() < 1e-9
