"""One function per run mode; each returns {filename: (columns, rows, extra_meta)}."""
from __future__ import annotations

import math

import numpy as np

from .. import operators as ops
from ..chain import (ChainParams, build_liouvillian, dimer_product, evolve, ground_density,
                     imperfection_scan, liouvillian_gap, steady_state)
from ..errors import ConfigError, OddChain, ZeroAsymmetry
from ..observables import (adjacent_pairs, entropy, fidelity, neighbour_pairs, purity,
                           reduced_pair)
from ..reservoir import (asymmetry_sweep, bdg_modes, default_grid, resonant_channels,
                         solve_plane_wave, with_rates)
from ..trajectories import TrajectoryConfig, ensemble_average, unravel
from . import config as C
from .estimates import estimates
from .validate import validate


def entropy_columns(n):
    return [f"S_{j}_{j + 1}" for j in range(1, n)]


def state_row(t, rho, n):
    row = [t, purity(rho)]
    row += [entropy(reduced_pair(rho, j, l)) for j, l in neighbour_pairs(n)]
    return row


def evolve_timeseries(params: ChainParams, t_grid, method="rk"):
    """Rows (t, purity, S_1_2, ...) keeping only one density matrix in memory."""
    L = build_liouvillian(params)
    rho = ground_density(params.n_spins)
    rows = [state_row(0.0, rho, params.n_spins)]
    kw = {"krylov_dim": 16, "krylov_tol": 1e-12} if method == "krylov" else {}
    for a, b in zip(t_grid[:-1], t_grid[1:]):
        rho = evolve(L, rho, [0.0, b - a], method=method, **kw)[-1]
        rows.append(state_row(float(b), rho, params.n_spins))
    return ["t", "purity"] + entropy_columns(params.n_spins), rows, rho


def trajectory_timeseries(params: ChainParams, t_grid, n_traj, seed=0, dt_max=0.125,
                          workers=None, with_purity=True):
    gen = unravel(params)
    obs = ("pairs", "purity") if with_purity else ("pairs",)
    cfg = TrajectoryConfig(seed=seed, n_traj=n_traj, dt_max=dt_max, t_final=float(t_grid[-1]),
                           t_grid=tuple(float(x) for x in t_grid), observables=obs)
    ens = ensemble_average(gen, ops.ground_state(params.n_spins), cfg, workers=workers)
    S = ens.pair_entropies()
    P = ens.means.get("purity", np.full(ens.t.shape, np.nan))
    rows = [[float(t), float(P[i]), *map(float, S[i])] for i, t in enumerate(ens.t)]
    return ["t", "purity"] + entropy_columns(params.n_spins), rows, ens


def _grid(cfg):
    t_final = C.run_float(cfg, "t_final")
    n = C.run_int(cfg, "n_points", 101)
    if n < 2 or not t_final > 0:
        raise ConfigError("need t_final > 0 and n_points >= 2", "n_points")
    return np.linspace(0.0, t_final, n)


def _require_omega(cfg):
    if cfg.omega is None:
        raise ConfigError("reservoir key 'omega' (transition frequency) is required", "omega")
    return cfg.omega


def mode_spectrum(cfg):
    p = cfg.reservoir
    pw = solve_plane_wave(p)
    k = default_grid(C.run_int(cfg, "k_points", 4096), C.run_float(cfg, "k_min", -4.0),
                     C.run_float(cfg, "k_max", 4.0))
    modes = bdg_modes(p, pw, k)
    out = {}
    rows = [[modes.k[i], modes.omega[i, 0], modes.omega[i, 1], modes.Q[i, 0, 0],
             modes.Q[i, 0, 1], modes.Q[i, 1, 0], modes.Q[i, 1, 1]] for i in range(k.size)]
    out["spectrum.csv"] = (["k", "omega_minus", "omega_plus", "q_up_minus", "q_down_minus",
                            "q_up_plus", "q_down_plus"], rows, {})
    cols = ["q", "k_m", "C", "D", "mu", "e_gs_per_particle", "rho_up", "rho_down", "theta_q"]
    out["plane_wave.csv"] = (cols, [[getattr(pw, c) for c in cols]], {})
    if cfg.omega is not None:
        ch = with_rates(resonant_channels(modes, cfg.omega), p, pw, modes, cfg.omega)
        out["channels.csv"] = (["side", "k_res", "v_group", "gamma", "eta"],
                               [[c.side, c.k_res, c.v_group, c.gamma, c.eta] for c in ch], {})
    return out


def mode_rates_sweep(cfg):
    omega = _require_omega(cfg)
    grid = np.linspace(C.run_float(cfg, "omega0_from"), C.run_float(cfg, "omega0_to"),
                       C.run_int(cfg, "omega0_steps"))
    rows = asymmetry_sweep(cfg.reservoir, omega, grid, recenter=cfg.recenter)
    cols = ["omega0", "gamma_l", "gamma_r", "ratio", "polarization", "omega", "error"]
    return {"rates.csv": (cols, [[getattr(r, c) for c in cols] for r in rows], {})}


def mode_evolve(cfg):
    method = cfg.run.get("method", "rk").strip()
    t = _grid(cfg)
    if method == "trajectories":
        cols, rows, _ = trajectory_timeseries(cfg.chain, t, C.run_int(cfg, "n_traj", 100),
                                              seed=cfg.seed,
                                              dt_max=C.run_float(cfg, "dt_max", 0.125))
    elif method in ("rk", "krylov"):
        cols, rows, _ = evolve_timeseries(cfg.chain, t, method)
    else:
        raise ConfigError(f"method must be rk, krylov or trajectories, got {method!r}", "method")
    return {"timeseries.csv": (cols, rows, {"method": method})}


def mode_steady(cfg):
    p = cfg.chain
    rho, nd = steady_state(build_liouvillian(p))
    n = p.n_spins
    cols = ["nullspace_dim", "fidelity", "purity"]
    pairs = adjacent_pairs(n)
    cols += [f"P_{j}_{l}" for j, l in pairs] + entropy_columns(n)
    out = {}
    if rho is None:
        row = [nd] + [math.nan] * (len(cols) - 1)
    else:
        try:
            fid = fidelity(rho, dimer_product(p).state)
        except (OddChain, ZeroAsymmetry):
            fid = math.nan
        row = [nd, fid, purity(rho)]
        row += [purity(reduced_pair(rho, j, l)) for j, l in pairs]
        row += [entropy(reduced_pair(rho, j, l)) for j, l in neighbour_pairs(n)]
        out["rho_ss.txt"] = rho
    out["steady.csv"] = (cols, [row], {})
    return out


_CHAIN_SCANS = ("gamma_l", "gamma_r", "detuning", "epsilon_comm", "gamma_prime", "rabi")


def mode_gap_scan(cfg):
    key = cfg.run.get("scan", "gamma_l").strip()
    if key not in _CHAIN_SCANS:
        raise ConfigError(f"scan must be one of {', '.join(_CHAIN_SCANS)}", "scan")
    rows = []
    for v in C.run_list(cfg, "values"):
        p = cfg.chain.replace(**{key: complex(v) if key == "rabi" else v})
        try:
            lam, t_ss = liouvillian_gap(build_liouvillian(p))
            rows.append([v, lam.real, lam.imag, t_ss, ""])
        except Exception as exc:     # recorded per row
            rows.append([v, math.nan, math.nan, math.nan, f"{type(exc).__name__}: {exc}"])
    return {"gap.csv": (["value", "lambda_re", "lambda_im", "t_ss", "error"], rows,
                        {"scan": key})}


def mode_imperfection_scan(cfg):
    key = cfg.run.get("scan", "epsilon_comm").strip()
    if key not in ("epsilon_comm", "gamma_prime", "detuning"):
        raise ConfigError("scan must be epsilon_comm, gamma_prime or detuning", "scan")
    rows = imperfection_scan(cfg.chain, key, C.run_list(cfg, "values"))
    pairs = adjacent_pairs(cfg.chain.n_spins)
    cols = ["value"] + [f"P_{j}_{l}" for j, l in pairs] + ["purity", "nullspace_dim", "error"]
    return {"imperfection.csv": (cols, rows, {"scan": key})}


def mode_trajectories(cfg):
    p = cfg.chain
    t = _grid(cfg)
    names = tuple(x.strip() for x in cfg.run.get("observables", "populations,pairs").split(",")
                  if x.strip())
    try:
        tc = TrajectoryConfig(seed=cfg.seed, n_traj=C.run_int(cfg, "n_traj", 100),
                              dt_max=C.run_float(cfg, "dt_max", 0.125), t_final=float(t[-1]),
                              t_grid=tuple(float(x) for x in t), observables=names)
    except ValueError as exc:
        raise ConfigError(str(exc), "observables") from None
    gen = unravel(p)
    ens = ensemble_average(gen, ops.ground_state(p.n_spins), tc)
    cols, data = ["t"], [ens.t]
    n = p.n_spins
    if "populations" in ens.means:
        for j in range(n):
            cols += [f"n_{j + 1}_mean", f"n_{j + 1}_stderr"]
            data += [ens.means["populations"][:, j], ens.stderr["populations"][:, j]]
    if "pairs" in ens.means:
        S = ens.pair_entropies()
        for c, (j, l) in enumerate(neighbour_pairs(n)):
            cols.append(f"S_{j}_{l}_mean")
            data.append(S[:, c])
    if "dimer_fidelity" in ens.means:
        cols += ["dimer_fidelity_mean", "dimer_fidelity_stderr"]
        data += [ens.means["dimer_fidelity"], ens.stderr["dimer_fidelity"]]
    if "purity" in ens.means:
        cols.append("purity_mean")
        data.append(ens.means["purity"])
    rows = [list(r) for r in zip(*data)]
    out = {"trajectories.csv": (cols, rows, {"n_traj": tc.n_traj})}
    hist_rows = [[ens.t[i], ens.t[i + 1]] + [int(ens.jump_histograms[lab][i]) for lab in ens.labels]
                 for i in range(len(ens.t) - 1)]
    out["jumps.csv"] = (["t_start", "t_end"] + [f"jumps_{lab}" for lab in ens.labels], hist_rows, {})
    return out


def mode_estimates(cfg):
    rep = estimates(threshold=C.run_float(cfg, "threshold", 0.1))
    meta = {f"note{i + 1}": s for i, s in enumerate(rep.notes)}
    return {"estimates.csv": (["quantity", "value"], rep.rows(), meta)}


def mode_validate(cfg):
    omega = _require_omega(cfg)
    res = validate(cfg.reservoir, omega, cfg.chain, cfg.lattice,
                   threshold=C.run_float(cfg, "threshold", 0.1))
    rows = [[k, v, ok] for k, v, ok in res.rows()]
    rows += [[f"check_{k}", "", ok] for k, ok in res.checks.items()]
    return {"validity.csv": (["name", "margin", "passed"], rows,
                             {"all_ok": res.all_ok, "threshold": res.threshold})}


DISPATCH = {
    "spectrum": mode_spectrum,
    "rates-sweep": mode_rates_sweep,
    "evolve": mode_evolve,
    "steady": mode_steady,
    "gap-scan": mode_gap_scan,
    "imperfection-scan": mode_imperfection_scan,
    "trajectories": mode_trajectories,
    "estimates": mode_estimates,
    "validate": mode_validate,
}
