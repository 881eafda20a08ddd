"""Datasets behind each figure; one CSV per curve, no plotting."""
from __future__ import annotations

import numpy as np

from ..chain import ChainParams, build_liouvillian, liouvillian_gap
from ..observables import adjacent_pairs
from ..reservoir import asymmetry_sweep
from ..chain import imperfection_scan
from .modes import evolve_timeseries, trajectory_timeseries
from .presets import FIG2_RESERVOIR, fig2_params, fig3_params, preset


def _fig2a(p):
    lo, hi, n = p["omega0_grid"]
    grid = np.linspace(lo, hi, n)
    out = {}
    cols = ["omega0", "gamma_l", "gamma_r", "ratio", "polarization", "error"]
    for name, over in p["curves"].items():
        rows = asymmetry_sweep(fig2_params(g_ad=over["g_ad"]), FIG2_RESERVOIR["omega"], grid)
        out[name] = (cols, [[getattr(r, c) for c in cols] for r in rows])
    return out


def _fig3(name, p, step=None, seed=0, workers=None):
    params = fig3_params(name)
    t_final = p["t_final"]
    if p["method"] == "trajectories":
        step = step or t_final / 30
        t = np.arange(0.0, t_final + step / 2, step)
        cols, rows, _ = trajectory_timeseries(params, t, p["n_traj"], seed=seed,
                                              dt_max=p["dt_max"], workers=workers)
    else:
        step = step or 2.5
        t = np.arange(0.0, t_final + step / 2, step)
        cols, rows, _ = evolve_timeseries(params, t, p["method"])
    return {"entropies": (cols, rows)}


def _fig4(p):
    out = {}
    pairs = adjacent_pairs(p["n_spins"])
    cols = ["value"] + [f"P_{j}_{l}" for j, l in pairs] + ["purity", "nullspace_dim", "error"]
    for gl in p["gamma_l"]:
        params = ChainParams(p["n_spins"], rabi=p["rabi"], gamma_l=gl, gamma_r=1.0)
        rows = imperfection_scan(params, p["scan"], p["values"])
        out[f"gamma_l_{gl:g}"] = (cols, rows)
    return out


def _gap_row(n, rabi, dg):
    params = ChainParams(n, rabi=rabi, gamma_l=1.0 - dg, gamma_r=1.0)
    try:
        lam, t_ss = liouvillian_gap(build_liouvillian(params))
        return [n, rabi, dg, lam.real, lam.imag, t_ss, ""]
    except Exception as exc:
        return [n, rabi, dg, np.nan, np.nan, np.nan, f"{type(exc).__name__}: {exc}"]


def _gap_scaling(p):
    cols = ["n_spins", "rabi", "delta_gamma", "lambda_re", "lambda_im", "t_ss", "error"]
    out = {}
    for n in p["n_spins"]:
        for rabi in p["rabi_for_delta_gamma"]:
            out[f"N{n}_vs_delta_gamma_rabi_{rabi:g}"] = (
                cols, [_gap_row(n, rabi, dg) for dg in p["delta_gamma"]])
        for dg in p["delta_gamma_for_rabi"]:
            out[f"N{n}_vs_rabi_delta_gamma_{dg:g}"] = (
                cols, [_gap_row(n, rabi, dg) for rabi in p["rabi"]])
    return out


def reproduce_figure(name, seed=0, workers=None):
    """{curve name: (columns, rows)} for a named figure preset."""
    p = preset(name)
    if name == "fig2a":
        return _fig2a(p)
    if name.startswith("fig3"):
        return _fig3(name, p, seed=seed, workers=workers)
    if name.startswith("fig4"):
        return _fig4(p)
    return _gap_scaling(p)
