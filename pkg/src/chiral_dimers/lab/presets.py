"""Frozen parameter sets for the figure runners and the Rb/Yb estimate."""
from __future__ import annotations

from types import MappingProxyType

import numpy as np

from ..chain import ChainParams
from ..reservoir import ReservoirParams


def _freeze(d):
    return MappingProxyType({k: (_freeze(v) if isinstance(v, dict) else v) for k, v in d.items()})


FIG2_RESERVOIR = _freeze({
    "rho_bar": 6.14,
    "mass_ratio": 2.0,
    "g_uu": 0.23, "g_dd": 0.23, "g_ud": 0.23,
    "g_au": -0.37,
    "delta0": -0.004,
    "omega": 1.46,
})

PRESETS = _freeze({
    "fig2a": {
        "kind": "rates-sweep",
        "reservoir": dict(FIG2_RESERVOIR),
        "curves": {"equal_coupling": {"g_ad": -0.37}, "no_down_coupling": {"g_ad": 0.0}},
        "omega0_grid": (0.01, 2.0, 200),
    },
    "fig3a": {"kind": "evolve", "n_spins": 10, "gamma_l": 0.0, "rabi": 0.5,
              "t_final": 150.0, "method": "trajectories", "n_traj": 100, "dt_max": 1.0},
    "fig3b": {"kind": "evolve", "n_spins": 10, "gamma_l": 0.4, "rabi": 0.5,
              "t_final": 600.0, "method": "trajectories", "n_traj": 100, "dt_max": 1.0},
    "fig3c": {"kind": "evolve", "n_spins": 9, "gamma_l": 0.0, "rabi": 0.5,
              "t_final": 150.0, "method": "krylov"},
    "fig3d": {"kind": "evolve", "n_spins": 9, "gamma_l": 0.4, "rabi": 0.5,
              "t_final": 1000.0, "method": "trajectories", "n_traj": 64, "dt_max": 1.0},
    "fig4a": {"kind": "imperfection-scan", "n_spins": 6, "rabi": 0.5,
              "gamma_l": (0.1, 0.4), "scan": "epsilon_comm",
              "values": tuple(np.round(np.linspace(0.0, 0.5, 11), 10))},
    "fig4b": {"kind": "imperfection-scan", "n_spins": 6, "rabi": 0.5,
              "gamma_l": (0.0, 0.4), "scan": "gamma_prime",
              "values": tuple(np.round(np.linspace(0.0, 0.5, 11), 10))},
    "gap_scaling": {"kind": "gap-scan", "n_spins": (2, 4, 6),
                    "delta_gamma": tuple(np.round(np.logspace(-1, 0, 8), 10)),
                    "rabi_for_delta_gamma": (0.5, 1.0),
                    "rabi": tuple(np.round(np.logspace(-1, 1, 9), 10)),
                    "delta_gamma_for_rabi": (0.2, 0.8)},
})

FIGURES = tuple(PRESETS)

ESTIMATES = _freeze({
    "energy_hz": 3.5e3,             # E0 / h
    "mass_b_amu": 86.909180527,     # 87Rb
    "mass_a_amu": 171.936,          # 172Yb
    "mass_ratio": 172 / 87,
    "rho_bar_per_um": 48.0,
    "omega_perp_hz": 10e3,
    "a_interspecies_bohr": -160.7,
    "a_intraspecies_bohr": 100.4,   # Rb-Rb, all spin channels taken equal
    "omega_hz": 5.3e3,
    "temperature_nk": 5.0,
    "delta0": -0.004,
    "omega0": 1.0,
    "omega0_scattering": 2.0,       # Raman coupling used for the heating estimate
    "linewidth_hz": 5.746e6,        # Rb D1
    "fine_structure_hz": 7.123e12,
    "n_spins": 30,
    "spacing_nm": 800.0,
    "cascade_spins": 30,
    "cascade_t_ss": 300.0,          # in 1/gamma_R
    "two_delta0_hz": 25.0,
})


def preset(name):
    from ..errors import UnknownFigure
    if name not in PRESETS:
        raise UnknownFigure(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    return PRESETS[name]


def fig2_params(omega0=0.2, g_ad=None):
    r = FIG2_RESERVOIR
    return ReservoirParams(omega0=omega0, delta0=r["delta0"], rho_bar=r["rho_bar"],
                           g_uu=r["g_uu"], g_dd=r["g_dd"], g_ud=r["g_ud"], g_au=r["g_au"],
                           g_ad=r["g_au"] if g_ad is None else g_ad,
                           mass_ratio=r["mass_ratio"])


def fig3_params(name):
    p = preset(name)
    return ChainParams(p["n_spins"], rabi=p["rabi"], gamma_l=p["gamma_l"], gamma_r=1.0)
