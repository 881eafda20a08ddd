"""Order-of-magnitude numbers for a Rb quasicondensate bath and Yb spins."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..reservoir import (AMU, BOHR, KB, ReservoirParams, analyze, asymmetry_sweep,
                         g1d_from_scattering, photon_scattering_lifetime, validity_epsilons)
from .config import Scales
from .presets import ESTIMATES


@dataclass
class EstimatesReport:
    gamma_r: float                  # E0/hbar units
    gamma_l: float
    gamma_r_hz: float               # gamma_R / 2 pi in Hz
    ratio_range: tuple
    scattering_rate: float          # rad/s
    lifetime: float                 # s
    cascade_time: float             # s, for the preset chain length
    margins: dict
    checks: dict
    params: ReservoirParams
    omega: float
    notes: list = field(default_factory=list)

    def rows(self):
        out = [
            ("gamma_r", self.gamma_r), ("gamma_l", self.gamma_l),
            ("gamma_r_over_2pi_hz", self.gamma_r_hz),
            ("ratio_min", self.ratio_range[0]), ("ratio_max", self.ratio_range[1]),
            ("scattering_rate_per_s", self.scattering_rate),
            ("scattering_lifetime_s", self.lifetime),
            ("cascade_t_ss_s", self.cascade_time),
        ]
        out += [(f"margin_{k}", v) for k, v in sorted(self.margins.items())]
        out += [(f"check_{k}", v) for k, v in self.checks.items()]
        return out


def physical_params(e=ESTIMATES, omega0=None):
    """Reservoir parameters (E0/k0 units), transition frequency, scales and lattice."""
    mb = e["mass_b_amu"] * AMU
    ma = e["mass_a_amu"] * AMU
    sc = Scales.from_units(e["energy_hz"], mb)
    wp = 2 * math.pi * e["omega_perp_hz"]
    g_unit = sc.energy * sc.length
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g_b = g1d_from_scattering(e["a_intraspecies_bohr"] * BOHR, wp, mb / 2) / g_unit
        g_a = g1d_from_scattering(e["a_interspecies_bohr"] * BOHR, wp, ma * mb / (ma + mb)) / g_unit
    params = ReservoirParams(
        omega0=e["omega0"] if omega0 is None else omega0,
        delta0=e["delta0"],
        rho_bar=e["rho_bar_per_um"] * 1e6 * sc.length,
        g_uu=g_b, g_dd=g_b, g_ud=g_b, g_au=g_a, g_ad=g_a,
        mass_ratio=e["mass_ratio"],
        temperature=e["temperature_nk"] * 1e-9 * KB / sc.energy,
    )
    omega = e["omega_hz"] / e["energy_hz"]
    d = e["spacing_nm"] * 1e-9 / sc.length
    lattice = {"spacing": d, "k_lat": math.pi / d}
    return params, omega, sc, lattice


def estimates(e=ESTIMATES, threshold=0.1, sweep_points=40) -> EstimatesReport:
    params, omega, sc, lat = physical_params(e)
    res = analyze(params, omega)
    f0 = e["energy_hz"]
    rep = validity_epsilons(params, res.pw, res.modes, omega=omega, channels=res.channels,
                            n_spins=e["n_spins"], spacing=lat["spacing"], k_lat=lat["k_lat"],
                            threshold=threshold)
    grid = np.linspace(2.0 / sweep_points, 2.0, sweep_points)
    ratios = [r.ratio for r in asymmetry_sweep(params, omega, grid) if not r.error]
    ratio_range = (float(min(ratios)), float(max(ratios))) if ratios else (math.nan, math.nan)
    # photon scattering at the Raman coupling quoted for the heating estimate
    raman = e["omega0_scattering"] * 2 * math.pi * f0
    rate, tau = photon_scattering_lifetime(raman, 2 * math.pi * e["linewidth_hz"],
                                           2 * math.pi * e["fine_structure_hz"])
    gamma_r_si = res.gamma_r * 2 * math.pi * f0          # rad/s
    notes = [
        f"2|delta0| = {2 * abs(params.delta0) * f0:.1f} Hz from the dimensionless preset; "
        f"the quoted lower bound is {e['two_delta0_hz']:.0f} Hz",
    ]
    return EstimatesReport(
        gamma_r=res.gamma_r, gamma_l=res.gamma_l, gamma_r_hz=res.gamma_r * f0,
        ratio_range=ratio_range, scattering_rate=rate, lifetime=tau,
        cascade_time=e["cascade_t_ss"] / gamma_r_si,
        margins=dict(rep.margins), checks=rep.checks(), params=params, omega=omega,
        notes=notes)
