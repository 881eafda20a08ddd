from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from ..chain import ChainParams
from ..reservoir import ReservoirParams, ValidityReport, analyze, validity_epsilons


@dataclass
class ValidationResult:
    report: ValidityReport
    margins: dict
    threshold: float

    def passed(self, name):
        v = self.margins.get(name, math.nan)
        return v == v and v < self.threshold

    @property
    def checks(self):
        c = {
            "markov": self.passed("markov_L") and self.passed("markov_R"),
            "rwa": self.passed("rwa"),
            "quasi_bec": self.passed("interaction") and self.passed("temperature"),
            "thermal": self.passed("thermal"),
            "deep_lattice": self.passed("deep_lattice"),
        }
        if "drive" in self.margins:
            c["drive"] = self.passed("drive")
        return c

    @property
    def all_ok(self):
        return all(self.checks.values())

    def rows(self):
        """(name, margin, passed) for every evaluated margin."""
        return [(k, v, self.passed(k)) for k, v in sorted(self.margins.items())]


def validate(reservoir: ReservoirParams, omega, chain: ChainParams | None = None,
             lattice=None, threshold=0.1, rate_factor=1.0, n_points=4001) -> ValidationResult:
    """Evaluate every approximation margin; pass means margin < threshold.

    ``rate_factor`` rescales both decay rates before the checks, which is how
    the effect of a stronger spin-bath coupling is probed.
    """
    lattice = lattice or {}
    res = analyze(reservoir, omega)
    channels = tuple(dataclasses.replace(c, gamma=c.gamma * rate_factor) for c in res.channels)
    rep = validity_epsilons(reservoir, res.pw, res.modes, omega=omega, channels=channels,
                            n_spins=chain.n_spins if chain else None,
                            spacing=lattice.get("spacing"), k_lat=lattice.get("k_lat"),
                            threshold=threshold, n_points=n_points)
    margins = dict(rep.margins)
    if chain is not None:
        # chain rates are in units of gamma_R; convert the drive back to E0
        gamma_r = max(c.gamma for c in channels if c.side == "R")
        margins["drive"] = abs(chain.rabi) * gamma_r / omega
    return ValidationResult(rep, margins, threshold)
