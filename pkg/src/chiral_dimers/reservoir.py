"""Spin-orbit-coupled 1D quasicondensate as a chiral bath.

Units throughout: hbar = 1, energies in E0 = hbar^2 k0^2 / (2 m_b), lengths in
1/k0.  With these choices hbar^2/(2 m_b) = 1, so the single-particle kinetic
energy of a reservoir atom is simply k^2.

Two spin bases appear.  The lab basis (up, down) is where the Raman coupling is
written.  The rotated basis (+, -) mixes them by the angle theta_q so that the
condensate occupies both components equally; excitations are diagonalized
there and rotated back to lab-basis density coefficients.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfinementResonanceWarning,
    DiagonalizationFailure,
    IntegrandSingular,
    NoPositiveRoot,
    NotInChiralWindow,
    PhaseConditionViolated,
)

# physical constants (SI) used by the unit helpers
HBAR = 1.054571817e-34
KB = 1.380649e-23
AMU = 1.66053906660e-27
BOHR = 5.29177210903e-11

DEFAULT_GRID = (-4.0, 4.0, 4096)


@dataclass(frozen=True)
class ReservoirParams:
    omega0: float
    delta0: float
    rho_bar: float
    g_uu: float
    g_dd: float
    g_ud: float
    g_au: float
    g_ad: float
    mass_ratio: float
    k0: float = 1.0
    length_L: float = 1.0e3
    temperature: float = 0.0
    coarse_length: float | None = None

    def __post_init__(self):
        if not self.rho_bar > 0:
            raise ValueError(f"rho_bar must be positive, got {self.rho_bar}")
        if not self.delta0 < 0:
            raise ValueError(f"delta0 must be negative, got {self.delta0}")
        for name in ("g_uu", "g_dd", "g_ud"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.omega0 < 0:
            raise ValueError("omega0 must be >= 0")
        if not self.mass_ratio > 0:
            raise ValueError("mass_ratio must be positive")
        if not self.k0 > 0:
            raise ValueError("k0 must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.coarse_length is not None and not self.coarse_length > 0:
            raise ValueError("coarse_length must be positive")

    def interaction_energies(self):
        """Return (G1, G2, G3), the density-weighted coupling combinations."""
        r = self.rho_bar
        G1 = r / 8 * (self.g_uu + self.g_dd + 2 * self.g_ud)
        G2 = r / 8 * (self.g_uu + self.g_dd - 2 * self.g_ud)
        G3 = r / 4 * (self.g_uu - self.g_dd)
        return G1, G2, G3

    def plane_wave_margin(self):
        """(2 G2 + G3) / |delta0|; the plane-wave phase needs this below 1."""
        _, G2, G3 = self.interaction_energies()
        return (2 * G2 + G3) / abs(self.delta0)

    def healing_length(self):
        g = (self.g_uu + self.g_dd + 2 * self.g_ud) / 4
        if g <= 0:
            return math.inf
        return 1.0 / math.sqrt(g * self.rho_bar)

    def replace(self, **kw):
        d = dict(self.__dict__)
        d.update(kw)
        return ReservoirParams(**d)


@dataclass(frozen=True)
class PlaneWaveSolution:
    q: float
    k_m: float
    C: float
    D: float
    mu: float
    e_gs_per_particle: float
    rho_up: float
    rho_down: float
    theta_q: float

    @property
    def polarization(self):
        return self.rho_down / self.rho_up


def quartic(q, C, D):
    return q**4 + 2 * C * q**3 + (C * C + D * D - 1) * q * q - 2 * C * q - C * C


def _quartic_prime(q, C, D):
    return 4 * q**3 + 6 * C * q * q + 2 * (C * C + D * D - 1) * q - 2 * C


def quartic_root(C, D, tol=1e-14):
    """Unique root of the condensation quartic in (0, 1].

    f(0) = -C^2 <= 0 and f(1) = D^2 >= 0, so [0, 1] always brackets it.
    """
    if C == 0 and D == 0:
        return 1.0
    lo, hi = 0.0, 1.0
    # endpoint values in closed form; the expanded polynomial cancels badly at q = 1
    flo, fhi = -C * C, D * D
    if not (flo <= 0 <= fhi):
        raise NoPositiveRoot(f"quartic not bracketed on [0, 1] (C={C}, D={D})")
    if fhi == 0:
        return 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if quartic(mid, C, D) < 0:
            lo = mid
        else:
            hi = mid
    q = 0.5 * (lo + hi)
    d = _quartic_prime(q, C, D)
    if d != 0:
        qn = q - quartic(q, C, D) / d
        if lo - tol <= qn <= hi + tol and abs(quartic(qn, C, D)) <= abs(quartic(q, C, D)):
            q = qn
    if not 0 < q <= 1:
        raise NoPositiveRoot(f"root {q} outside (0, 1]")
    return min(q, 1.0)


def solve_plane_wave(params: ReservoirParams) -> PlaneWaveSolution:
    G1, G2, G3 = params.interaction_energies()
    ad = abs(params.delta0)
    if 2 * G2 + G3 >= ad:
        raise PhaseConditionViolated(
            f"2*G2 + G3 = {2 * G2 + G3:.6g} >= |delta0| = {ad:.6g}")
    C = (ad - G3) / (2 * (1 - G2))
    D = params.omega0 / (2 * (1 - G2))
    q = quartic_root(C, D)
    c = math.sqrt(max(0.0, 1 - q * q))
    mu = 1 + 2 * G1 - q * (ad - 2 * G3) - q * q * (1 - 2 * G2) - params.omega0 * c
    e_gs = 1 + G1 - q * (ad - G3) - q * q * (1 - G2) - params.omega0 * c
    rho_up = params.rho_bar * (1 + q) / 2
    rho_down = params.rho_bar - rho_up
    theta = math.atan2(q, c)
    return PlaneWaveSolution(q=q, k_m=q * params.k0, C=C, D=D, mu=mu,
                             e_gs_per_particle=e_gs, rho_up=rho_up,
                             rho_down=rho_down, theta_q=theta)


# --- Bogoliubov-de Gennes -------------------------------------------------

def _half_rotation(theta):
    """Orthogonal map from rotated-basis to sign-fixed lab-basis amplitudes."""
    c2, s2 = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c2, s2], [-s2, c2]])


def lab_bdg_matrix(params, pw, p):
    """Linearized GP operator in the lab basis at relative momentum p = k - k_m.

    Amplitudes are sign-fixed: the down component of the condensate carries a
    phase pi, which is absorbed so both condensate amplitudes are positive.
    Accepts scalar or array p; returns (..., 4, 4).
    """
    p = np.asarray(p, dtype=float)
    q, d0, W = pw.q, params.delta0, params.omega0
    g = np.array([[params.g_uu, params.g_ud], [params.g_ud, params.g_dd]])
    phi = np.sqrt([pw.rho_up, pw.rho_down])
    X = np.diag(g @ phi**2) + g * np.outer(phi, phi)
    Y = g * np.outer(phi, phi)

    def h(K):
        out = np.zeros(K.shape + (2, 2))
        out[..., 0, 0] = K * K + 1 - 2 * K + d0
        out[..., 1, 1] = K * K + 1 + 2 * K - d0
        out[..., 0, 1] = out[..., 1, 0] = -W
        return out

    eye = np.eye(2)
    A = h(q + p) - pw.mu * eye + X
    B = h(q - p) - pw.mu * eye + X
    M = np.zeros(p.shape + (4, 4))
    M[..., :2, :2] = A
    M[..., :2, 2:] = Y
    M[..., 2:, :2] = -Y
    M[..., 2:, 2:] = -B
    return M


def rotated_bdg_matrix(params, pw, p):
    """BdG operator in the rotated (+, -) basis, general couplings."""
    R = _half_rotation(pw.theta_q)
    T = np.zeros((4, 4))
    T[:2, :2] = R.T
    T[2:, 2:] = R.T
    return T @ lab_bdg_matrix(params, pw, p) @ T.T


def _diagonalize(M, p_arr, tol=1e-8):
    """Positive-norm modes of a batch of real BdG matrices.

    Returns omega (n, 2) and amplitudes (n, 2, 4) ordered lower, upper.
    """
    ev, vec = np.linalg.eig(M)
    scale = 1.0 + np.abs(ev).max(axis=1)
    bad = np.abs(ev.imag) > tol * scale[:, None]
    n = M.shape[0]
    omega = np.empty((n, 2))
    amps = np.empty((n, 2, 4))
    for i in range(n):
        keep = []
        for j in range(4):
            v = vec[i, :, j]
            v = v * np.exp(-1j * np.angle(v[np.argmax(np.abs(v))]))
            v = v.real
            norm = v[:2] @ v[:2] - v[2:] @ v[2:]
            if norm > 1e-12:
                if bad[i, j]:
                    raise DiagonalizationFailure(
                        f"complex frequency {ev[i, j]} at p = {p_arr[i]:.6g}")
                keep.append((ev[i, j].real, v / math.sqrt(norm)))
        if len(keep) != 2:
            raise DiagonalizationFailure(
                f"found {len(keep)} positive-norm modes at p = {p_arr[i]:.6g}")
        keep.sort(key=lambda t: t[0])
        for b in range(2):
            if keep[b][0] < -tol * scale[i]:
                raise DiagonalizationFailure(
                    f"negative frequency {keep[b][0]:.3e} at p = {p_arr[i]:.6g}")
            omega[i, b] = max(keep[b][0], 0.0)
            amps[i, b] = keep[b][1]
    return omega, amps


def _fix_gauge(amps):
    """Align eigenvector signs along the grid so neighbours vary smoothly."""
    out = amps.copy()
    for b in range(out.shape[1]):
        if out[0, b] @ np.array([1.0, 1.0, 1.0, 1.0]) < 0:
            out[0, b] *= -1
        for i in range(1, out.shape[0]):
            if out[i, b] @ out[i - 1, b] < 0:
                out[i, b] *= -1
    return out


def rotated_to_lab(amps, theta):
    """Map rotated amplitudes (u+, u-, v+, v-) to sign-fixed lab (u_up, u_dn, v_up, v_dn)."""
    R = _half_rotation(theta)
    u = amps[..., :2] @ R.T
    v = amps[..., 2:] @ R.T
    return np.concatenate([u, v], axis=-1)


def q_coefficients(amps, theta, q):
    """Lab density coefficients (Q_up, Q_down) from rotated amplitudes."""
    s, c = math.sin(theta), math.cos(theta)
    sig = amps[..., :2] + amps[..., 2:]
    out = np.empty(amps.shape[:-1] + (2,))
    for i, nu in enumerate((1, -1)):
        norm = 2 * math.sqrt(1 + nu * q) if 1 + nu * q > 0 else math.inf
        w_plus = (1 + nu * s + nu * c) / norm
        w_minus = (1 + nu * s - nu * c) / norm
        out[..., i] = w_plus * sig[..., 0] + w_minus * sig[..., 1]
    return out


@dataclass(frozen=True)
class BdgMode:
    k: float
    branch: str
    omega: float
    u_plus: float
    u_minus: float
    v_plus: float
    v_minus: float
    q_up: float
    q_down: float

    def normalization(self):
        return self.u_plus**2 + self.u_minus**2 - self.v_plus**2 - self.v_minus**2


class BdgSpectrum(list):
    """List of BdgMode (lower then upper branch per k) plus the array view.

    Keeps the parameters so downstream root finding can evaluate off-grid.
    """

    def __init__(self, modes, params, pw, k, omega, amps, Q):
        super().__init__(modes)
        self.params = params
        self.pw = pw
        self.k = k
        self.omega = omega      # (n, 2)
        self.amps = amps        # (n, 2, 4) rotated basis
        self.Q = Q              # (n, 2, 2) lab basis

    def branch(self, which="-"):
        b = 0 if which == "-" else 1
        return self.omega[:, b]


def _mode_arrays(params, pw, k):
    k = np.atleast_1d(np.asarray(k, dtype=float))
    p = k - pw.k_m
    # the Goldstone point itself has zero norm; evaluate its limit from above
    p = np.where(np.abs(p) < 1e-12, 1e-9, p)
    M = rotated_bdg_matrix(params, pw, p)
    omega, amps = _diagonalize(M, p)
    return omega, amps


def bdg_modes(params: ReservoirParams, pw: PlaneWaveSolution, k_grid) -> BdgSpectrum:
    k = np.asarray(k_grid, dtype=float)
    if k.ndim != 1 or k.size == 0 or not np.all(np.isfinite(k)):
        raise ValueError("k_grid must be a finite 1D sequence")
    if k.size > 1 and not np.all(np.diff(k) > 0):
        raise ValueError("k_grid must be strictly increasing")
    omega, amps = _mode_arrays(params, pw, k)
    amps = _fix_gauge(amps)
    Q = q_coefficients(amps, pw.theta_q, pw.q)
    modes = []
    for i in range(k.size):
        for b, name in ((0, "-"), (1, "+")):
            a = amps[i, b]
            modes.append(BdgMode(k=float(k[i]), branch=name, omega=float(omega[i, b]),
                                 u_plus=a[0], u_minus=a[1], v_plus=a[2], v_minus=a[3],
                                 q_up=float(Q[i, b, 0]), q_down=float(Q[i, b, 1])))
    return BdgSpectrum(modes, params, pw, k, omega, amps, Q)


def default_grid(n=None, lo=None, hi=None):
    glo, ghi, gn = DEFAULT_GRID
    return np.linspace(glo if lo is None else lo, ghi if hi is None else hi,
                       gn if n is None else n)


def lower_branch(params, pw, k):
    """Continuous evaluation of the lower-branch frequency at scalar k."""
    return float(_mode_arrays(params, pw, [k])[0][0, 0])


# --- resonances and rates -------------------------------------------------

@dataclass(frozen=True)
class ChiralChannel:
    side: str
    k_res: float
    v_group: float
    gamma: float = float("nan")
    eta: float = float("nan")

    def __post_init__(self):
        for name in ("k_res", "v_group", "gamma", "eta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.side not in ("L", "R"):
            raise ValueError("side must be 'L' or 'R'")
        if self.side == "L" and not self.v_group < 0:
            raise NotInChiralWindow(f"left channel with v = {self.v_group}")
        if self.side == "R" and not self.v_group > 0:
            raise NotInChiralWindow(f"right channel with v = {self.v_group}")


def _bisect_resonance(f, a, b, fa, tol=1e-10, max_iter=200):
    fm = fa
    m = a
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        fm = f(m)
        if abs(fm) < tol and b - a < 1e-9:
            return m, fm
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return m, fm


def group_velocity(params, pw, k, spacing):
    """Centered difference with step spacing/8, one Richardson extrapolation."""
    h = spacing / 8

    def cd(step):
        return (lower_branch(params, pw, k + step) - lower_branch(params, pw, k - step)) / (2 * step)

    return (4 * cd(h / 2) - cd(h)) / 3


def scan_crossings(k, w_lower, omega):
    s = np.sign(w_lower - omega)
    return np.nonzero(s[:-1] * s[1:] < 0)[0]


def resonant_channels(modes: BdgSpectrum, omega: float):
    params, pw, k = modes.params, modes.pw, modes.k
    wl = modes.branch("-")
    idx = scan_crossings(k, wl, omega)
    if len(idx) != 2:
        raise NotInChiralWindow(
            f"{len(idx)} crossings of the lower branch at omega = {omega}")
    spacing = float(np.mean(np.diff(k)))
    found = []
    for i in idx:
        f = lambda x: lower_branch(params, pw, x) - omega
        ks, fs = _bisect_resonance(f, k[i], k[i + 1], wl[i] - omega)
        if abs(fs) >= 1e-10:
            raise NotInChiralWindow(f"resonance not converged, residual {fs:.2e}")
        found.append((ks, group_velocity(params, pw, ks, spacing)))
    (k1, v1), (k2, v2) = found
    if np.sign(v1) == np.sign(v2):
        raise NotInChiralWindow("both crossings have the same group-velocity sign")
    if v1 > 0:
        (k1, v1), (k2, v2) = (k2, v2), (k1, v1)
    return (ChiralChannel("L", k1, v1), ChiralChannel("R", k2, v2))


def eta_factor(k, k_m, omega, mass_ratio):
    return (1.0 / omega) / mass_ratio * (k - k_m) ** 2


def interpolate_q(modes: BdgSpectrum, k_s, branch="-"):
    """Linear interpolation of (Q_up, Q_down) between grid neighbours."""
    b = 0 if branch == "-" else 1
    k = modes.k
    i = int(np.searchsorted(k, k_s)) - 1
    i = min(max(i, 0), k.size - 2)
    t = (k_s - k[i]) / (k[i + 1] - k[i])
    return (1 - t) * modes.Q[i, b] + t * modes.Q[i + 1, b]


def channel_rate(channel, params, pw, modes, omega):
    eta = eta_factor(channel.k_res, pw.k_m, omega, params.mass_ratio)
    Qu, Qd = interpolate_q(modes, channel.k_res)
    amp = params.g_au * math.sqrt(pw.rho_up) * Qu + params.g_ad * math.sqrt(pw.rho_down) * Qd
    gamma = eta * math.exp(-eta) / abs(channel.v_group) * amp * amp
    return gamma, eta


def decay_rates(channels, params, pw, modes, omega):
    out = []
    for ch in channels:
        g, _ = channel_rate(ch, params, pw, modes, omega)
        out.append(g)
    left = [g for ch, g in zip(channels, out) if ch.side == "L"]
    right = [g for ch, g in zip(channels, out) if ch.side == "R"]
    return left[0], right[0]


def with_rates(channels, params, pw, modes, omega):
    res = []
    for ch in channels:
        g, eta = channel_rate(ch, params, pw, modes, omega)
        res.append(ChiralChannel(ch.side, ch.k_res, ch.v_group, g, eta))
    return tuple(res)


@dataclass
class ReservoirResult:
    params: ReservoirParams
    pw: PlaneWaveSolution
    modes: BdgSpectrum
    channels: tuple
    gamma_l: float
    gamma_r: float


def analyze(params, omega, k_grid=None):
    """Plane wave, spectrum, resonances and rates in one call."""
    pw = solve_plane_wave(params)
    modes = bdg_modes(params, pw, default_grid() if k_grid is None else k_grid)
    ch = with_rates(resonant_channels(modes, omega), params, pw, modes, omega)
    return ReservoirResult(params, pw, modes, ch, ch[0].gamma, ch[1].gamma)


def center_in_gap(modes: BdgSpectrum, window=1.0):
    """Frequency halfway between the lower-branch maximum near k_m and the upper-branch minimum."""
    k = modes.k
    near = np.abs(k - modes.pw.k_m) <= window
    lo = modes.branch("-")[near].max()
    hi = modes.branch("+").min()
    return 0.5 * (lo + hi)


@dataclass
class SweepRow:
    omega0: float
    gamma_l: float = float("nan")
    gamma_r: float = float("nan")
    ratio: float = float("nan")
    polarization: float = float("nan")
    omega: float = float("nan")
    error: str = ""

    def as_tuple(self):
        return (self.omega0, self.gamma_l, self.gamma_r, self.ratio, self.polarization)


def asymmetry_sweep(params, omega, omega0_grid, k_grid=None, recenter=False):
    rows = []
    for W in omega0_grid:
        row = SweepRow(omega0=float(W))
        try:
            p = params.replace(omega0=float(W))
            pw = solve_plane_wave(p)
            row.polarization = pw.polarization
            modes = bdg_modes(p, pw, default_grid() if k_grid is None else k_grid)
            w = center_in_gap(modes) if recenter else omega
            row.omega = w
            ch = resonant_channels(modes, w)
            gl, gr = decay_rates(ch, p, pw, modes, w)
            row.gamma_l, row.gamma_r = gl, gr
            row.ratio = gl / gr if gr > 0 else math.inf
        except (NotInChiralWindow, PhaseConditionViolated, NoPositiveRoot,
                DiagonalizationFailure) as exc:
            row.error = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def tune_zero_crossing(params, omega, lo, hi, side="L", k_grid=None, tol=1e-10):
    """Find Omega0 in [lo, hi] where the chosen channel's up-coefficient vanishes.

    With g_ad = 0 this switches that channel off.
    """
    def f(W):
        p = params.replace(omega0=W)
        pw = solve_plane_wave(p)
        modes = bdg_modes(p, pw, default_grid() if k_grid is None else k_grid)
        ch = resonant_channels(modes, omega)
        c = ch[0] if side == "L" else ch[1]
        return interpolate_q(modes, c.k_res)[0]

    from scipy.optimize import brentq
    return brentq(f, lo, hi, xtol=tol)


# --- validity --------------------------------------------------------------

@dataclass(frozen=True)
class ValidityReport:
    eps1_up: float
    eps1_down: float
    eps2_up: float
    eps2_down: float
    eps3: float
    eps1_plus: float
    eps1_minus: float
    eps2_plus: float
    eps2_minus: float
    eps3_rotated: float
    margins: dict = field(default_factory=dict)
    threshold: float = 0.1

    def _ok(self, *names):
        vals = [self.margins.get(n, float("nan")) for n in names]
        return all(v == v and v < self.threshold for v in vals)

    @property
    def markov_ok(self):
        return self._ok("markov_L", "markov_R")

    @property
    def rwa_ok(self):
        return self._ok("rwa")

    @property
    def quasi_bec_ok(self):
        return self._ok("interaction", "temperature")

    @property
    def deep_lattice_ok(self):
        return self._ok("deep_lattice")

    @property
    def thermal_ok(self):
        return self._ok("thermal")

    def checks(self):
        return {"markov": self.markov_ok, "rwa": self.rwa_ok,
                "quasi_bec": self.quasi_bec_ok, "deep_lattice": self.deep_lattice_ok}

    @property
    def all_ok(self):
        return all(self.checks().values())


def bose(omega, T):
    if T <= 0:
        return np.zeros_like(omega)
    x = omega / T
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(x)


def _trapz(y, x):
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def fluctuation_epsilons(params, pw, l, n_points=4001):
    """RMS expansion parameters in lab and rotated bases.

    Integration is over relative momentum p = k - k_m in [-pi/l, pi/l] with the
    p = 0 node removed.  Returns (lab, rotated) tuples of
    (eps1_a, eps1_b, eps2_a, eps2_b, eps3).
    """
    if n_points % 2 == 0:
        n_points += 1
    p = np.linspace(-math.pi / l, math.pi / l, n_points)
    p = p[np.abs(p) > 1e-12]
    omega, amps = _mode_arrays(params, pw, pw.k_m + p)
    T = params.temperature
    if T > 0 and np.any(omega <= 0):
        raise IntegrandSingular("zero-frequency node inside a thermal integral")
    occ = 2 * bose(omega, T) + 1                      # (n, 2)
    lab = rotated_to_lab(amps, pw.theta_q)

    def eps(a, rho):
        plus = a[..., :2] + a[..., 2:]
        minus = a[..., :2] - a[..., 2:]
        e1, e2 = [], []
        for c in range(2):
            i1 = np.sum(plus[..., c] ** 2 * occ, axis=1) / (2 * math.pi * rho[c])
            i2 = p**2 * np.sum(minus[..., c] ** 2 * occ, axis=1) / (8 * math.pi * rho[c])
            e1.append(math.sqrt(_trapz(i1, p)))
            e2.append(l * math.sqrt(_trapz(i2, p)))
        rel = minus[..., 0] / math.sqrt(rho[0]) - minus[..., 1] / math.sqrt(rho[1])
        i3 = np.sum(rel**2 * occ, axis=1) / (8 * math.pi)
        e3 = math.sqrt(_trapz(i3, p))
        return e1[0], e1[1], e2[0], e2[1], e3

    lab_eps = eps(lab, (pw.rho_up, max(pw.rho_down, 1e-300)))
    rot_eps = eps(amps, (params.rho_bar / 2, params.rho_bar / 2))
    return lab_eps, rot_eps


def default_coarse_length(params):
    """Geometric mean of the interparticle distance and the healing length."""
    return math.sqrt(params.healing_length() / params.rho_bar)


def validity_epsilons(params, pw, modes=None, *, omega=None, channels=None,
                      n_spins=None, spacing=None, k_lat=None, threshold=0.1,
                      n_points=4001):
    """Expansion parameters plus the inequality margins that can be evaluated.

    Margins are ratios (small side / large side).  Checks whose inputs are not
    supplied stay NaN and therefore do not pass.
    """
    l = params.coarse_length or default_coarse_length(params)
    lab, rot = fluctuation_epsilons(params, pw, l, n_points)
    m = {}
    scale = 2 * params.rho_bar**2          # hbar^2 rho^2 / m_b in units of E0
    m["interaction"] = abs(pw.mu) / scale
    m["temperature"] = params.temperature / scale
    m["grid_lower"] = 1 / (params.rho_bar * l)
    m["grid_upper"] = l / params.healing_length()
    if omega is not None:
        m["thermal"] = params.temperature / omega
    if channels is not None:
        gam = {c.side: c.gamma for c in channels}
        floor = min(params.omega0, omega) if omega is not None else params.omega0
        m["rwa"] = max(gam.values()) / floor if floor > 0 else math.inf
        if n_spins is not None and spacing is not None:
            for c in channels:
                m["markov_" + c.side] = c.gamma * n_spins * spacing / (2 * math.pi * abs(c.v_group))
    if k_lat is not None and omega is not None:
        m["deep_lattice"] = (2 / omega) ** 2 * (1 / params.mass_ratio) ** 2 * k_lat**4
    return ValidityReport(*lab, *rot, margins=m, threshold=threshold)


# --- experimental conversions ---------------------------------------------

def g1d_from_scattering(a_s, omega_perp, mass):
    """Lowest-order 1D coupling 2 hbar omega_perp a_s (SI in, SI out).

    ``mass`` is the reduced mass of the colliding pair; it sets the transverse
    oscillator length used for the validity warning.
    """
    l_perp = math.sqrt(HBAR / (mass * omega_perp))
    if abs(a_s) / l_perp > 0.1:
        warnings.warn(f"|a_s|/l_perp = {abs(a_s) / l_perp:.3f} > 0.1",
                      ConfinementResonanceWarning, stacklevel=2)
    return 2 * HBAR * omega_perp * a_s


def photon_scattering_lifetime(omega0, gamma_line, fine_structure_splitting):
    if omega0 < 0 or gamma_line <= 0 or fine_structure_splitting <= 0:
        raise ValueError("inputs must be positive")
    rate = 12 * (gamma_line / fine_structure_splitting) * omega0
    tau = 2 * math.pi / rate if rate > 0 else math.inf
    return rate, tau
