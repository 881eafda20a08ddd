"""Flat key = value experiment configs.

Sections: [reservoir], [chain], [run], [lattice] and optionally [units].
Reservoir and lattice values are dimensionless (E0, k0 units) unless they
carry a unit suffix, in which case [units] must give the energy scale
(``energy = 3.5 kHz``, i.e. E0/h) and the bath mass (``mass_b = 86.909 amu``).
Chain rates are always in units of gamma_R.
"""
from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field

from ..chain import ChainParams
from ..errors import ConfigError
from ..reservoir import AMU, HBAR, KB, ReservoirParams

MODES = ("spectrum", "rates-sweep", "evolve", "steady", "gap-scan", "imperfection-scan",
         "trajectories", "estimates", "validate")

# sections each mode needs besides [run]
NEEDS = {
    "spectrum": ("reservoir",),
    "rates-sweep": ("reservoir",),
    "evolve": ("chain",),
    "steady": ("chain",),
    "gap-scan": ("chain",),
    "imperfection-scan": ("chain",),
    "trajectories": ("chain",),
    "estimates": (),
    "validate": ("reservoir", "chain"),
}

RESERVOIR_REQUIRED = ("omega0", "delta0", "rho_bar", "g_uu", "g_dd", "g_ud", "g_au", "g_ad",
                      "mass_ratio")
RESERVOIR_OPTIONAL = ("k0", "length_L", "temperature", "coarse_length")
RESERVOIR_EXTRA = ("omega", "recenter")
CHAIN_REQUIRED = ("n_spins", "gamma_r")
CHAIN_OPTIONAL = ("rabi_re", "rabi_im", "detuning", "gamma_l", "epsilon_comm", "gamma_prime")
LATTICE_KEYS = ("spacing", "k_lat", "depth")

# physical dimension of each reservoir / lattice key
DIMENSION = {
    "omega0": "energy", "delta0": "energy", "omega": "energy", "depth": "energy",
    "temperature": "temperature",
    "rho_bar": "inverse_length", "k0": "inverse_length", "k_lat": "inverse_length",
    "length_L": "length", "coarse_length": "length", "spacing": "length",
    "g_uu": "coupling", "g_dd": "coupling", "g_ud": "coupling",
    "g_au": "coupling", "g_ad": "coupling",
}

_LENGTH = {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9,
           "a0": 5.29177210903e-11}
_FREQ = {"hz": 1.0, "khz": 1e3, "mhz": 1e6}
_TEMP = {"k": 1.0, "mk": 1e-3, "uk": 1e-6, "µk": 1e-6, "nk": 1e-9}
_MASS = {"kg": 1.0, "amu": AMU, "u": AMU}

_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


def split_unit(text, key):
    m = _NUM.match(text)
    if not m:
        raise ConfigError(f"{key}: cannot parse number from {text!r}", key)
    return float(m.group(1)), m.group(2)


@dataclass(frozen=True)
class Scales:
    """Physical value of E0 (J) and 1/k0 (m)."""
    energy: float
    length: float

    @classmethod
    def from_units(cls, freq_hz, mass_kg):
        e0 = 2 * math.pi * HBAR * freq_hz
        k0 = math.sqrt(2 * mass_kg * e0) / HBAR
        return cls(e0, 1 / k0)


def _inverse_length_factor(unit, key):
    u = unit.replace(" ", "")
    for pat in (r"^1/(\w+)$", r"^(\w+)\^-1$", r"^(\w+)-1$"):
        m = re.match(pat, u)
        if m and m.group(1) in _LENGTH:
            return 1 / _LENGTH[m.group(1)]
    raise ConfigError(f"{key}: unknown inverse-length unit {unit!r}", key)


def convert(key, text, scales: Scales | None):
    """Parse one reservoir/lattice value into E0 / k0 units."""
    value, unit = split_unit(text, key)
    if not unit:
        return value
    if scales is None:
        raise ConfigError(f"{key}: unit {unit!r} given but [units] section is missing", key)
    dim = DIMENSION.get(key)
    u = unit.lower()
    if dim == "energy":
        if u in _FREQ:
            return value * _FREQ[u] * 2 * math.pi * HBAR / scales.energy
        if u == "j":
            return value / scales.energy
    elif dim == "temperature":
        if u in _TEMP:
            return value * _TEMP[u] * KB / scales.energy
    elif dim == "length":
        if unit in _LENGTH:
            return value * _LENGTH[unit] / scales.length
    elif dim == "inverse_length":
        return value * _inverse_length_factor(unit, key) * scales.length
    elif dim == "coupling":
        if u.replace(" ", "") in ("jm", "j*m", "j·m"):
            return value / (scales.energy * scales.length)
    raise ConfigError(f"{key}: unit {unit!r} does not fit a {dim or 'dimensionless'} value", key)


def _plain(section, key, cast=float):
    text = section[key]
    try:
        value, unit = split_unit(text, key) if cast is float else (cast(text), "")
    except ValueError:
        raise ConfigError(f"{key}: invalid value {text!r}", key) from None
    if unit:
        raise ConfigError(f"{key}: must be dimensionless, got unit {unit!r}", key)
    return value


def _bool(text, key):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}", key)


def parse_list(text, key):
    try:
        return [float(x) for x in re.split(r"[,\s]+", text.strip()) if x]
    except ValueError:
        raise ConfigError(f"{key}: expected a list of numbers, got {text!r}", key) from None


@dataclass
class ExperimentConfig:
    mode: str
    run: dict
    reservoir: ReservoirParams | None = None
    omega: float | None = None
    recenter: bool = False
    chain: ChainParams | None = None
    lattice: dict = field(default_factory=dict)
    text: str = ""

    @property
    def seed(self):
        return int(self.run.get("seed", 0))

    @property
    def output(self):
        return self.run.get("output", "results")

    def digest(self):
        """Hash of the normalized config text (comments and spacing ignored)."""
        return hashlib.sha256(self.text.encode()).hexdigest()


def _normalized(cp):
    lines = []
    for s in sorted(cp.sections()):
        lines.append(f"[{s}]")
        for k in sorted(cp[s]):
            lines.append(f"{k}={cp[s][k].strip()}")
    return "\n".join(lines)


def _reader():
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                   interpolation=None)
    cp.optionxform = str                       # keys are case sensitive
    return cp


def parse_reservoir(sec, scales):
    for key in sec:
        if key not in RESERVOIR_REQUIRED + RESERVOIR_OPTIONAL + RESERVOIR_EXTRA:
            raise ConfigError(f"unknown reservoir key {key!r}", key)
    for key in RESERVOIR_REQUIRED:
        if key not in sec:
            raise ConfigError(f"missing reservoir key {key!r}", key)
    kw = {}
    for key in RESERVOIR_REQUIRED + RESERVOIR_OPTIONAL:
        if key in sec:
            kw[key] = _plain(sec, key) if key == "mass_ratio" else convert(key, sec[key], scales)
    try:
        params = ReservoirParams(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc), _key_in(str(exc), kw)) from None
    omega = convert("omega", sec["omega"], scales) if "omega" in sec else None
    recenter = _bool(sec["recenter"], "recenter") if "recenter" in sec else False
    return params, omega, recenter


def parse_chain(sec):
    for key in sec:
        if key not in CHAIN_REQUIRED + CHAIN_OPTIONAL:
            raise ConfigError(f"unknown chain key {key!r}", key)
    for key in CHAIN_REQUIRED:
        if key not in sec:
            raise ConfigError(f"missing chain key {key!r}", key)
    n = _plain(sec, "n_spins")
    if n != int(n) or n < 1:
        raise ConfigError(f"n_spins must be a positive integer, got {sec['n_spins']!r}", "n_spins")
    vals = {k: _plain(sec, k) for k in CHAIN_OPTIONAL + ("gamma_r",) if k in sec}
    rabi = complex(vals.pop("rabi_re", 0.5), vals.pop("rabi_im", 0.0))
    try:
        return ChainParams(int(n), rabi=rabi, **vals)
    except ValueError as exc:
        raise ConfigError(str(exc), _key_in(str(exc), vals)) from None


def _key_in(message, keys):
    for k in keys:
        if k in message:
            return k
    return None


def parse_lattice(sec, scales):
    out = {}
    for key in sec:
        if key not in LATTICE_KEYS:
            raise ConfigError(f"unknown lattice key {key!r}", key)
        out[key] = convert(key, sec[key], scales)
    return out


def parse_scales(cp):
    if not cp.has_section("units"):
        return None
    sec = cp["units"]
    for key in ("energy", "mass_b"):
        if key not in sec:
            raise ConfigError(f"missing units key {key!r}", key)
    f, fu = split_unit(sec["energy"], "energy")
    if fu.lower() not in _FREQ:
        raise ConfigError(f"energy: give E0/h as a frequency, got unit {fu!r}", "energy")
    m, mu = split_unit(sec["mass_b"], "mass_b")
    if mu.lower() not in _MASS:
        raise ConfigError(f"mass_b: unknown mass unit {mu!r}", "mass_b")
    return Scales.from_units(f * _FREQ[fu.lower()], m * _MASS[mu.lower()])


def loads(text) -> ExperimentConfig:
    cp = _reader()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for s in cp.sections():
        if s not in ("reservoir", "chain", "run", "lattice", "units"):
            raise ConfigError(f"unknown section [{s}]", s)
    if not cp.has_section("run") or "mode" not in cp["run"]:
        raise ConfigError("missing run key 'mode'", "mode")
    mode = cp["run"]["mode"].strip()
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {mode!r}", "mode")
    for s in NEEDS[mode]:
        if not cp.has_section(s):
            raise ConfigError(f"mode {mode!r} needs a [{s}] section", s)
    scales = parse_scales(cp)
    cfg = ExperimentConfig(mode, dict(cp["run"]), text=_normalized(cp))
    if cp.has_section("reservoir"):
        cfg.reservoir, cfg.omega, cfg.recenter = parse_reservoir(cp["reservoir"], scales)
    if cp.has_section("chain"):
        cfg.chain = parse_chain(cp["chain"])
    if cp.has_section("lattice"):
        cfg.lattice = parse_lattice(cp["lattice"], scales)
    if "seed" in cfg.run:
        try:
            seed = int(cfg.run["seed"])
        except ValueError:
            raise ConfigError(f"seed: expected an integer, got {cfg.run['seed']!r}", "seed") from None
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits", "seed")
    return cfg


def load(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def run_float(cfg, key, default=None):
    if key not in cfg.run:
        if default is None:
            raise ConfigError(f"mode {cfg.mode!r} needs run key {key!r}", key)
        return default
    return _plain(cfg.run, key)


def run_int(cfg, key, default=None):
    v = run_float(cfg, key, default)
    if v != int(v):
        raise ConfigError(f"{key}: expected an integer", key)
    return int(v)


def run_list(cfg, key, default=None):
    if key not in cfg.run:
        if default is None:
            raise ConfigError(f"mode {cfg.mode!r} needs run key {key!r}", key)
        return list(default)
    return parse_list(cfg.run[key], key)


def dumps_reservoir(params: ReservoirParams, omega=None):
    lines = ["[reservoir]"]
    for key in RESERVOIR_REQUIRED + RESERVOIR_OPTIONAL:
        v = getattr(params, key)
        if v is not None:
            lines.append(f"{key} = {v!r}")
    if omega is not None:
        lines.append(f"omega = {omega!r}")
    return "\n".join(lines) + "\n"


def dumps_chain(params: ChainParams):
    return "\n".join([
        "[chain]",
        f"n_spins = {params.n_spins}",
        f"rabi_re = {params.rabi.real!r}",
        f"rabi_im = {params.rabi.imag!r}",
        f"detuning = {params.detuning!r}",
        f"gamma_l = {params.gamma_l!r}",
        f"gamma_r = {params.gamma_r!r}",
        f"epsilon_comm = {params.epsilon_comm!r}",
        f"gamma_prime = {params.gamma_prime!r}",
    ]) + "\n"
