import json
import math
import os

import numpy as np
import pytest

from chiral_dimers.chain import ChainParams
from chiral_dimers.errors import ConfigError, UnknownFigure
from chiral_dimers.lab import config as C
from chiral_dimers.lab.cli import main, override
from chiral_dimers.lab.estimates import physical_params
from chiral_dimers.lab.io import read_csv, read_matrix, write_csv, write_matrix
from chiral_dimers.lab.manifest import RunManifest
from chiral_dimers.lab.presets import ESTIMATES, PRESETS, fig2_params, preset
from chiral_dimers.lab.validate import validate

STEADY = """
[run]
mode = steady
seed = 3

[chain]
n_spins = 2
gamma_r = 1.0
gamma_l = 0.4   ; weaker left channel
rabi_re = 0.5
"""

RESERVOIR = """
[run]
mode = rates-sweep
omega0_from = 0.4
omega0_to = 0.8
omega0_steps = 3

[reservoir]
omega0 = 0.2
delta0 = -0.004
rho_bar = 6.14
g_uu = 0.23
g_dd = 0.23
g_ud = 0.23
g_au = -0.37
g_ad = -0.37
mass_ratio = 2
omega = 1.46
"""


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_config_parses_chain():
    cfg = C.loads(STEADY)
    assert cfg.mode == "steady" and cfg.seed == 3
    assert cfg.chain == ChainParams(2, rabi=0.5, gamma_l=0.4, gamma_r=1.0)


def test_missing_required_key_names_it(tmp_path, capsys):
    text = STEADY.replace("gamma_r = 1.0\n", "")
    with pytest.raises(ConfigError) as info:
        C.loads(text)
    assert info.value.key == "gamma_r"
    assert main(["run", write(tmp_path, text), "--out", str(tmp_path / "o")]) == 2
    assert "gamma_r" in capsys.readouterr().err


def test_bad_mode_and_section():
    with pytest.raises(ConfigError):
        C.loads(STEADY.replace("mode = steady", "mode = magic"))
    with pytest.raises(ConfigError):
        C.loads(STEADY + "\n[extra]\nx = 1\n")


def test_unit_conversion_round_trip():
    sc = C.Scales.from_units(3.5e3, ESTIMATES["mass_b_amu"] * 1.66053906660e-27)
    assert C.convert("omega", "3.5 kHz", sc) == pytest.approx(1.0)
    assert C.convert("omega0", "7000 Hz", sc) == pytest.approx(2.0)
    k0 = 1 / sc.length
    assert C.convert("rho_bar", f"{k0 * 1e-6} 1/um", sc) == pytest.approx(1.0)
    assert C.convert("rho_bar", f"{k0 * 1e-6} um^-1", sc) == pytest.approx(1.0)
    assert C.convert("spacing", f"{sc.length * 1e9} nm", sc) == pytest.approx(1.0)
    assert C.convert("g_uu", "0.5", sc) == 0.5
    with pytest.raises(ConfigError) as info:
        C.convert("spacing", "3 kHz", sc)
    assert info.value.key == "spacing"
    with pytest.raises(ConfigError):
        C.convert("omega", "3 kHz", None)


def test_run_is_reproducible(tmp_path):
    path = write(tmp_path, STEADY)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", path, "--out", str(a)]) == 0
    assert main(["run", path, "--out", str(b)]) == 0
    ma, mb = RunManifest.read(str(a)), RunManifest.read(str(b))
    assert ma.outputs == mb.outputs
    assert ma.config_hash == C.load(path).digest()
    meta, cols, rows = read_csv(str(a / "steady.csv"))
    assert meta["config_hash"] == ma.config_hash
    assert float(rows[0][cols.index("purity")]) > 1 - 1e-8
    rho = read_matrix(str(a / "rho_ss.txt"))
    assert rho.shape == (4, 4)


def test_rates_sweep_mode(tmp_path):
    assert main(["run", write(tmp_path, RESERVOIR), "--out", str(tmp_path / "r")]) == 0
    _, cols, rows = read_csv(str(tmp_path / "r" / "rates.csv"))
    assert len(rows) == 3
    r = [float(x[cols.index("ratio")]) for x in rows]
    assert r[0] < r[1] < r[2]


def test_trajectories_mode(tmp_path):
    text = STEADY.replace("mode = steady", "mode = trajectories\nt_final = 2\nn_points = 5\n"
                          "n_traj = 4\nobservables = populations, pairs, purity")
    assert main(["run", write(tmp_path, text), "--out", str(tmp_path / "t")]) == 0
    _, cols, rows = read_csv(str(tmp_path / "t" / "trajectories.csv"))
    assert "n_1_stderr" in cols and "purity_mean" in cols and len(rows) == 5
    _, hcols, hrows = read_csv(str(tmp_path / "t" / "jumps.csv"))
    assert hcols == ["t_start", "t_end", "jumps_R", "jumps_L"] and len(hrows) == 4


def test_sweep_command(tmp_path):
    path = write(tmp_path, STEADY)
    out = tmp_path / "s"
    assert main(["sweep", path, "--param", "gamma_l", "--from", "0.1", "--to", "0.3",
                 "--steps", "3", "--out", str(out)]) == 0
    meta, cols, rows = read_csv(str(out / "sweep.csv"))
    assert [r[3] for r in rows] == ["ok"] * 3
    assert meta["param"] == "gamma_l"
    assert os.path.exists(out / "gamma_l_002" / "steady.csv")
    with pytest.raises(ConfigError):
        override(STEADY, "nonexistent", 1.0)


def test_cli_errors(tmp_path):
    assert main(["figure", "fig9z", "--out", str(tmp_path)]) == 2
    assert main(["run", str(tmp_path / "missing.ini")]) == 2
    assert main(["bogus"]) == 2
    with pytest.raises(UnknownFigure):
        preset("fig9z")


def test_runtime_failure_exit_code(tmp_path):
    # N = 13 exceeds the Liouvillian size cap
    text = STEADY.replace("n_spins = 2", "n_spins = 13")
    assert main(["run", write(tmp_path, text), "--out", str(tmp_path / "x")]) == 1


def test_presets_are_frozen_and_match_captions():
    with pytest.raises(TypeError):
        PRESETS["fig3a"]["n_spins"] = 4
    assert PRESETS["fig3a"]["n_spins"] == 10 and PRESETS["fig3a"]["gamma_l"] == 0.0
    assert PRESETS["fig3b"]["gamma_l"] == 0.4
    assert PRESETS["fig3c"]["n_spins"] == 9 and PRESETS["fig3d"]["gamma_l"] == 0.4
    assert all(PRESETS[f]["rabi"] == 0.5 for f in ("fig3a", "fig3b", "fig3c", "fig3d"))
    p = fig2_params()
    assert (p.rho_bar, p.g_uu, p.delta0, p.omega0) == (6.14, 0.23, -0.004, 0.2)
    assert fig2_params(g_ad=0.0).g_ad == 0.0


def test_csv_and_matrix_io(tmp_path):
    path = str(tmp_path / "x.csv")
    write_csv(path, ["a", "b"], [[1, 2.5], [3, math.nan]], {"k": "v"})
    meta, cols, rows = read_csv(path)
    assert cols == ["a", "b"] and meta["k"] == "v" and rows[0] == ["1", "2.5"]
    m = np.array([[1 + 2j, 0], [0.5, -1j]])
    write_matrix(str(tmp_path / "m.txt"), m)
    assert np.array_equal(read_matrix(str(tmp_path / "m.txt")), m)


@pytest.fixture(scope="module")
def rb_yb():
    params, omega, _, lattice = physical_params()
    return params, omega, lattice


def test_validate_margins_grow_with_chain_length(rb_yb):
    params, omega, lattice = rb_yb
    small = validate(params, omega, ChainParams(10), lattice)
    large = validate(params, omega, ChainParams(30), lattice)
    assert large.margins["markov_R"] > small.margins["markov_R"]


def test_validate_rate_factor_breaks_markov(rb_yb):
    params, omega, lattice = rb_yb
    base = validate(params, omega, ChainParams(30), lattice)
    strong = validate(params, omega, ChainParams(30), lattice, rate_factor=100.0)
    assert strong.margins["markov_R"] > base.margins["markov_R"]
    assert not strong.checks["markov"]


def test_validate_temperature_margin_monotone(rb_yb):
    params, omega, lattice = rb_yb
    cold = validate(params, omega, None, lattice)
    hot = validate(params.replace(temperature=params.temperature * 10), omega, None, lattice)
    assert hot.margins["temperature"] > cold.margins["temperature"]


def test_validate_shallow_lattice_fails(rb_yb):
    params, omega, lattice = rb_yb
    bad = dict(lattice, k_lat=2 * params.k0)
    assert not validate(params, omega, None, bad).checks["deep_lattice"]


def test_estimates_command(tmp_path, capsys):
    assert main(["estimates", "--out", str(tmp_path / "e")]) == 0
    out = capsys.readouterr().out
    assert "gamma_r_over_2pi_hz" in out
    man = json.loads((tmp_path / "e" / "manifest.json").read_text())
    assert "estimates.csv" in man["outputs"]
