import json

import numpy as np
import pytest

from qrdiff.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, EXIT_VIOLATION, main, run_converge
from qrdiff.config import parse_config_text
from qrdiff.io import emit_plot_data, read_series, series_columns

SMALL_SEIRD = """
[model]
preset = seird_quadratic
[rates]
mu = 0.05
[grid]
shape = 12, 12
[initial]
kind = gaussian
width = 0.15
[run]
T = 0.5
checkpoints = 11
snapshots = 3
[energy]
orders = 2, 3
[audit]
n_interior = 512
n_face = 100
"""

ZERO_REACTION = """
[model]
preset = custom
species = a, b
phi = 1 + a*b
[reactions]
a = 0
b = 0
[diffusion]
a = 1
b = 2 + x
[initial]
a = 1 + cos(pi*x)
b = 0.5 + 0.1*cos(2*pi*x)*cos(pi*y)
[grid]
shape = 16, 8
[run]
T = 0.2
checkpoints = 9
"""


def write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_simulate_ok_and_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["simulate", write(tmp_path, SMALL_SEIRD), "-o", str(out)]) == EXIT_OK
    names = sorted(p.name for p in out.iterdir())
    assert names == ["config.ini", "energies.dat", "linf.dat", "masses.dat", "report.json", "series.csv",
                     "snapshots"]
    assert len(list((out / "snapshots").glob("snap_*.qdf"))) == 3
    report = json.loads((out / "report.json").read_text())
    assert report["violations"] == [] and report["exit_code"] == 0
    assert parse_config_text((out / "config.ini").read_text()) == parse_config_text(SMALL_SEIRD)


def test_series_golden_columns(tmp_path):
    out = tmp_path / "run"
    main(["simulate", write(tmp_path, SMALL_SEIRD), "-o", str(out)])
    header = (out / "series.csv").read_text().splitlines()[0]
    assert header == ("t,mass_s,mass_e,mass_i,mass_r,weighted_mass,linf_s,linf_e,linf_i,linf_r,L2,L3,"
                      "dissipation_ok")
    assert header.split(",") == series_columns(("s", "e", "i", "r"), (2, 3))
    s = read_series(out / "series.csv")
    assert len(s["t"]) == 11
    assert s["t"][0] == 0.0 and s["t"][-1] == pytest.approx(0.5)
    assert set(np.unique(s["dissipation_ok"])) <= {0.0, 1.0}


def test_reruns_are_byte_identical(tmp_path):
    cfg = write(tmp_path, SMALL_SEIRD)
    main(["simulate", cfg, "-o", str(tmp_path / "a")])
    main(["simulate", cfg, "-o", str(tmp_path / "b")])
    for name in ("series.csv", "report.json", "config.ini", "masses.dat", "energies.dat", "linf.dat"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    for p in (tmp_path / "a" / "snapshots").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / "snapshots" / p.name).read_bytes()


def test_zero_reactions_conserve_mass_columns(tmp_path):
    out = tmp_path / "z"
    assert main(["simulate", write(tmp_path, ZERO_REACTION), "-o", str(out)]) == EXIT_OK
    s = read_series(out / "series.csv")
    for col in ("mass_a", "mass_b"):
        assert np.max(np.abs(s[col] - s[col][0])) <= 1e-12 * abs(s[col][0])
    assert np.all(s["dissipation_ok"] == -1)
    assert "L2" not in s


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv("QRDIFF_OUTPUT_ROOT", str(tmp_path / "root"))
    assert main(["simulate", write(tmp_path, ZERO_REACTION), "-o", "rel/run"]) == EXIT_OK
    assert (tmp_path / "root" / "rel" / "run" / "series.csv").is_file()


def test_check_exit_codes(tmp_path, capsys):
    assert main(["check", write(tmp_path, SMALL_SEIRD)]) == EXIT_OK
    bad = SMALL_SEIRD.replace("mu = 0.05", "mu = 0.05\nA0 = 0.5")
    assert main(["check", write(tmp_path, bad, "bad.ini")]) == EXIT_VIOLATION
    assert "violated" in capsys.readouterr().out


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["simulate", write(tmp_path, "[run]\nT = -1\n")]) == EXIT_CONFIG
    assert "T must be positive" in capsys.readouterr().err
    assert main(["check", str(tmp_path / "missing.ini")]) == EXIT_CONFIG


def test_runtime_error_exit_code(tmp_path, capsys):
    text = ZERO_REACTION.replace("a = 0\n", "a = a*a*a\n").replace("a = 1 + cos(pi*x)", "a = 20 + cos(pi*x)")
    assert main(["simulate", write(tmp_path, text), "-o", str(tmp_path / "r")]) == EXIT_RUNTIME
    assert "runtime failure" in capsys.readouterr().err


def test_energy_subcommand_orders(tmp_path, capsys):
    out = tmp_path / "e"
    assert main(["energy", write(tmp_path, SMALL_SEIRD), "--p", "2", "-o", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "p = 2" in text and "p = 3" not in text
    assert read_series(out / "series.csv").keys() >= {"L2"}


class _Report:
    def __init__(self, m, energies):
        self.names = tuple(f"u{i}" for i in range(m))
        self.times = np.linspace(0, 1, 5)
        self.masses = np.ones((5, m))
        self.linf = np.ones((5, m))
        self.energies = energies


@pytest.mark.parametrize("m", [1, 3])
def test_plot_panels(tmp_path, m, capsys):
    rep = _Report(m, {2: np.array([0.0, 1, 2, 3, 4]), 3: np.array([1.0, 0, 2, 3, 4])})
    files = emit_plot_data(rep, tmp_path)
    assert len(files) == 3
    masses = np.loadtxt(tmp_path / "masses.dat", ndmin=2)
    assert masses.shape == (5, 1 + m)
    energies = np.loadtxt(tmp_path / "energies.dat", ndmin=2)
    assert energies.shape == (3, 3)
    assert np.all(energies[:, 1:] > 0)
    assert "omits 2 rows" in capsys.readouterr().out
    assert len(emit_plot_data(rep, tmp_path / ".", panels=("linf",))) == 1
    with pytest.raises(ValueError):
        emit_plot_data(rep, tmp_path, panels=("phase",))


def test_converge_heat_orders(tmp_path):
    cfg = parse_config_text("[model]\npreset = heat\n[grid]\nshape = 16\n[run]\nT = 0.1\n")
    code, t = run_converge(cfg, 3, tmp_path)
    assert code == EXIT_OK and t["reference"] == "exact"
    assert all(1.8 <= o <= 2.2 for o in t["orders"])
    assert json.loads((tmp_path / "converge.json").read_text())["errors"] == pytest.approx(t["errors"])


def test_converge_zero_solution_has_zero_error(tmp_path):
    text = ("[model]\npreset = custom\nspecies = u\nphi = 1\n[reactions]\nu = 0\n[diffusion]\nu = 1\n"
            "[initial]\nu = 0\n[exact]\nu = 0\n[grid]\nshape = 8\n[run]\nT = 0.05\n")
    code, t = run_converge(parse_config_text(text), 2, tmp_path)
    assert t["errors"] == [0.0, 0.0]


def test_converge_seird_self_order(tmp_path):
    cfg = parse_config_text(SMALL_SEIRD.replace("shape = 12, 12", "shape = 8, 8"))
    code, t = run_converge(cfg, 3, tmp_path)
    assert t["reference"] == "self" and len(t["errors"]) == 2
    assert t["orders"][0] >= 0.9


def test_converge_eps_cli(tmp_path, capsys):
    text = "[model]\npreset = heat\n[grid]\nshape = 32\n[run]\nT = 0.2\n[converge]\nkind = eps\n"
    assert main(["converge", write(tmp_path, text), "-o", str(tmp_path / "c")]) == EXIT_OK
    assert "strictly decreasing: True" in capsys.readouterr().out
