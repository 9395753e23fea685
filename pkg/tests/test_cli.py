import csv
import json
import math
import os
import subprocess
import sys

import pytest
from hypothesis import given, strategies as st

from dirac_green import __version__
from dirac_green.cli import _fmt, main

from conftest import GOLDEN

FREE_M1 = "spec:\n  mass: 1\n"


@pytest.fixture
def cfg(tmp_path):
    def make(text=""):
        p = tmp_path / "run.yaml"
        p.write_text(text)
        return str(p)
    return make


def run(cfg_path, out, command, *extra):
    return main([command, "--config", cfg_path, "--out", str(out), *extra])


def load(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline()
        rows = list(csv.DictReader(fh))
    return first, rows


def test_green_free(cfg, tmp_path):
    assert run(cfg(), tmp_path, "green") == 0
    d = load(tmp_path / "green.json")
    assert d["ok"] is True
    assert d["re"] == 0.0
    assert abs(d["im"] - GOLDEN) <= 1e-9
    assert d["version"] == __version__
    assert len(d["config_sha256"]) == 64
    for key in ("depth", "residual", "seed", "stop_reason"):
        assert key in d


def test_green_invalid_potential(cfg, tmp_path):
    text = "spec:\n  potential:\n    W1: {family: bump_table, table: {3: -1}}\n"
    assert run(cfg(text), tmp_path, "green") == 2
    d = load(tmp_path / "green.json")
    assert d["ok"] is False
    assert d["error"]["type"] == "InvalidPotential"


def test_missing_config(tmp_path, capsys):
    assert main(["green", "--config", str(tmp_path / "missing.yaml"), "--out", str(tmp_path)]) == 1
    assert "config error" in capsys.readouterr().err


def test_bad_override_is_config_error(cfg, tmp_path):
    assert run(cfg(), tmp_path, "green", "spec.mass=-2") == 1
    assert not (tmp_path / "green.json").exists()


def test_unwritable_out(cfg, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["green", "--config", cfg(), "--out", str(blocker / "sub")]) == 1


def test_unknown_command(cfg):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate", "--config", cfg()])
    assert exc.value.code == 2


def test_overrides_mixed_with_flags(cfg, tmp_path):
    assert main(["green", "green.lambda=[0, 2]", "--config", cfg(), "spec.mass=0",
                 "--out", str(tmp_path)]) == 0
    d = load(tmp_path / "green.json")
    assert d["lambda"] == [0.0, 2.0]
    assert d["im"] > 0


def test_scan_outputs(cfg, tmp_path):
    assert run(cfg(FREE_M1), tmp_path, "scan", "scan.x_grid=400", "scan.plot_script=true") == 0
    first, rows = read_csv(tmp_path / "scan.csv")
    meta = load(tmp_path / "scan_meta.json")
    assert first.startswith("# config_sha256=")
    assert first.strip().split("=")[1] == meta["config_sha256"]
    assert len(rows) == 1600
    assert list(rows[0]) == ["x", "eps", "abs_g", "im_g", "dist_to_i", "status"]
    eps = [float(r["eps"]) for r in rows]
    assert eps == sorted(eps, reverse=True)
    xs = [float(r["x"]) for r in rows[:400]]
    assert xs == sorted(xs)
    assert meta["heuristic"] is True
    assert meta["verdict"] == "BoundedEvidence"
    assert "threads" not in meta["config"]
    for r in meta["sup_table"]:
        sup = r["sup_abs_g"]
        assert all(float(x["abs_g"]) <= sup for x in rows if float(x["eps"]) == r["eps"])
    assert (tmp_path / "plot_scan.py").exists()
    assert load(tmp_path / "scan.json")["columns"][0] == "x"


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_number_round_trip(v):
    assert float(_fmt(v)) == v


def test_scan_csv_matches_json(cfg, tmp_path):
    assert run(cfg(FREE_M1), tmp_path, "scan", "scan.x_grid=7") == 0
    _, rows = read_csv(tmp_path / "scan.csv")
    js = load(tmp_path / "scan.json")["rows"]
    assert [float(r["abs_g"]) for r in rows] == [r[2] for r in js]
    assert [float(r["x"]) for r in rows] == [r[0] for r in js]


def test_formats_csv_only(cfg, tmp_path):
    assert run(cfg(FREE_M1), tmp_path, "scan", "scan.x_grid=3", "output.formats=csv") == 0
    assert (tmp_path / "scan.csv").exists()
    assert not (tmp_path / "scan.json").exists()
    assert (tmp_path / "scan_meta.json").exists()


def test_scan_threads_byte_identical(cfg, tmp_path):
    path = cfg(FREE_M1 + "scan:\n  x_grid: 60\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(path, a, "scan", "--threads", "1") == 0
    assert run(path, b, "scan", "--threads", "8") == 0
    for name in ("scan.csv", "scan.json", "scan_meta.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_scan_hash_changes_with_config(cfg, tmp_path):
    path = cfg(FREE_M1 + "scan:\n  x_grid: 5\n")
    assert run(path, tmp_path / "a", "scan") == 0
    assert run(path, tmp_path / "b", "scan", "spec.mass=0.5") == 0
    ha = load(tmp_path / "a" / "scan_meta.json")["config_sha256"]
    hb = load(tmp_path / "b" / "scan_meta.json")["config_sha256"]
    assert ha != hb


def test_density(cfg, tmp_path):
    text = FREE_M1 + "density: {x1: -0.5, x2: 0.5, x_grid: 21, eps: 1e-3}\n"
    assert run(cfg(text), tmp_path, "density") == 0
    _, rows = read_csv(tmp_path / "density.csv")
    assert list(rows[0]) == ["x", "rho_up", "rho_down", "rho_total"]
    center = [r for r in rows if float(r["x"]) == 0.0][0]
    assert float(center["rho_total"]) <= 0.05
    assert all(float(r["rho_total"]) >= 0 for r in rows)


def test_verify_small(cfg, tmp_path):
    assert run(cfg(), tmp_path, "verify", "verify.cases=2", "verify.N=400",
               "verify.imag=[0.5]") == 0
    d = load(tmp_path / "verify.json")
    assert d["passed"] is True
    assert d["max_error"] <= 1e-6
    assert len(d["rows"]) == 2 * 5 * 3


def test_verify_fail_exit(cfg, tmp_path):
    # a deliberately tiny section cannot meet the tolerance
    assert run(cfg(), tmp_path, "verify", "verify.cases=1", "verify.N=4",
               "verify.imag=[0.3]") == 2
    assert load(tmp_path / "verify.json")["passed"] is False


def test_eigs(cfg, tmp_path):
    assert run(cfg(), tmp_path, "eigs", "eigs.n0=3", "eigs.mass=0") == 0
    d = load(tmp_path / "eigs.json")
    assert d["passed"] is True
    want = [-math.sqrt(3), -1, 0, 1, math.sqrt(3)]
    got = sorted(set(round(v, 9) for v in d["eigenvalues"]))
    assert got == pytest.approx(want, abs=1e-8)


def test_console_script_and_logging(cfg, tmp_path):
    env = dict(os.environ, DIRAC_GREEN_LOG="info")
    out = subprocess.run([sys.executable, "-m", "dirac_green.cli", "green", "--config", cfg(),
                          "--out", str(tmp_path)], capture_output=True, text=True, env=env)
    assert out.returncode == 0
    assert "INFO" in out.stderr
    v = subprocess.run([sys.executable, "-m", "dirac_green.cli", "--version"],
                       capture_output=True, text=True)
    assert __version__ in v.stdout
