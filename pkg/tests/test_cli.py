import json
import os
import subprocess
import sys

import numpy as np
import pytest

from movplane_lab import cli
from movplane_lab.experiments import combine, jsonable
from movplane_lab.fraclap import Field
from movplane_lab.grid import build_grid


def run_cli(*args, env=None):
    e = dict(os.environ, **(env or {}))
    return subprocess.run([sys.executable, "-m", "movplane_lab", *args], capture_output=True, text=True, env=e)


def test_list_presets():
    p = run_cli("list-presets")
    assert p.returncode == 0
    data = json.loads(p.stdout)
    assert {"schrodinger-p3", "linear-decay", "ball-logistic"} <= set(data["nonlinearities"])
    assert set(data["experiments"]) == set(cli.PRESETS)


def test_catalog_functions():
    from movplane_lab.experiments import make_nonlinearity
    sch = make_nonlinearity({"id": "schrodinger-p3"})
    assert sch.f(0.0, np.array([2.0]))[0] == pytest.approx(6.0)
    assert make_nonlinearity({"id": "ball-logistic"}).f(0.0, np.zeros(1))[0] >= 0


@pytest.mark.parametrize("patch, fragment", [
    ({"h": 0.3}, "invalid grid"),
    ({"s": 1.5}, "s must lie"),
    ({"tolerances": {"tol_sym": -1}}, "tolerance"),
    ({"nonlinearity": {"id": "cubic"}}, "unknown nonlinearity"),
    ({"bogus": 1}, "unknown configuration keys"),
    ({"dim": 2, "radius": 4.0, "h": 1 / 32}, "dense-operator limit"),
])
def test_validate_config_rejects(tmp_path, patch, fragment):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"preset": "ball-symmetry", **patch}))
    p = run_cli("validate-config", "--config", str(cfg))
    assert p.returncode == 2 and fragment in p.stderr


def test_validate_config_accepts(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"preset": "barrier-suite", "seed": 3}))
    p = run_cli("validate-config", "--config", str(cfg))
    assert p.returncode == 0 and "barrier-suite" in p.stdout


def test_unknown_preset_and_bad_threads(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"preset": "nope"}))
    assert run_cli("validate-config", "--config", str(cfg)).returncode == 2
    p = run_cli("run", "--preset", "principle-suite", "--out", str(tmp_path / "o"), env={"MPL_THREADS": "x"})
    assert p.returncode == 2


def test_field_round_trip():
    g = build_grid(2, 1.0, 0.25)
    f = Field(g, np.arange(g.size, dtype=float) / 7, t=1.5)
    payload = cli.encode_field(f, 0.3)
    assert payload[:4] == b"MPL1"
    d = cli.decode_field(payload)
    assert d["shape"] == (8, 8) and d["h"] == 0.25 and d["s"] == 0.3 and d["t"] == 1.5
    assert np.array_equal(d["values"], f.values)
    with pytest.raises(ValueError):
        cli.decode_field(b"XXXX" + payload[4:])


def test_atomic_write(tmp_path):
    target = tmp_path / "sub" / "a.bin"
    cli.atomic_write(target, b"one")
    cli.atomic_write(target, b"two")
    assert target.read_bytes() == b"two"
    assert os.listdir(target.parent) == ["a.bin"]


def test_run_barrier_suite(tmp_path):
    out = tmp_path / "run"
    p = run_cli("run", "--preset", "barrier-suite", "--out", str(out), "--threads", "1")
    assert p.returncode == 0, p.stderr
    assert "C8 PASS" in p.stdout
    rep = json.loads((out / "report.json").read_text())
    assert rep["schema"] == cli.SCHEMA and rep["summary"] == {"status": "PASS", "exit_code": 0}
    assert [c["id"] for c in rep["checks"]] == ["C8"]
    for f in rep["files"]:
        payload = (out / f["name"]).read_bytes()
        assert len(payload) == f["bytes"]
        if f["kind"] == "field":
            assert cli.decode_field(payload)["dim"] == 1
    assert json.loads((out / "timing.json").read_text())["total_seconds"] > 0


def test_run_writes_series(tmp_path):
    out = tmp_path / "ws"
    p = run_cli("run", "--preset", "whole-space-symmetry", "--out", str(out))
    assert p.returncode == 0, p.stderr
    csvs = sorted(out.glob("series_*.csv"))
    assert csvs
    header = csvs[0].read_text().splitlines()[0].split(",")
    assert header[:3] == ["t", "sup_norm", "asymmetry"] and header[3].startswith("min_psi[")


def test_deterministic_reports(tmp_path):
    for name in ("a", "b"):
        assert run_cli("run", "--preset", "principle-suite", "--seed", "7", "--out", str(tmp_path / name)).returncode == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
    run_cli("run", "--preset", "principle-suite", "--seed", "8", "--out", str(tmp_path / "c"))
    assert (tmp_path / "a" / "report.json").read_bytes() != (tmp_path / "c" / "report.json").read_bytes()


def test_hypothesis_violation_exit_code(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"preset": "whole-space-symmetry", "nonlinearity": {"id": "ball-logistic"}}))
    p = run_cli("run", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert p.returncode == 3
    assert "NOT-APPLICABLE" in p.stdout


def test_overall_and_helpers():
    assert cli.overall(["PASS", "PASS"]) == ("PASS", 0)
    assert cli.overall(["PASS", "NOT-APPLICABLE"]) == ("NOT-APPLICABLE", 3)
    assert cli.overall(["NOT-APPLICABLE", "FAIL"]) == ("FAIL", 1)
    assert combine([]) == "PASS"
    assert jsonable({"a": np.float64(np.inf), "b": np.array([1, 2]), "c": float("nan")}) == \
        {"a": "inf", "b": [1, 2], "c": "nan"}


def test_seed_range(tmp_path):
    p = run_cli("run", "--preset", "principle-suite", "--seed", str(2**64), "--out", str(tmp_path / "o"))
    assert p.returncode == 2
