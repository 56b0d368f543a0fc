import json
import subprocess
import sys

import numpy as np
import pytest

from sidebandtomo import fileio
from sidebandtomo.cli import EXIT_CONFIG, EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, main

CONFIG = """\
experiment: bench
preparation: {kappa: 0.5263157894736842, beta0_sq: 50}
cavity: {r0_intensity: 0.04, bandwidth_mhz: 6.0, coupling: over, eta: 0.935}
omega_mhz: 17.0
detuning_grid: {start: -6, stop: 6, count: 121}
noise: {samples_per_point: 200, seed: 11}
"""


@pytest.fixture
def run(tmp_path, monkeypatch):
    for var in list(__import__("os").environ):
        if var.startswith("SIDEBAND_"):
            monkeypatch.delenv(var)
    cfg = tmp_path / "run.yaml"
    cfg.write_text(CONFIG)

    def _run(*args, out="out"):
        return main([*args, "--config", str(cfg), "--out", str(tmp_path / out), "--quiet"])

    _run.dir = tmp_path
    return _run


def test_prepare_writes_state_and_mimic(run):
    assert run("prepare") == EXIT_OK
    out = run.dir / "out"
    energy = json.loads((out / "state_energy.json").read_text())
    assert energy["ratio"] == pytest.approx(0.277, abs=5e-4)
    mimic = json.loads((out / "mimic_energy.json").read_text())
    assert mimic["imbalance"] == pytest.approx(0, abs=1e-9)
    assert fileio.read_state(out / "state.json").cov.shape == (4, 4)


def test_full_pipeline(run):
    out = run.dir / "out"
    assert run("prepare") == EXIT_OK
    for tech in ("hd", "rd", "rd-locked"):
        assert run("scan", tech) == EXIT_OK
        assert run("scan", tech, "--state", str(out / "mimic.json")) == EXIT_OK
    summary = json.loads((out / "state_rd.json").read_text())
    assert summary["sql_level"] == 1.0 and summary["points"] == 121

    assert run("fit", str(out / "state_hd.csv"), "--model", "hd") == EXIT_OK
    assert run("fit", str(out / "state_rd.csv"), "--model", "rd-power") == EXIT_OK
    fit = json.loads((out / "state_rd_fit.json").read_text())
    assert set(fit["coefficients"]) == {"energy_sum", "energy_imbalance", "a_minus_b", "c"}

    assert run("reconstruct", str(out / "state_rd-locked.csv"), "--project") == EXIT_OK
    rec = json.loads((out / "state_rd-locked_reconstruction.json").read_text())
    assert rec["report"]["design_rank"] == 10

    assert run("compare", str(out / "state_hd.csv"), str(out / "mimic_hd.csv")) == EXIT_OK
    assert run("compare", str(out / "state_rd.csv"), str(out / "mimic_rd.csv")) == EXIT_OK
    hd = json.loads((out / "compare_state_hd_vs_mimic_hd.json").read_text())
    rd = json.loads((out / "compare_state_rd_vs_mimic_rd.json").read_text())
    assert hd["verdict"] == "indistinguishable"
    assert rd["verdict"] == "distinguishable"

    assert run("wigner", str(out / "state.json"), "--mode", "lower", "--grid=-5,5,11") == EXIT_OK
    lines = (out / "state_wigner_lower.csv").read_text().splitlines()
    assert lines[0] == "p,q,w" and len(lines) == 122


def test_reruns_are_byte_identical(run):
    run("prepare", out="a")
    run("prepare", out="b")
    for tech in ("rd", "rd-locked", "hd"):
        run("scan", tech, out="a")
        run("scan", tech, "--workers", "4", out="b")
    for name in ("state.json", "state_rd.csv", "state_rd-locked.csv", "state_hd.csv", "state_rd.json"):
        assert (run.dir / "a" / name).read_bytes() == (run.dir / "b" / name).read_bytes()


def test_seed_changes_output(run):
    run("prepare")
    run("scan", "rd", "--seed", "1", out="out")
    a = (run.dir / "out" / "state_rd.csv").read_text()
    run("scan", "rd", "--seed", "2", out="out")
    assert (run.dir / "out" / "state_rd.csv").read_text() != a


def test_env_override(run, monkeypatch):
    monkeypatch.setenv("SIDEBAND_KAPPA", "1.0")
    run("prepare")
    energy = json.loads((run.dir / "out" / "state_energy.json").read_text())
    assert energy["ratio"] == pytest.approx(1)


def test_config_error(run, tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("visibility: 3\n")
    assert main(["prepare", "--config", str(bad)]) == EXIT_CONFIG
    assert "visibility" in capsys.readouterr().err
    assert run("prepare", "--workers", "0") == EXIT_CONFIG


def test_missing_input(run, capsys):
    assert run("fit", str(run.dir / "nope.csv"), "--model", "hd") == EXIT_INPUT
    assert run("scan", "hd") == EXIT_INPUT
    assert "not found" in capsys.readouterr().err


def test_malformed_input(run, capsys):
    bad = run.dir / "bad.csv"
    bad.write_text("kind,abscissa,value,sigma\nHomodynePhase,0,x,0\n")
    assert run("fit", str(bad), "--model", "hd") == EXIT_INPUT
    assert "bad.csv:2" in capsys.readouterr().err


def test_numerical_error(run):
    # all points at the same detuning: the four-coefficient fit is rank deficient
    curve = run.dir / "flat.csv"
    curve.write_text("kind,abscissa,value,sigma\n" + "ResonatorDetuning,30,1.5,0.1\n" * 6)
    assert run("fit", str(curve), "--model", "rd-power") == EXIT_NUMERIC


def test_unphysical_state_file(run):
    state = run.dir / "bad_state.json"
    fileio.write_json(state, {"mean": [0, 0, 0, 0], "cov": (0.5 * np.eye(4)).tolist()})
    assert run("scan", "hd", "--state", str(state)) == EXIT_NUMERIC


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "sidebandtomo", "prepare", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "prepared" in proc.stdout
