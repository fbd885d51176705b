import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from apasqueeze import cli, params


def _rows(path):
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [[float(x) for x in row] for row in reader]


def test_derive_stdout(capsys):
    assert cli.main(["derive"]) == 0
    doc = json.loads(capsys.readouterr().out)
    units = doc["omega_r_units"]
    assert units["omega_sw"] == 20.0
    assert units["beta"] == pytest.approx(2.9872, abs=1e-4)
    assert units["nu"] > 0 and doc["branch"] == "printed"
    assert doc["si"]["omega_r_over_2pi_hz"] == pytest.approx(3773.3, abs=0.05)
    assert doc["weak_coupling"]["ok"] is True


def test_derive_branch_and_override(capsys):
    assert cli.main(["derive", "--branch", "diagonalizing", "--omega-sw", "10"]) == 0
    units = json.loads(capsys.readouterr().out)["omega_r_units"]
    assert units["omega_sw"] == 10.0 and units["nu"] < 0


@pytest.mark.parametrize(
    "argv",
    [
        ["derive", "--omega-sw", "-9"],
        ["derive", "--omega-sw", "abc"],
        ["derive", "--config", "/nonexistent.json"],
        ["nope"],
        ["squeeze"],
        ["squeeze", "--out", "x.csv", "--tau-steps", "1"],
        ["qfunc", "--grid", "1:2"],
        ["validate", "--cutoff", "0"],
    ],
)
def test_configuration_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli.main(argv) == 2


def test_bad_config_file(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n_atoms": 10}))
    assert cli.main(["derive", "--config", str(path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_squeeze_csv_and_manifest(tmp_path):
    out = tmp_path / "sq.csv"
    argv = ["squeeze", "--out", str(out), "--omega-sw", "0,20", "--tau-steps", "11", "--seedless"]
    assert cli.main(argv) == 0
    header, rows = _rows(out)
    assert header == ["omega_sw_over_omega_r", "tau", "s_q", "s_p"]
    assert len(rows) == 22
    assert rows[0] == [0.0, 0.0, 0.0, 0.0]
    assert rows[-1][1] == pytest.approx(4 * math.pi)
    manifest = cli.RunManifest.read(cli.manifest_path(out))
    assert manifest.command == "squeeze" and manifest.argv == argv
    assert set(manifest.derived) == {"0", "20"}
    assert manifest.derived["20"]["beta"] == pytest.approx(2.9872, abs=1e-4)
    assert manifest.tolerances["dual_route_worst"] <= 1e-10


def test_rerun_reproduces_output(tmp_path):
    out = tmp_path / "sq.csv"
    assert cli.main(["squeeze", "--out", str(out), "--tau-steps", "7"]) == 0
    first = out.read_bytes()
    out.unlink()
    assert cli.rerun(cli.manifest_path(out)) == 0
    assert out.read_bytes() == first


def test_config_file_roundtrip(tmp_path):
    import dataclasses

    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(dataclasses.asdict(params.reference_config(15.0))))
    out = tmp_path / "sq.csv"
    assert cli.main(["squeeze", "--config", str(cfg), "--out", str(out), "--tau-steps", "5"]) == 0
    _, rows = _rows(out)
    assert {r[0] for r in rows} == {15.0}
    assert cli.RunManifest.read(cli.manifest_path(out)).config_path == str(cfg)


def test_qfunc_initial_time(tmp_path):
    out = tmp_path / "q.csv"
    assert cli.main(["qfunc", "--out", str(out), "--grid", "-2:2:5,-1:1:3"]) == 0
    header, rows = _rows(out)
    assert header == ["gamma_re", "gamma_im", "q"]
    data = np.array(rows)
    assert data.shape == (15, 3)
    assert data[0, :2].tolist() == [-2.0, -1.0] and data[1, :2].tolist() == [-2.0, 0.0]
    expected = np.exp(-(data[:, 0] ** 2 + data[:, 1] ** 2)) / np.pi
    assert np.max(np.abs(data[:, 2] - expected)) < 1e-10


def test_qfunc_quarter_period_records_closed_form_residual(tmp_path):
    out = tmp_path / "q.csv"
    assert cli.main(["qfunc", "--out", str(out), "--tau", str(math.pi / 2), "--grid", "-3:3:13"]) == 0
    manifest = json.loads(cli.manifest_path(out).read_text())
    assert manifest["tolerances"]["closed_form_residual"] < 1e-7


def test_truncation_exit_4(tmp_path, capsys):
    out = tmp_path / "q.csv"
    assert cli.main(["qfunc", "--out", str(out), "--tau", "1", "--cutoff", "8"]) == 4
    assert "truncation" in capsys.readouterr().err


def test_negative_option_values(capsys):
    assert cli.main(["derive", "--omega-sw", "-1"]) == 0
    assert json.loads(capsys.readouterr().out)["omega_r_units"]["omega_sw"] == -1.0


def test_version(capsys):
    assert cli.main(["--version"]) == 0
    assert "apasqueeze" in capsys.readouterr().out


@pytest.mark.slow
def test_validate_flags_printed_branch(tmp_path, capsys):
    out = tmp_path / "val.json"
    code = cli.main(["validate", "--out", str(out), "--omega-sw", "20", "--tau-steps", "5"])
    assert code == 3
    doc = json.loads(out.read_text())
    assert doc["exit_code"] == 3 and doc["n_failing"] > 0
    names = {r["quantity"].split("[")[0] for r in doc["reports"] if r["rel_residual"] > 1e-6}
    assert {"s_q", "s_p", "offdiag_c2", "number_coefficient", "rho_c_trace_distance"} <= names
    assert "discrepancy:" in capsys.readouterr().err
    assert cli.manifest_path(out).exists()


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "apasqueeze", "derive", "--omega-sw", "5"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["omega_r_units"]["omega_sw"] == 5.0
