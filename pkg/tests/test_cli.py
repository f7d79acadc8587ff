"""Command line interface: artifacts, formats, exit codes, reproducibility."""

import json
import hashlib
import re

import numpy as np
import pytest

import qpic
from qpic.cli import main

FAST_HOM = ["--grid", "64", "--points", "9"]


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main([*argv, "-o", str(out)])
    return code, out


def test_hom_artifacts(tmp_path):
    code, out = run(tmp_path, "hom", *FAST_HOM)
    assert code == 0
    csv_path = out / "hom_scan.csv"
    manifest_path = out / "hom_manifest.json"
    assert csv_path.exists() and manifest_path.exists()

    blob = csv_path.read_bytes()
    # RFC 4180: CRLF record separators
    assert b"\r\n" in blob
    lines = blob.decode("ascii").split("\r\n")
    assert lines[0] == "delta_l_um,coincidence_probability"
    assert len([ln for ln in lines if ln]) == 10
    # every numeric field carries 12 significant digits
    for field in lines[1].split(","):
        assert re.fullmatch(r"-?\d\.\d{11}e[+-]\d{2,3}", field)

    manifest = json.loads(manifest_path.read_text())
    assert manifest["command"] == "hom"
    assert manifest["summary"]["visibility"] > 0.9
    assert "versions" in manifest and "numpy" in manifest["versions"]
    # recorded output hash matches the file on disk
    entry = [o for o in manifest["outputs"] if o["path"] == "hom_scan.csv"][0]
    assert entry["sha256"] == hashlib.sha256(blob).hexdigest()
    # input netlist recorded with its hash
    assert manifest["inputs"][0]["path"].endswith("ideal_chip.net")


def test_reproducible_byte_identical(tmp_path):
    code_a, out_a = run(tmp_path / "a", "hom", *FAST_HOM)
    code_b, out_b = run(tmp_path / "b", "hom", *FAST_HOM)
    assert code_a == code_b == 0
    assert (out_a / "hom_scan.csv").read_bytes() == (out_b / "hom_scan.csv").read_bytes()
    ma = json.loads((out_a / "hom_manifest.json").read_text())
    mb = json.loads((out_b / "hom_manifest.json").read_text())
    assert ma["outputs"] == mb["outputs"]
    assert ma["summary"] == mb["summary"]


def test_gnuplot_script(tmp_path):
    code, out = run(tmp_path, "hom", *FAST_HOM, "--gnuplot-script")
    assert code == 0
    script = (out / "hom_scan.gp").read_text()
    assert "hom_scan.csv" in script
    manifest = json.loads((out / "hom_manifest.json").read_text())
    assert any(o["path"] == "hom_scan.gp" for o in manifest["outputs"])


def test_jsa_command(tmp_path):
    code, out = run(tmp_path, "jsa", "--grid", "64", "--dump-grid")
    assert code == 0
    csv_lines = (out / "jsa_marginals.csv").read_bytes().decode().split("\r\n")
    assert csv_lines[0].startswith("photon,wavelength_um")
    grid_files = list(out.glob("*amplitude*")) + list(out.glob("*grid*"))
    assert grid_files, "dump-grid should write the amplitude table"


def test_sweep_command(tmp_path):
    code, out = run(tmp_path, "sweep", "--element", "pc", "--grid", "64",
                    "--points", "9", "--fractions", "0,1")
    assert code == 0
    lines = (out / "sweep_summary.csv").read_bytes().decode().split("\r\n")
    assert lines[0].split(",")[0] == "fraction"
    rows = [ln.split(",") for ln in lines[1:] if ln]
    assert len(rows) == 2
    # fully broken converter kills the V,V rate
    assert float(rows[1][3]) < 1e-9


def test_pc_window_command(tmp_path):
    code, out = run(tmp_path, "pc-window")
    assert code == 0
    manifest = json.loads((out / "pc_window_manifest.json").read_text())
    assert manifest["summary"]["fwhm_um"] * 1e3 == pytest.approx(3.18, abs=0.05)
    assert manifest["summary"]["peak_fraction"] == pytest.approx(1.0, abs=1e-6)


def test_switch_map_command(tmp_path):
    code, out = run(tmp_path, "switch-map", "--points", "21")
    assert code == 0
    s = json.loads((out / "switch_map_manifest.json").read_text())["summary"]
    assert s["bar_min"] < 0.01
    assert s["bar_max"] > 0.99


def test_coupler_fit_command(tmp_path):
    code, out = run(tmp_path, "coupler-fit")
    assert code == 0
    fit = qpic.load_coupler_fit(out / "coupler_fit.txt")
    assert fit.beat_te == pytest.approx(900.0, abs=20.0)
    assert fit.beat_tm == pytest.approx(850.0, abs=20.0)
    s = json.loads((out / "coupler_fit_manifest.json").read_text())["summary"]
    assert s["ratio_h"] < 0.05 and s["ratio_v"] < 0.05
    assert 0 < s["alpha_rad"] <= np.pi / 2


def test_tuning_command(tmp_path):
    code, out = run(tmp_path, "tuning", "--tmin", "20", "--tmax", "30",
                    "--tstep", "2")
    assert code == 0
    lines = (out / "tuning_temperature.csv").read_bytes().decode().split("\r\n")
    rows = np.array([ln.split(",") for ln in lines[1:] if ln], dtype=float)
    assert len(rows) == 6
    # degeneracy walks to shorter wavelength as the chip heats
    assert np.all(np.diff(rows[:, 1]) < 0)
    s = json.loads((out / "tuning_manifest.json").read_text())["summary"]
    assert s["degeneracy_slope_um_per_c"] < 0


def test_temp_scan_command(tmp_path):
    code, out = run(tmp_path, "temp-scan", "--grid", "64", "--points", "9",
                    "--temperatures", "24.5,29.5")
    assert code == 0
    lines = (out / "temp_scan.csv").read_bytes().decode().split("\r\n")
    header = lines[0].split(",")
    assert "outside_window" in header
    rows = [ln.split(",") for ln in lines[1:] if ln]
    assert len(rows) == 2
    flag = rows[0][header.index("outside_window")]
    assert flag in ("0", "1")
    s = json.loads((out / "temp_scan_manifest.json").read_text())["summary"]
    assert s["best_temperature_c"] == pytest.approx(24.5)


def test_exit_code_validation(tmp_path):
    assert main(["hom", "--grid", "2", "-o", str(tmp_path)]) == 2
    assert main(["hom", "--netlist", str(tmp_path / "nope.net"),
                 "-o", str(tmp_path)]) == 2


def test_exit_code_numerical(tmp_path):
    # no phase-matched root for a wildly wrong poling period
    assert main(["tuning", "--poling", "5.0", "-o", str(tmp_path)]) == 3


def test_exit_code_threads(tmp_path, monkeypatch):
    monkeypatch.setenv("QPIC_THREADS", "zero")
    assert main(["hom", "--grid", "32", "--points", "5",
                 "-o", str(tmp_path)]) == 2


def test_usage_error_exits_two():
    with pytest.raises(SystemExit) as info:
        main(["no-such-command"])
    assert info.value.code == 2


def test_pol_option(tmp_path):
    code, out = run(tmp_path, "hom", "--grid", "64", "--points", "9",
                    "--pol", "insensitive")
    assert code == 0
    manifest = json.loads((out / "hom_manifest.json").read_text())
    # without polarisation selection the baseline sits near 1/2 but the
    # scan still dips
    assert manifest["summary"]["baseline"] == pytest.approx(0.5, abs=0.02)
