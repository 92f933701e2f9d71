import csv
import json
import subprocess
import sys

import pytest

from driftcomm.cli import SWEEP_HEADER, fmt, main

HEADER = "scenario,mode,variable,value,Ts_s,tau_star,mi_bits,rate_bits_per_s,error_prob,total_mass,policy"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_header_constant():
    assert ",".join(SWEEP_HEADER) == HEADER


def test_fmt():
    assert fmt(float("inf")) == "inf"
    assert fmt(float("nan")) == "nan"
    assert fmt(1.0 / 3.0) == "0.333333333333"
    assert fmt("x") == "x"


def test_interval_preset_reports_reference(capsys):
    code, out, _ = run(capsys, "interval", "--preset", "capillaries")
    assert code == 0
    rep = json.loads(out)
    assert rep["reference"] == {"one_isi_Ts_s": 2.064, "no_isi_Ts_s": 4.111, "criteria_hold_at_reference": True}
    assert rep["one_isi"]["criteria_met"] and rep["one_isi"]["Ts_s"] < 2.064


def test_interval_no_drift_reports_inf(capsys):
    code, out, _ = run(capsys, "interval", "--preset", "no_drift")
    rep = json.loads(out)
    assert code == 0
    assert rep["no_isi"]["Ts_s"] == "inf" and rep["no_isi"]["criteria_met"] is False


def test_interval_custom_is_deterministic(capsys):
    first = run(capsys, "interval", "--distance", "100", "--velocity", "10")
    second = run(capsys, "interval", "--distance", "100", "--velocity", "10")
    assert first[0] == 0 and first == second
    assert "reference" not in json.loads(first[1])


def test_rate_noiseless(capsys):
    code, out, _ = run(capsys, "rate", "--preset", "capillaries", "--snr", "inf", "--mode", "one-isi")
    rep = json.loads(out)
    assert code == 0 and rep["results"][0]["mi_bits"] == pytest.approx(2.0)


def test_rate_auto_high_snr(capsys):
    code, out, _ = run(capsys, "rate", "--preset", "capillaries", "--snr", "40")
    rep = json.loads(out)
    assert rep["selected"] == "one-isi" and len(rep["results"]) == 2


def test_sweep_csv(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--preset", "capillaries", "--variable", "snr_db",
                     "--range", "-10", "40", "5", "--out", str(out))
    assert code == 0
    text = out.read_text()
    assert text.splitlines()[0] == HEADER
    rows = list(csv.DictReader(text.splitlines()))
    assert len(rows) == 22
    assert [r["mode"] for r in rows[:2]] == ["one-isi", "no-isi"]
    assert [float(r["value"]) for r in rows[::2]] == list(range(-10, 41, 5))


def test_sweep_infeasible_rows_use_inf(capsys):
    code, out, _ = run(capsys, "sweep", "--preset", "capillaries", "--variable", "velocity",
                       "--values", "1,2", "--t-max", "0.001")
    rows = list(csv.DictReader(out.splitlines()))
    assert code == 0 and all(r["Ts_s"] == "inf" for r in rows)


def test_sweep_grid(capsys):
    code, out, _ = run(capsys, "sweep", "--preset", "capillaries", "--variable", "velocity",
                       "--values", "100,1000", "--grid", "distance=100,1000")
    rows = list(csv.DictReader(out.splitlines()))
    assert code == 0 and len(rows) == 8
    ts = {(r["scenario"], r["mode"], r["value"]): float(r["Ts_s"]) for r in rows}
    assert ts[("capillaries[distance=100]", "one-isi", "1000")] < ts[("capillaries[distance=100]", "one-isi", "100")]
    assert ts[("capillaries[distance=1000]", "one-isi", "100")] > ts[("capillaries[distance=100]", "one-isi", "100")]


def test_sweep_workers_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--preset", "vena_cava", "--variable", "snr_db", "--range", "0", "30", "10"]
    assert run(capsys, *args, "--out", str(a))[0] == 0
    assert run(capsys, *args, "--workers", "2", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_pdf(capsys):
    code, out, _ = run(capsys, "pdf", "--preset", "strong_drift", "--span", "1", "100", "200")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "t_s,pdf_per_s,cdf"
    cdf = [float(line.split(",")[2]) for line in lines[1:]]
    assert all(a <= b for a, b in zip(cdf, cdf[1:]))


@pytest.mark.parametrize("argv", [
    ["pdf", "--preset", "capillaries", "--times", "0,1"],
    ["pdf", "--preset", "capillaries", "--times", "2,1"],
    ["sweep", "--preset", "capillaries", "--variable", "snr_db", "--values", "1,3,2"],
    ["sweep", "--preset", "capillaries", "--variable", "snr_db"],
    ["interval"],
    ["interval", "--preset", "capillaries", "--temperature", "300"],
    ["interval", "--config", "/nonexistent.json"],
    ["sweep", "--preset", "capillaries", "--variable", "snr_db", "--values", "1",
     "--out", "/nonexistent/dir/x.csv"],
])
def test_usage_errors_exit_1(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and "error" in err


@pytest.mark.parametrize("argv", [["interval", "--bogus"], ["frobnicate"], ["rate", "--mode", "both"]])
def test_argparse_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1


def test_bad_config_exits_1(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"scenario": {"preset": "capillaries"}, "isi": {"A": 2.0}}))
    assert run(capsys, "interval", "--config", str(path))[0] == 1


def test_config_echo_round_trip(tmp_path, capsys):
    echo = tmp_path / "echo.json"
    code, first, _ = run(capsys, "rate", "--preset", "vena_cava", "--snr", "12.5", "--policy", "renormalize",
                         "--echo-config", str(echo))
    assert code == 0
    code, second, _ = run(capsys, "rate", "--config", str(echo))
    assert code == 0 and first == second


def test_cli_overrides_config(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"scenario": {"preset": "capillaries"}, "noise": {"snr_db": 5}}))
    code, out, _ = run(capsys, "rate", "--config", str(path), "--snr", "25")
    assert json.loads(out)["snr_db"] == 25.0


def test_validate_passes_and_is_deterministic(tmp_path, capsys):
    args = ["validate", "--preset", "weak_drift", "--trials", "20000", "--symbols", "100000"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, *args, "--out", str(a))[0] == 0
    assert run(capsys, *args, "--workers", "2", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert rep["passed"] and {c["name"] for c in rep["checks"]} == {"ks", "mean", "censoring", "dt_halving",
                                                                     "stream"}


def test_validate_coarse_step_fails_with_exit_2(capsys):
    code, out, err = run(capsys, "validate", "--preset", "capillaries", "--dt", "0.5", "--trials", "5000",
                         "--symbols", "100000")
    assert code == 2
    failed = {c["name"] for c in json.loads(out)["checks"] if not c["passed"]}
    assert "dt_halving" in failed
    assert "FAIL capillaries dt_halving" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "driftcomm", "interval", "--preset", "vena_cava"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["reference"]["criteria_hold_at_reference"] is True
