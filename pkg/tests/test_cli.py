import csv
import json
import math
import subprocess
import sys

import pytest

from fbcap.cli import EXIT_INPUT, EXIT_OK, EXIT_SOLVER, EXIT_VALIDATION, main

AWGN = {
    "F": [[0.0]], "G": [[1.0]], "H": [[0.0]], "W": [[1.0]], "V": [[1.0]],
    "L": [[0.0]], "Sigma1": [[1.0]], "Lambda": [[1.0]], "P": 1.0,
}
MA05 = {
    "F": [[0.0]], "G": [[1.0]], "H": [[0.5]], "W": [[1.0]], "V": [[1.0]],
    "L": [[1.0]], "Sigma1": [[1.0]], "Lambda": [[1.0]], "P": 1.0,
}
UNDETECTABLE = {
    "F": [[2.0]], "G": [[1.0]], "H": [[0.0]], "W": [[1.0]], "V": [[1.0]],
    "L": [[0.0]], "Sigma1": [[1.0]], "Lambda": [[1.0]], "P": 1.0,
}


def write_model(tmp_path, payload, name="model.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_capacity_awgn_bits(tmp_path, capsys):
    model = write_model(tmp_path, AWGN)
    assert main(["capacity", model]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["units"] == "bits"
    assert out["capacity"] == pytest.approx(0.5, abs=1e-6)


def test_capacity_nats_and_scalar_agree(tmp_path, capsys):
    model = write_model(tmp_path, MA05)
    assert main(["capacity", model, "--units", "nats"]) == EXIT_OK
    general = json.loads(capsys.readouterr().out)
    assert main(["capacity", model, "--units", "nats", "--scalar"]) == EXIT_OK
    scalar = json.loads(capsys.readouterr().out)
    assert general["capacity"] == pytest.approx(scalar["capacity"], abs=1e-5)
    assert min(general["lmi_margins"]) >= -1e-8


def test_capacity_gamma_zero_is_lower(tmp_path, capsys):
    model = write_model(tmp_path, MA05)
    main(["capacity", model, "--units", "nats"])
    full = json.loads(capsys.readouterr().out)["capacity"]
    main(["capacity", model, "--units", "nats", "--gamma-zero"])
    iid = json.loads(capsys.readouterr().out)["capacity"]
    assert iid < full


def test_malformed_json_exit_code(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["capacity", str(path)]) == EXIT_INPUT
    assert main(["capacity", str(tmp_path / "missing.json")]) == EXIT_INPUT
    capsys.readouterr()


def test_validation_failure_exit_code(tmp_path, capsys):
    model = write_model(tmp_path, UNDETECTABLE)
    assert main(["capacity", model]) == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "detectability" in err


def test_validate_subcommand(tmp_path, capsys):
    good = write_model(tmp_path, MA05, "good.json")
    assert main(["validate", good]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["assumptions_hold"] is True
    bad = write_model(tmp_path, UNDETECTABLE, "bad.json")
    assert main(["validate", bad]) == EXIT_VALIDATION
    out = json.loads(capsys.readouterr().out)
    assert out["assumptions_hold"] is False


def test_dare_values(tmp_path, capsys):
    model = write_model(tmp_path, MA05)
    assert main(["dare", model]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["Sigma"][0][0] == pytest.approx(0.0, abs=1e-9)
    assert out["Psi"][0][0] == pytest.approx(1.0, abs=1e-9)
    assert out["Kp"][0][0] == pytest.approx(1.0, abs=1e-9)


def test_sweep_ar_row_count_and_monotone(tmp_path, capsys):
    out_path = tmp_path / "sweep.csv"
    code = main(["sweep", "ar", "0.1:2.0:0.1", "--out", str(out_path)])
    capsys.readouterr()
    assert code == EXIT_OK
    rows = list(csv.DictReader(out_path.open()))
    assert len(rows) == 20
    assert rows[0]["param"] == "0.1"
    c_fb = [float(r["c_fb"]) for r in rows]
    assert all(b >= a - 1e-9 for a, b in zip(c_fb, c_fb[1:]))
    for r in rows:
        assert float(r["r_iid"]) <= float(r["c_fb"]) + 1e-9


def test_sweep_ma_matches_oracle(tmp_path, capsys):
    out_path = tmp_path / "sweep.csv"
    code = main(["sweep", "ma", "0.2:0.8:0.3", "--units", "nats",
                 "--out", str(out_path)])
    capsys.readouterr()
    assert code == EXIT_OK
    rows = list(csv.DictReader(out_path.open()))
    assert len(rows) == 3
    for r in rows:
        assert abs(float(r["c_fb"]) - float(r["c_kim"])) <= 1e-4
        assert float(r["power_feedback"]) + float(r["power_iid"]) <= 1.0 + 1e-6


def test_sweep_bad_range(tmp_path, capsys):
    assert main(["sweep", "ma", "1.0:0.5:0.1"]) == EXIT_INPUT
    assert main(["sweep", "ma", "nonsense"]) == EXIT_INPUT
    capsys.readouterr()


def test_scop_below_capacity(tmp_path, capsys):
    model = write_model(tmp_path, MA05)
    assert main(["scop", model, "--n", "4", "--units", "nats"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["n"] == 4
    assert out["value_per_step"] < 0.5462
    assert out["value_per_step"] > 0.0


def test_simulate_summary_and_csv(tmp_path, capsys):
    model = write_model(tmp_path, MA05)
    csv_path = tmp_path / "trials.csv"
    code = main([
        "simulate", model, "--rate-frac", "0.4", "--n", "10",
        "--trials", "50", "--seed", "9", "--out", str(csv_path),
    ])
    out = json.loads(capsys.readouterr().out)
    assert code == EXIT_OK
    assert out["trials"] == 50
    assert 0.0 <= out["p_e"] <= 1.0
    assert out["ci_low"] <= out["p_e"] <= out["ci_high"]
    rows = list(csv.DictReader(csv_path.open()))
    assert len(rows) == 50
    assert set(rows[0]) == {"trial", "msg", "msg_hat", "error_flag"}


def run_cli(args):
    return subprocess.run(
        [sys.executable, "-m", "fbcap.cli", *args],
        capture_output=True, text=True,
    )


def test_cli_outputs_deterministic(tmp_path):
    model = write_model(tmp_path, MA05)
    a = run_cli(["capacity", model])
    b = run_cli(["capacity", model])
    assert a.returncode == b.returncode == EXIT_OK
    assert a.stdout == b.stdout

    args = ["simulate", model, "--rate-frac", "0.4", "--n", "10",
            "--trials", "40", "--seed", "3"]
    a = run_cli(args)
    b = run_cli(args)
    assert a.returncode == b.returncode == EXIT_OK
    assert a.stdout == b.stdout


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "1.0.0" in capsys.readouterr().out
