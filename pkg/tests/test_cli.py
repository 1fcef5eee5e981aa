import json
import subprocess
import sys

from spectralperc import cli


def run_cli(args):
    from io import StringIO

    buf = StringIO()
    old = sys.stdout
    sys.stdout = buf
    try:
        code = cli.main(args)
    finally:
        sys.stdout = old
    lines = [json.loads(l) for l in buf.getvalue().strip().splitlines() if l.startswith("{")]
    return code, lines


def test_identity_suite_exits_zero():
    code, recs = run_cli(["identity-suite", "--lattice", "tri", "--R", "3", "--seed", "1"])
    assert code == 0
    assert all(r["params"]["ok"] for r in recs)


def test_arm_prob_degenerate_convention():
    code, recs = run_cli(
        ["arm-prob", "--lattice", "tri", "--j", "4", "--r", "9", "--R", "3",
         "--samples", "50", "--seed", "0"]
    )
    assert code == 0
    assert recs[0]["value"] == 1.0
    assert recs[0]["n"] == 0  # no samples consumed


def test_rerun_identical_numeric_fields(tmp_path):
    args = ["arm-prob", "--lattice", "tri", "--j", "1", "--r", "1", "--R", "6",
            "--samples", "3000", "--seed", "77"]
    code1, recs1 = run_cli(args)
    code2, recs2 = run_cli(args)
    assert code1 == code2 == 0
    for a, b in zip(recs1, recs2):
        assert a["value"] == b["value"]
        assert a["stderr"] == b["stderr"]
        assert a["n"] == b["n"]


def test_worker_count_does_not_change_results(monkeypatch):
    args = ["coupled-prob", "--lattice", "tri", "--R", "3",
            "--samples", "4000", "--seed", "5"]
    monkeypatch.setenv("SPECTRAL_PERC_WORKERS", "1")
    _, recs1 = run_cli(args)
    monkeypatch.setenv("SPECTRAL_PERC_WORKERS", "3")
    _, recs3 = run_cli(args)
    assert recs1[0]["value"] == recs3[0]["value"]
    assert recs1[0]["stderr"] == recs3[0]["stderr"]


def test_config_error_exit_codes():
    code, _ = run_cli(["exact-spectrum", "--lattice", "z2", "--R", "12", "--seed", "0"])
    assert code == 2
    code, _ = run_cli(["arm-prob", "--samples", "0", "--R", "4", "--seed", "0"])
    assert code == 2


def test_unknown_experiment_rejected():
    code = cli.main(["no-such-thing", "--R", "3"])
    assert code == 2


def test_jsonl_output_appends(tmp_path):
    out = tmp_path / "res.jsonl"
    args = ["arm-prob", "--lattice", "tri", "--j", "1", "--r", "1", "--R", "4",
            "--samples", "500", "--seed", "3", "--out", str(out)]
    run_cli(args)
    run_cli(args)
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 2
    rec = json.loads(lines[0])
    assert rec["experiment"] == "arm-prob"
    assert rec["params"]["samples"] == 500
    assert "seed" in rec and "wall_ms" in rec and "version" in rec


def test_report_slope_synthetic(tmp_path, capsys):
    inp = tmp_path / "in.jsonl"
    with open(inp, "w") as fh:
        for R in (8, 16, 32, 64, 128):
            fh.write(
                json.dumps(
                    {
                        "experiment": "arm-prob",
                        "params": {"R": R},
                        "value": R ** (-1.25),
                        "stderr": 0.0,
                        "n": 1,
                        "seed": 0,
                        "wall_ms": 0,
                    }
                )
                + "\n"
            )
    out_csv = tmp_path / "out.csv"
    code = cli.main(["report", "--in", str(inp), "--out", str(out_csv)])
    captured = capsys.readouterr().out
    assert code == 0
    slope = float(captured.split()[1])
    assert abs(slope + 1.25) < 1e-6
    assert out_csv.read_text().startswith("x,y")


def test_report_too_few_points(tmp_path):
    inp = tmp_path / "in.jsonl"
    with open(inp, "w") as fh:
        fh.write(json.dumps({"experiment": "e", "params": {"R": 2}, "value": 1.0}) + "\n")
    assert cli.main(["report", "--in", str(inp)]) == 2


def test_ldp_check_experiment():
    code, recs = run_cli(["ldp-check", "--j", "4", "--seed", "2", "--samples", "1"])
    assert code == 0
    assert recs[0]["value"] == 0  # zero violations


def test_console_script_installed():
    proc = subprocess.run(
        ["spectral-perc", "arm-prob", "--lattice", "tri", "--j", "1", "--r", "2",
         "--R", "1", "--samples", "10", "--seed", "0"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert '"value": 1.0' in proc.stdout
