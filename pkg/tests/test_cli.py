import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ulab.cli import run
from ulab.operators import UnitaryOperator, haar_unitary

NOW = "2026-01-01T00:00:00+00:00"


def _run(capsys, *argv):
    code = run(list(argv), now=NOW)
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 and out else None)


def test_ns_comb(capsys):
    code, rec = _run(capsys, "ns", "--n", "4", "--signal", "comb:2")
    assert code == 0
    assert rec["schema"] == "ulab/1" and rec["command"] == "ns"
    assert rec["outputs"]["ns"] == pytest.approx(2)
    assert set(rec) == {"schema", "command", "params", "seed", "started_at", "backend",
                        "paper_anchor", "outputs"}
    assert rec["paper_anchor"]


def test_gaussian_machine_precision_count(capsys, tmp_path):
    out = tmp_path / "g.json"
    code, _ = _run(capsys, "gaussian", "--n", "211", "--threshold", "2.22e-16", "--out", str(out))
    assert code == 0
    rec = json.loads(out.read_text())
    assert rec["outputs"]["zero_norm"] == 99
    with open(tmp_path / "g.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["index", "real", "imag", "magnitude"] and len(rows) == 212


def test_detect_example(capsys):
    code, rec = _run(capsys, "detect", "--n", "64", "--k", "4", "--p", "0.1", "--noise",
                     "const:0.03125", "--trials", "10000", "--seed", "7")
    assert code == 0
    o = rec["outputs"]
    assert o["fp_rate"] <= 0.1 + 3 * o["sigma"]
    assert {"m", "tau", "fn_rate", "per_shape"} <= set(o)


def test_determinism(capsys):
    argv = ["coupon", "--k", "20", "--trials", "500", "--seed", "3"]
    a = _run(capsys, *argv)[1]
    b = _run(capsys, *argv)[1]
    assert json.dumps(a) == json.dumps(b)
    c = _run(capsys, "coupon", "--k", "20", "--trials", "500", "--seed", "4")[1]
    assert c["outputs"] != a["outputs"]


def test_thread_count_does_not_change_output(capsys, monkeypatch):
    argv = ["coupon", "--k", "30", "--trials", "20000", "--seed", "1"]
    monkeypatch.setenv("ULAB_THREADS", "1")
    a = _run(capsys, *argv)[1]
    monkeypatch.setenv("ULAB_THREADS", "3")
    b = _run(capsys, *argv)[1]
    assert a == b


@pytest.mark.parametrize(
    "argv, code",
    [
        (["bogus"], 2),
        ([], 2),
        (["ns", "--n", "4", "--signal", "wat"], 2),
        (["up-check", "--principle", "a0", "--n", "12", "--signal", "impulse"], 2),
        (["detect", "--n", "64", "--k", "4", "--p", "0.1", "--noise", "const:0.5"], 2),
        (["rip", "--matrix", "iu-haar:0", "--n", "40", "--k", "4"], 3),
        (["rip", "--matrix", "iu-dft", "--n", "4", "--k", "1", "--exact", "--mc", "5"], 2),
    ],
)
def test_exit_codes(capsys, argv, code):
    assert run(argv, now=NOW) == code
    capsys.readouterr()


def test_non_convergence_exit_code(capsys, monkeypatch):
    from ulab import demixing

    monkeypatch.setattr(demixing, "MAX_ITER", 2)
    monkeypatch.setattr(demixing.demix, "__defaults__", (None, 2))
    assert run(["demix", "--n", "16", "--kx", "3", "--keps", "3", "--u", "haar:1",
                "--trials", "1"], now=NOW) == 4
    capsys.readouterr()


def test_up_check_principles(capsys):
    for p, sig in [("m0", "comb:3"), ("a0", "random:3"), ("mns", "gaussian"), ("ans", "impulse")]:
        n = "13" if p == "a0" else "12"
        code, rec = _run(capsys, "up-check", "--principle", p, "--n", n, "--signal", sig,
                         "--haar-seed", "2")
        assert code == 0, p
        assert "satisfied" in rec["outputs"]


def test_rip_outputs(capsys):
    code, rec = _run(capsys, "rip", "--matrix", "iu-dft", "--n", "4", "--k", "2")
    assert code == 0
    o = rec["outputs"]
    assert o["delta"] == pytest.approx(0.5) and o["delta_le_2theta"]
    code, rec = _run(capsys, "rip", "--matrix", "partial-fourier:8:1", "--n", "16", "--k", "2",
                     "--mc", "50")
    assert code == 0 and rec["outputs"]["method"] == "candidate_lower"


def test_pf_witness(capsys):
    code, rec = _run(capsys, "pf-witness", "--n", "256", "--k", "16", "--m", "20", "--trials", "500")
    assert code == 0
    o = rec["outputs"]
    assert o["empirical"] == 1.0
    assert o["example_witness"]["zero_norm"] == 16
    assert o["example_witness"]["max_response"] <= 1e-12


def test_demix_comb_and_csv(capsys, tmp_path):
    csv_path = tmp_path / "d.csv"
    probs = tmp_path / "p.jsonl"
    code, rec = _run(capsys, "demix", "--n", "16", "--comb", "--trials", "3", "--csv", str(csv_path),
                     "--save-problems", str(probs))
    assert code == 0
    assert rec["outputs"]["success_rate"] == 0.0
    assert len(probs.read_text().splitlines()) == 3
    with open(csv_path) as fh:
        assert len(list(csv.reader(fh))) == 4


def test_demix_sweep_table(capsys, tmp_path):
    code, rec = _run(capsys, "demix", "--n", "16", "--u", "dft", "--trials", "2", "--sweep-n", "16",
                     "--sweep-k", "1,4", "--csv", str(tmp_path / "s.csv"))
    assert code == 0
    assert rec["outputs"]["sweep"]["rates"]["16:4"] == 0


def test_haar_cache_round_trip(capsys, tmp_path):
    f = tmp_path / "u.ulab"
    code, rec = _run(capsys, "haar-cache", "--n", "8", "--seed", "5", "--file", str(f))
    assert code == 0
    raw = f.read_bytes()
    assert raw[:4] == b"ULAB" and len(raw) == rec["outputs"]["bytes"] == 16 + 16 * 64
    U = UnitaryOperator.load(f)
    assert np.array_equal(U.matrix, haar_unitary(8, 5).matrix)
    code, rec = _run(capsys, "up-check", "--principle", "mns", "--n", "8", "--signal", "flat",
                     "--operator", str(f))
    assert code == 0
    assert run(["up-check", "--principle", "mns", "--n", "9", "--operator", str(f)], now=NOW) == 2
    capsys.readouterr()


def test_up_scan_csv(capsys, tmp_path):
    out = tmp_path / "scan.json"
    code, _ = _run(capsys, "up-scan", "--n", "16", "--seeds", "2", "--budget", "20", "--restarts", "1",
                   "--steps", "5", "--out", str(out))
    assert code == 0
    assert (tmp_path / "scan.csv").exists()


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "ulab.cli", "ns", "--n", "4", "--signal", "flat"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["outputs"]["ns"] == pytest.approx(4)
