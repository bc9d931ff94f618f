"""End-to-end command-line checks.

Most cases drive ``mirrorchain.cli.main`` in process for speed; a few go
through ``python -m mirrorchain`` in a subprocess where the interpreter
boundary matters (thread-count environment handling, byte determinism).
"""

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from mirrorchain.cli import main
from mirrorchain.decompose import DecompositionError, PeelTrace
from mirrorchain.pauli import PauliString, pauli_matrix

ENGINEERED_4 = [math.sqrt(i * (4 - i)) for i in range(1, 4)]


def write_json(path, payload):
    path.write_text(json.dumps(payload) + "\n", encoding="utf-8")
    return str(path)


def load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def run_module(*args, env=None, cwd=None):
    full_env = dict(os.environ)
    full_env.pop("MIRRORCHAIN_THREADS", None)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "mirrorchain", *args],
        capture_output=True,
        text=True,
        env=full_env,
        cwd=cwd,
    )


# ---------------------------------------------------------------- spectrum

def test_spectrum_engineered_report(tmp_path, capsys):
    out = tmp_path / "spectrum.json"
    assert main(["spectrum", "--engineered", "5", "-o", str(out)]) == 0
    text = capsys.readouterr().out
    assert "mirror condition satisfied" in text
    rec = load(out)
    assert rec["chain"]["n"] == 5
    assert rec["chain"]["engineered"] is True
    report = rec["report"]
    assert report["satisfied"] is True
    assert report["witnesses"] == [-1, -1, 0, 0, 1]
    assert report["global_phase"] == pytest.approx(0.0, abs=1e-9)


def test_spectrum_expect_mirror_exit_code(tmp_path):
    spec = write_json(
        tmp_path / "uniform.json",
        {"n": 3, "couplings": [1.0, 1.0], "fields": [0.0, 0.0, 0.0]},
    )
    out = tmp_path / "spectrum.json"
    # Reporting alone succeeds; the expectation flag turns the verdict
    # into the exit code.
    assert main(["spectrum", "--spec", spec, "-o", str(out)]) == 0
    assert load(out)["report"]["satisfied"] is False
    assert main(["spectrum", "--spec", spec, "--expect-mirror", "-o", str(out)]) == 1


def test_spectrum_honors_tau(tmp_path):
    # Doubling every coupling halves the inversion time.
    spec = write_json(
        tmp_path / "doubled.json",
        {"n": 4, "couplings": [2.0 * j for j in ENGINEERED_4], "fields": [0.0] * 4},
    )
    out = tmp_path / "spectrum.json"
    args = ["spectrum", "--spec", spec, "--expect-mirror", "-o", str(out)]
    assert main(args + ["--tau", repr(math.pi / 4.0)]) == 0
    assert load(out)["report"]["satisfied"] is True
    assert main(args) == 1


def test_spectrum_rejects_single_site(tmp_path, capsys):
    out = tmp_path / "spectrum.json"
    assert main(["spectrum", "--engineered", "1", "-o", str(out)]) == 2
    assert "error:" in capsys.readouterr().err
    assert not out.exists()


def test_quiet_flag_works_in_both_positions(tmp_path, capsys):
    out = tmp_path / "spectrum.json"
    assert main(["-q", "spectrum", "--engineered", "3", "-o", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert main(["spectrum", "-q", "--engineered", "3", "-o", str(out)]) == 0
    assert capsys.readouterr().out == ""


# --------------------------------------------------------------- decompose

def test_decompose_engineered_two_sites(tmp_path, capsys):
    out = tmp_path / "dec.json"
    assert main(["decompose", "--engineered", "2", "-o", str(out)]) == 0
    text = capsys.readouterr().out
    assert "2 factors:" in text
    rec = load(out)
    factors = rec["decomposition"]["factors"]
    assert [f["word"] for f in factors] == ["XX", "YY"]
    for f in factors:
        assert f["angle"] == pytest.approx(math.pi / 4.0)
    assert rec["decomposition"]["global_phase"] == pytest.approx([1.0, 0.0])
    assert rec["reconstruction_fidelity"] >= 1.0 - 1e-9
    assert rec["source"]["tau"] == pytest.approx(math.pi / 2.0)
    assert len(rec["trace"]["steps"]) == 2


def test_decompose_closed_form_five_sites(tmp_path):
    out = tmp_path / "closed.json"
    assert main(["decompose", "--engineered", "5", "--closed-form", "-o", str(out)]) == 0
    rec = load(out)
    dec = rec["decomposition"]
    assert [f["word"] for f in dec["factors"]] == [
        "XZZZY", "YZZZX", "IXZYI", "IYZXI", "XYIYX",
    ]
    assert [f["angle"] for f in dec["factors"]] == pytest.approx(
        [-math.pi / 4.0] * 4 + [-math.pi / 2.0]
    )
    assert dec["global_phase"] == pytest.approx([0.0, 1.0])
    assert rec["trace"] is None
    assert rec["reconstruction_fidelity"] >= 1.0 - 1e-9


def test_decompose_closed_form_rejects_tau(tmp_path, capsys):
    out = tmp_path / "closed.json"
    rc = main([
        "decompose", "--engineered", "4", "--closed-form",
        "--tau", "1.0", "-o", str(out),
    ])
    assert rc == 2
    assert "tau" in capsys.readouterr().err


def test_decompose_closed_form_needs_engineered_couplings(tmp_path, capsys):
    spec = write_json(
        tmp_path / "uniform.json",
        {"n": 4, "couplings": [1.0, 1.0, 1.0], "fields": [0.0] * 4},
    )
    out = tmp_path / "closed.json"
    rc = main(["decompose", "--spec", spec, "--closed-form", "-o", str(out)])
    assert rc == 2
    assert "engineered" in capsys.readouterr().err


def test_decompose_unitary_file(tmp_path):
    theta = 0.3
    word = pauli_matrix(PauliString("XY"))
    U = math.cos(theta) * np.eye(4) - 1j * math.sin(theta) * word
    path = tmp_path / "gate.npy"
    np.save(path, U)
    out = tmp_path / "dec.json"
    assert main(["decompose", "--unitary", str(path), "-o", str(out)]) == 0
    rec = load(out)
    factors = rec["decomposition"]["factors"]
    assert [f["word"] for f in factors] == ["XY"]
    assert factors[0]["angle"] == pytest.approx(theta)
    assert rec["source"] == {"unitary": str(path)}


def test_decompose_dense_unitary_round_trip(tmp_path):
    # A Haar-ish unitary is not a short product, but repeated peeling
    # still reassembles it exactly.
    rng = np.random.default_rng(61)
    M = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    Q, _ = np.linalg.qr(M)
    path = tmp_path / "dense.npy"
    np.save(path, Q)
    out = tmp_path / "dec.json"
    assert main(["decompose", "--unitary", str(path), "-o", str(out)]) == 0
    rec = load(out)
    assert rec["reconstruction_fidelity"] >= 1.0 - 1e-9
    assert len(rec["decomposition"]["factors"]) > 4


def test_decompose_unitary_rejects_closed_form(tmp_path, capsys):
    path = tmp_path / "gate.npy"
    np.save(path, np.eye(4, dtype=complex))
    rc = main(["decompose", "--unitary", str(path), "--closed-form",
               "-o", str(tmp_path / "dec.json")])
    assert rc == 2
    assert "chain" in capsys.readouterr().err


def test_decompose_failure_writes_partial_trace(tmp_path, monkeypatch, capsys):
    def stall(U, chain=None):
        raise DecompositionError("peel stalled at level 1", PeelTrace(()))

    monkeypatch.setattr("mirrorchain.decompose.decompose", stall)
    out = tmp_path / "dec.json"
    assert main(["decompose", "--engineered", "2", "-o", str(out)]) == 1
    assert "decomposition failed" in capsys.readouterr().out
    rec = load(out)
    assert sorted(rec.keys()) == ["error", "source", "trace"]
    assert "stalled" in rec["error"]
    assert rec["trace"] == {"steps": []}


def test_decompose_malformed_spec_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ this is not json", encoding="utf-8")
    rc = main(["decompose", "--spec", str(bad), "-o", str(tmp_path / "dec.json")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_decompose_missing_source_is_usage_error(tmp_path, capsys):
    assert main(["decompose", "-o", str(tmp_path / "dec.json")]) == 2
    assert "usage" in capsys.readouterr().err


# ---------------------------------------------------------------- transfer

def test_transfer_single_site_pure(tmp_path, capsys):
    out = tmp_path / "transfer.json"
    assert main(["transfer", "--engineered", "5", "--site", "1", "-o", str(out)]) == 0
    text = capsys.readouterr().out
    assert "sites (1) -> (5)" in text
    report = load(out)["report"]
    assert report["mode"] == "pure"
    assert report["fidelity"] >= 1.0 - 1e-9
    assert report["destination_sites"] == [5]
    assert report["bell_label"] is None


def test_transfer_bell_labels(tmp_path, capsys):
    out = tmp_path / "transfer.json"
    rc = main(["transfer", "--engineered", "5", "--bell", "1,2", "phi+", "-o", str(out)])
    assert rc == 0
    assert "output classified as phi-" in capsys.readouterr().out
    report = load(out)["report"]
    assert report["bell_label"] == "phi-"
    assert report["destination_sites"] == [4, 5]

    rc = main(["transfer", "--engineered", "5", "--bell", "1,2", "psi+",
               "--mode", "deviation", "-o", str(out)])
    assert rc == 0
    report = load(out)["report"]
    assert report["mode"] == "deviation"
    assert report["bell_label"] == "psi+"
    assert report["fidelity"] >= 1.0 - 1e-9


def test_transfer_threshold_exit_code(tmp_path):
    spec = write_json(
        tmp_path / "uniform.json",
        {"n": 5, "couplings": [1.0] * 4, "fields": [0.0] * 5},
    )
    out = tmp_path / "transfer.json"
    # A uniform chain misses the default near-unity bar but clears a lax one.
    assert main(["transfer", "--spec", spec, "--site", "1", "-o", str(out)]) == 1
    assert load(out)["report"]["fidelity"] < 0.99
    assert main(["transfer", "--spec", spec, "--site", "1",
                 "--min-fidelity", "0.1", "-o", str(out)]) == 0


def test_transfer_rejects_malformed_bell_pair(tmp_path, capsys):
    rc = main(["transfer", "--engineered", "5", "--bell", "1-2", "phi+",
               "-o", str(tmp_path / "t.json")])
    assert rc == 2
    assert "--bell pair" in capsys.readouterr().err


def test_transfer_rejects_out_of_range_site(tmp_path, capsys):
    rc = main(["transfer", "--engineered", "5", "--site", "7",
               "-o", str(tmp_path / "t.json")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


# ------------------------------------------------------------------- grape

ONE_SPIN = {
    "n": 1,
    "shifts_hz": [0.0],
    "couplings_hz": [[0.0]],
    "channels": [[1]],
    "weights": [1.0],
}
TWO_SPIN = {
    "n": 2,
    "shifts_hz": [0.0, 0.0],
    "couplings_hz": [[0.0, 10.0], [10.0, 0.0]],
    "channels": [[1], [2]],
    "weights": [1.0, 1.0],
}


def test_grape_identity_needs_no_iterations(tmp_path, capsys):
    system = write_json(tmp_path / "sys.json", ONE_SPIN)
    out = tmp_path / "grape.json"
    csv = tmp_path / "pulse.csv"
    rc = main([
        "grape", "--system", system, "--target-gate", "identity",
        "--init", "zero", "--steps", "5", "--dt", "1e-4", "--amp-max", "100",
        "-o", str(out), "--pulse-csv", str(csv),
    ])
    assert rc == 0
    assert "after 0 iterations (converged)" in capsys.readouterr().out
    result = load(out)["result"]
    assert result["iterations"] == 0
    assert result["converged"] is True
    assert result["fidelity"] > 1.0 - 1e-12
    lines = csv.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "step,channel,amp_x_hz,amp_y_hz"
    assert lines[1] == "0,0,0.0,0.0"
    assert len(lines) == 1 + 5  # header plus one row per step per channel


def test_grape_x_gate_pulse(tmp_path):
    system = write_json(tmp_path / "sys.json", ONE_SPIN)
    out = tmp_path / "grape.json"
    csv = tmp_path / "pulse.csv"
    rc = main([
        "grape", "--system", system, "--target-gate", "X",
        "--steps", "20", "--dt", "1e-4", "--amp-max", "2000",
        "--stop-fidelity", "0.9999", "--seed", "1", "--rf-scales", "1.0",
        "-o", str(out), "--pulse-csv", str(csv),
    ])
    assert rc == 0
    result = load(out)["result"]
    assert result["fidelity"] >= 0.9999
    assert result["converged"] is True
    assert result["trajectory"] == sorted(result["trajectory"])
    assert len(csv.read_text(encoding="utf-8").splitlines()) == 1 + 20


def test_grape_decomposition_and_gate_targets_agree(tmp_path):
    system = write_json(tmp_path / "sys.json", TWO_SPIN)
    angle = math.pi / 4.0
    raw = {
        "n": 2,
        "global_phase": [1.0, 0.0],
        "factors": [{"word": "ZZ", "angle": angle}],
    }
    tuning = [
        "--steps", "25", "--dt", "0.002", "--amp-max", "500",
        "--seed", "2", "--stop-fidelity", "0.995",
    ]

    results = []
    for name, target in [
        ("raw.json", raw),
        ("wrapped.json", {"decomposition": raw, "source": "elsewhere"}),
    ]:
        dec = write_json(tmp_path / name, target)
        out = tmp_path / ("out_" + name)
        rc = main([
            "grape", "--system", system, "--target-decomposition", dec,
            *tuning, "-o", str(out), "--pulse-csv", str(tmp_path / "p.csv"),
        ])
        assert rc == 0
        results.append(load(out)["result"])

    out = tmp_path / "out_gate.json"
    rc = main([
        "grape", "--system", system, "--target-gate", f"ZZ:{angle!r}",
        *tuning, "-o", str(out), "--pulse-csv", str(tmp_path / "p.csv"),
    ])
    assert rc == 0
    results.append(load(out)["result"])

    assert all(r["fidelity"] >= 0.995 for r in results)
    assert results[0] == results[1] == results[2]


def test_grape_infeasible_exit_code(tmp_path):
    system = write_json(tmp_path / "sys.json", ONE_SPIN)
    out = tmp_path / "grape.json"
    rc = main([
        "grape", "--system", system, "--target-gate", "X",
        "--steps", "1", "--dt", "1e-4", "--amp-max", "10",
        "--seed", "4", "--max-iterations", "60",
        "-o", str(out), "--pulse-csv", str(tmp_path / "p.csv"),
    ])
    assert rc == 1
    result = load(out)["result"]
    assert result["converged"] is False
    assert result["fidelity"] < 0.9


def test_grape_rejects_bad_scale_list(tmp_path, capsys):
    system = write_json(tmp_path / "sys.json", ONE_SPIN)
    rc = main([
        "grape", "--system", system, "--target-gate", "X",
        "--rf-scales", "fast,slow",
        "-o", str(tmp_path / "g.json"), "--pulse-csv", str(tmp_path / "p.csv"),
    ])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_grape_rejects_word_size_mismatch(tmp_path, capsys):
    system = write_json(tmp_path / "sys.json", ONE_SPIN)
    rc = main([
        "grape", "--system", system, "--target-gate", "XX",
        "-o", str(tmp_path / "g.json"), "--pulse-csv", str(tmp_path / "p.csv"),
    ])
    assert rc == 2
    assert "not 1 spins" in capsys.readouterr().err


def test_grape_rejects_decomposition_size_mismatch(tmp_path, capsys):
    system = write_json(tmp_path / "sys.json", ONE_SPIN)
    dec = write_json(
        tmp_path / "dec.json",
        {"n": 2, "global_phase": [1.0, 0.0],
         "factors": [{"word": "ZZ", "angle": 0.5}]},
    )
    rc = main([
        "grape", "--system", system, "--target-decomposition", dec,
        "-o", str(tmp_path / "g.json"), "--pulse-csv", str(tmp_path / "p.csv"),
    ])
    assert rc == 2
    assert "2 sites" in capsys.readouterr().err


# ---------------------------------------------------------------- selftest

def test_selftest_reports_all_suites(tmp_path, capsys):
    out = tmp_path / "selftest.json"
    assert main(["selftest", "--seed", "60", "--trials", "4", "-o", str(out)]) == 0
    text = capsys.readouterr().out
    assert "parseval: 4/4 passed" in text
    rec = load(out)
    assert rec["seed"] == 60
    assert rec["all_passed"] is True
    assert [s["name"] for s in rec["suites"]] == [
        "parseval", "closure-power-of-two", "commutation", "peel-roundtrip",
    ]
    assert all(s["passed"] == s["trials"] == 4 for s in rec["suites"])


# -------------------------------------------------- module entry point

def test_module_entry_outputs_are_byte_identical(tmp_path):
    paths = []
    for name in ("first", "second"):
        sub = tmp_path / name
        sub.mkdir()
        r = run_module("decompose", "--engineered", "4", "-o", "dec.json", cwd=str(sub))
        assert r.returncode == 0, r.stderr
        paths.append(sub / "dec.json")
    first, second = (p.read_bytes() for p in paths)
    assert first == second
    assert first.endswith(b"\n")
    # The flag naming the default chain strategy changes nothing.
    out = tmp_path / "auto.json"
    assert main(["decompose", "--engineered", "4", "--auto-chain", "-o", str(out)]) == 0
    assert out.read_bytes() == first


def test_thread_count_override(tmp_path):
    r = run_module(
        "spectrum", "--engineered", "3", "-o", str(tmp_path / "s.json"),
        env={"MIRRORCHAIN_THREADS": "abc"},
    )
    assert r.returncode == 2
    assert "MIRRORCHAIN_THREADS" in r.stderr

    r = run_module(
        "spectrum", "--engineered", "3", "-o", str(tmp_path / "s.json"),
        env={"MIRRORCHAIN_THREADS": "0"},
    )
    assert r.returncode == 2

    r = run_module(
        "spectrum", "--engineered", "3", "-o", str(tmp_path / "s.json"),
        env={"MIRRORCHAIN_THREADS": "2"},
    )
    assert r.returncode == 0, r.stderr


def test_unknown_subcommand_is_usage_error():
    r = run_module("mirror")
    assert r.returncode == 2
    assert "usage" in r.stderr
