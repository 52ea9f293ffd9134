import json
import os

import numpy as np
import pytest

from frameshadows.cli import EXIT_MATH, EXIT_OK, EXIT_VALIDATION, main
from frameshadows.serialize import dump_json, load_json, povm_from_dict


def run(*argv):
    return main([str(a) for a in argv])


def test_povm_builtin_mub(tmp_path):
    out = tmp_path / "mub5.json"
    assert run("povm", "--builtin", "mub", "--dim", 5, "--out", out) == EXIT_OK
    doc = load_json(out)
    assert len(doc["elements"]) == 30
    assert doc["report"]["tightness"]["tight"]
    assert doc["report"]["informationally_complete"]
    assert doc["provenance"]["povm_hash"]
    povm = povm_from_dict(doc)
    assert povm.n_outcomes == 30 and povm.dim == 5


def test_povm_round_trip_into_analyze_and_simulate(tmp_path):
    povm_file = tmp_path / "p.json"
    assert run("povm", "--builtin", "ic-4", "--out", povm_file) == EXIT_OK
    report_file = tmp_path / "r.json"
    assert run(
        "analyze", "--povm-json", povm_file, "--state", "pure:0",
        "--observable", "pauli:Z", "--out", report_file,
    ) == EXIT_OK
    report = load_json(report_file)["report"]
    assert report["exact"] == pytest.approx(8.0, abs=1e-9)
    assert run(
        "simulate", "--povm-json", povm_file, "--state", "pure:0",
        "--observable", "pauli:Z", "-N", 4000, "--seed", 1,
        "--out-prefix", tmp_path / "s",
    ) == EXIT_OK


def test_analyze_a_operator_fixture(tmp_path):
    out = tmp_path / "r.json"
    assert run("analyze", "--builtin", "ic-4", "--state", "pure:1",
               "--observable", "pauli:X", "--out", out) == EXIT_OK
    bounds = load_json(out)["report"]["bounds"]
    assert bounds["A_min"] == pytest.approx(1.0, abs=1e-9)
    assert bounds["A_max"] == pytest.approx(9.0, abs=1e-9)
    assert bounds["shadow_norm_sq"] == pytest.approx(9.0, abs=1e-9)


def test_analyze_mub3_averaged_values(tmp_path):
    # unit-normalized observable: averaged = Vd (d^2+d-1-P)/(d^2-1) with Vd = 1
    out = tmp_path / "r.json"
    assert run("analyze", "--builtin", "mub", "--dim", 3, "--observable", "random:7",
               "--purity", 1.0, "--out", out) == EXIT_OK
    report = load_json(out)["report"]
    assert report["averaged"] == pytest.approx(10 / 8, abs=1e-9)
    # scaled so that tr(O^2) = d (V = 1), the same formula reads 3.75
    o = np.diag([1.0, -1.0, 0.0]) * np.sqrt(3 / 2)
    op_file = tmp_path / "o.json"
    dump_json([[[float(z.real), float(z.imag)] for z in row] for row in o.astype(complex)], op_file)
    out2 = tmp_path / "r2.json"
    assert run("analyze", "--builtin", "mub", "--dim", 3, "--observable", f"json:{op_file}",
               "--purity", 1.0, "--out", out2) == EXIT_OK
    assert load_json(out2)["report"]["averaged"] == pytest.approx(3.75, abs=1e-9)


def test_validation_failure_exit_code(tmp_path):
    bad = {
        "dim": 2,
        "elements": [
            [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-0.5, 0.0]]],
            [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.5, 0.0]]],
        ],
    }
    bad_file = tmp_path / "bad.json"
    dump_json(bad, bad_file)
    assert run("povm", "--povm-json", bad_file, "--out", tmp_path / "out.json") == EXIT_VALIDATION


def test_non_ic_strict_exit_code(tmp_path):
    assert run("analyze", "--builtin", "non-ic-4", "--observable", "pauli:Z",
               "--dual", "canonical-dual", "--out", tmp_path / "r.json") == EXIT_MATH


def test_degenerate_prior_exit_code(tmp_path):
    assert run("analyze", "--builtin", "ic-4", "--observable", "pauli:Z",
               "--dual", "min-variance", "--prior", "pure:1",
               "--out", tmp_path / "r.json") == EXIT_MATH


def test_simulate_curve_and_realizations(tmp_path):
    prefix = tmp_path / "run"
    assert run(
        "simulate", "--builtin", "mub", "--dim", 2, "--state", "pure:0",
        "--observable", "random:5", "-N", 2000, "--realizations", 40,
        "--bins", 15, "--curve-points", 8, "--seed", 3, "--out-prefix", prefix,
    ) == EXIT_OK
    summary = load_json(f"{prefix}.summary.json")
    assert summary["mode"] == "realization_means"
    assert summary["summary"]["n"] == 40
    hist_lines = [l for l in open(f"{prefix}.hist.csv") if not l.startswith("#")]
    assert hist_lines[0].strip() == "low,high,count,density"
    assert len(hist_lines) == 16
    curve_lines = [l for l in open(f"{prefix}.curve.csv") if not l.startswith("#")]
    assert curve_lines[0].strip() == "n,running_mean,running_sample_variance"


def test_simulate_covariant(tmp_path):
    prefix = tmp_path / "cov"
    assert run(
        "simulate", "--covariant", "--dim", 3, "--state", "pure:0",
        "--observable", "random:11", "-N", 2000, "--seed", 4, "--out-prefix", prefix,
    ) == EXIT_OK
    summary = load_json(f"{prefix}.summary.json")["summary"]
    assert summary["n"] == 2000


def test_scan_rows(tmp_path):
    out = tmp_path / "scan.csv"
    assert run("scan", "--dims", "2,3,5", "--seed", 1, "--out", out) == EXIT_OK
    rows = [l.split(",") for l in open(out) if not l.startswith("#")][1:]
    assert len(rows) == 3
    for row in rows:
        d, a_min, a_max, tr_a, quad = float(row[0]), *map(float, row[1:])
        assert a_min <= tr_a <= a_max + 1e-9
        assert abs(tr_a - quad) < 1e-9
    single = tmp_path / "one.csv"
    assert run("scan", "--dims", "2", "--seed", 1, "--out", single) == EXIT_OK
    assert len([l for l in open(single) if not l.startswith("#")]) == 2


def test_reproducibility_byte_identical(tmp_path):
    for args, outs in [
        (("povm", "--builtin", "random-rank1", "--dim", 2, "--outcomes", 8,
          "--seed", 9, "--out", "{}"), ("povm.json",)),
        (("analyze", "--builtin", "mub", "--dim", 3, "--observable", "random:2",
          "--purity", "0.8", "--out", "{}"), ("analysis.json",)),
        (("scan", "--dims", "2,3", "--seed", 5, "--out", "{}"), ("scan.csv",)),
    ]:
        contents = []
        for attempt in ("a", "b"):
            target = tmp_path / f"{attempt}_{outs[0]}"
            argv = [a.format(target) if a == "{}" else a for a in args]
            assert run(*argv) == EXIT_OK
            contents.append(open(target, "rb").read())
        assert contents[0] == contents[1]

    for attempt in ("a", "b"):
        assert run("simulate", "--builtin", "ic-4", "--state", "pure:0",
                   "--observable", "pauli:Z", "-N", 3000, "--seed", 11,
                   "--out-prefix", tmp_path / f"sim_{attempt}") == EXIT_OK
    for suffix in (".summary.json", ".hist.csv"):
        assert open(f"{tmp_path}/sim_a{suffix}", "rb").read() == open(f"{tmp_path}/sim_b{suffix}", "rb").read()


def test_outdir_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("FRAMESHADOWS_OUTDIR", str(tmp_path / "outputs"))
    assert run("povm", "--builtin", "projective", "--out", "p.json") == EXIT_OK
    assert os.path.exists(tmp_path / "outputs" / "p.json")


def test_include_dual_elements(tmp_path):
    out = tmp_path / "r.json"
    assert run("analyze", "--builtin", "ic-4", "--observable", "pauli:Z",
               "--include-dual", "--out", out) == EXIT_OK
    doc = load_json(out)
    assert len(doc["dual_elements"]) == 4
    # first dual element is (I - X - Y + 5Z)/2
    first = np.array([[complex(re, im) for re, im in row] for row in doc["dual_elements"][0]])
    expected = np.array([[3.0, (-1 + 1j) / 2], [(-1 - 1j) / 2, -2.0]])
    assert np.abs(first - expected).max() < 1e-9
