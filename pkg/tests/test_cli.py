import io
import json
import subprocess
import sys

import numpy as np
import pytest

from compoisson.cli import main, parse_law


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def run_json(*argv):
    code, text = run(*argv)
    return code, json.loads(text)


def test_pmf_cmp_example():
    code, doc = run_json("pmf", "cmp", "--lambda", "1", "--nu", "2", "--kmax", "5")
    assert code == 0
    assert np.isclose(doc["probs"][0], 0.438675, atol=5e-7)
    assert len(doc["probs"]) == 6 and doc["family"] == "cmp"


def test_parameter_error_exit_two():
    code, doc = run_json("pmf", "cmp", "--lambda", "-1", "--nu", "2")
    assert code == 2
    assert doc["error"] == "ParameterError"
    assert "lambda > 0" in doc["message"]


def test_unknown_flag_exit_two(capsys):
    code, _ = run("pmf", "cmp", "--lambda", "1", "--nu", "2", "--bogus")
    assert code == 2
    assert "unrecognized arguments" in capsys.readouterr().err


def test_numeric_error_exit_three():
    # order 1/2 needs the zeta window at 1e-24, out of reach for a cubic tail
    code, doc = run_json("entropy", "renyi", "--pmf", "zeta:sigma=3", "--alpha", "0.5")
    assert code == 3
    assert doc["error"] == "DivergenceError"


def test_csv_output():
    code, text = run("pmf", "cmb", "--m", "2", "--p", "0.5", "--nu", "1", "--format", "csv")
    assert code == 0
    lines = text.splitlines()
    assert lines[1] == "k,prob"
    assert np.allclose([float(line.split(",")[1]) for line in lines[2:]], [0.25, 0.5, 0.25], rtol=1e-15)


def test_pmf_file_roundtrip(tmp_path):
    path = tmp_path / "law.json"
    _, text = run("pmf", "cmp", "--lambda", "2", "--nu", "1", "--tol", "1e-15")
    path.write_text(text)
    code, doc = run_json("fisher", "--pmf-file", str(path))
    assert code == 0
    assert np.isclose(doc["fisher_info"], 0.5, atol=1e-10)


def test_law_spec_parsing():
    law = parse_law("poisson:mu=2,shift=3")
    assert law.support_start == 3
    code, doc = run_json("fisher", "--pmf", "nosuch:x=1")
    assert code == 2 and doc["error"] == "UsageError"
    code, doc = run_json("fisher", "--pmf", "cmp:lambda=1")
    assert code == 2 and "nu" in doc["message"]


def test_two_input_commands():
    code, doc = run_json("stam", "--x", "poisson:mu=1", "--y", "poisson:mu=2", "--tol", "1e-15")
    assert code == 0 and abs(doc["gap"]) < 1e-8
    code, doc = run_json("conditional", "--x", "poisson:mu=1", "--y", "poisson:mu=1", "--s", "2")
    assert np.allclose(doc["probs"], [0.25, 0.5, 0.25])


def test_dpcp_pipeline(tmp_path):
    path = tmp_path / "params.json"
    code, text = run("dpcp", "recover", "--pmf", "geometric:p=0.5", "--terms", "60", "--tol", "1e-16")
    assert code == 0
    path.write_text(text)
    code, doc = run_json("dpcp", "reconstruct", "--params-file", str(path), "--nmax", "5")
    assert np.allclose(doc["probs"], 0.5 ** np.arange(1, 7), rtol=1e-12)
    code, doc = run_json("dpcp", "sample", "--params-file", str(path), "--n", "4", "--seed", "1")
    assert code == 0 and len(doc["samples"]) == 4


def test_normalizer_overflow_reported_in_logs():
    code, doc = run_json("normalizer", "series", "--lambda", "1000", "--nu", "0.5")
    assert code == 0
    assert doc["value"] is None and doc["log_value"] > 5e5


def test_verify_single_group_and_determinism():
    code, first = run("verify", "closure", "--seed", "7")
    assert code == 0
    assert first == run("verify", "closure", "--seed", "7")[1]
    doc = json.loads(first)
    assert doc["overall"] is True
    assert {"check", "pass", "statistic", "tolerance", "params"} <= set(doc["checks"][0])


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "compoisson", "moments", "--lambda", "10", "--nu", "1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert np.isclose(json.loads(proc.stdout)["mean"], 10.0, atol=1e-10)
