import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import optimize

from mmlweibull.cli import EXIT_COMPUTE, EXIT_INPUT, EXIT_PARTIAL, main
from mmlweibull.dataio import read_dataset, write_dataset
from mmlweibull.models import Sample, WeibullParams, censor_type1, sample_weibull

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(out):
    return json.loads(out)["rows"]


def error_of(err):
    lines = err.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


def test_golden_estimate_csv(capsys, monkeypatch):
    monkeypatch.chdir(DATA)
    code, out, err = run(capsys, "estimate", "--method", "all", "weibull_n20.csv")
    assert code == 0 and err == ""
    assert out == (DATA / "estimate_all_golden.csv").read_text()


def test_golden_values_agree_with_oracle():
    # the MLE row of the golden file solves the score equation written out here
    lines = [ln for ln in (DATA / "estimate_all_golden.csv").read_text().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    mle = dict(zip(header, lines[1].split(",")))
    y = read_dataset(DATA / "weibull_n20.csv").y

    def score(k):
        return len(y) / k + np.log(y).sum() - len(y) * np.sum(y**k * np.log(y)) / np.sum(y**k)

    k = optimize.brentq(score, 0.05, 20, xtol=1e-14)
    assert float(mle["k"]) == pytest.approx(k, rel=1e-9)
    assert float(mle["lam"]) == pytest.approx(np.mean(y**k) ** (1 / k), rel=1e-9)


def test_estimate_all_lists_applicable_methods(capsys):
    code, out, _ = run(capsys, "estimate", "--method", "all", "--format", "json",
                       "--scheme", "type1", DATA / "weibull_type1_n30.csv")
    assert code == 0
    rows = rows_of(out)
    assert [r["method"] for r in rows] == ["mle", "yang-xie", "sirvanci-yang", "mml87"]
    sy = rows[2]
    assert sy["k"] > 0 and sy["lam"] is None


def test_estimate_lognormal(capsys):
    code, out, _ = run(capsys, "estimate", "--model", "lognormal", "--method", "all",
                       "--format", "json", DATA / "lognormal_n200.csv")
    assert code == 0
    assert [r["method"] for r in rows_of(out)] == ["mle", "mml87"]
    code, _, err = run(capsys, "estimate", "--model", "lognormal", "--method", "ross",
                       DATA / "lognormal_n200.csv")
    assert code == EXIT_INPUT and error_of(err)["error"] == "IncompatibleScheme"


def test_all_equal_data(capsys):
    path = DATA / "all_equal.csv"
    code, out, err = run(capsys, "estimate", "--method", "mle", path)
    assert code == EXIT_COMPUTE and out == "" and error_of(err)["error"] == "NoRoot"
    # the MML87 codelength has no minimiser on this data either
    code, out, err = run(capsys, "estimate", "--method", "mml87", path)
    assert code == EXIT_COMPUTE and out == "" and error_of(err)["error"] == "NonConvergence"
    code, out, err = run(capsys, "estimate", "--method", "all", path)
    assert code == EXIT_COMPUTE and error_of(err)["error"] == "EstimationError"


def test_partial_failure_exit_code(capsys, tmp_path):
    # n = 2: Ross and Yang-Xie are undefined, MLE and MML87 are fine
    p = tmp_path / "two.csv"
    p.write_text("y,delta\n1.0,1\n2.5,1\n")
    code, out, err = run(capsys, "estimate", "--method", "all", "--format", "json", p)
    assert code == EXIT_PARTIAL
    status = {r["method"]: r["status"] for r in rows_of(out)}
    assert status == {"mle": "ok", "ross": "InsufficientData", "yang-xie": "InsufficientData", "mml87": "ok"}
    assert error_of(err)["error"] == "PartialFailure"


def test_incompatible_scheme_and_method(capsys):
    code, out, err = run(capsys, "estimate", "--method", "sirvanci-yang", DATA / "weibull_n20.csv")
    assert code == EXIT_INPUT and out == ""
    assert error_of(err)["error"] == "IncompatibleScheme"
    code, _, err = run(capsys, "estimate", "--scheme", "type1", DATA / "weibull_n20.csv")
    assert code == EXIT_INPUT and error_of(err)["error"] == "ParseError"


def test_parse_error_carries_line(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("y,delta\n1.0,1\n-2.0,1\n")
    code, out, err = run(capsys, "estimate", p)
    rec = error_of(err)
    assert code == EXIT_INPUT and out == ""
    assert rec["error"] == "ParseError" and rec["line"] == 3


def test_missing_file_and_usage_errors(capsys, tmp_path):
    code, _, err = run(capsys, "estimate", tmp_path / "nope.csv")
    assert code == EXIT_INPUT and error_of(err)["error"] == "IOError"
    code, _, err = run(capsys, "estimate", "--method", "bogus", DATA / "weibull_n20.csv")
    assert code == EXIT_INPUT and error_of(err)["error"] == "UsageError"
    code, _, err = run(capsys, "simulate", "--table", "est-complete", "--n", "10", "--seed", "-1")
    assert code == EXIT_INPUT and error_of(err)["error"] == "UsageError"
    code, _, err = run(capsys, "simulate", "--table", "est-complete", "--n", "10")
    assert code == EXIT_INPUT and error_of(err)["error"] == "ValueError"


def test_select_fixtures(capsys):
    code, out, _ = run(capsys, "select", "--format", "json", DATA / "weibull_n200.csv")
    assert code == 0
    assert {r["criterion"]: r["winner"] for r in rows_of(out)} == {"mml87": "weibull", "bic": "weibull"}
    code, out, _ = run(capsys, "select", "--format", "json", DATA / "lognormal_n200.csv")
    assert {r["criterion"]: r["winner"] for r in rows_of(out)} == {"mml87": "lognormal", "bic": "lognormal"}


def test_select_single_point(capsys, tmp_path):
    p = tmp_path / "one.csv"
    p.write_text("y,delta\n3.0,1\n")
    code, out, _ = run(capsys, "select", "--criterion", "mml87", "--format", "json", p)
    assert code == 0
    (row,) = rows_of(out)
    assert row["degenerate_weibull"] and row["degenerate_lognormal"] and row["warnings"]


@pytest.mark.parametrize(
    "argv,expected",
    [
        (["--k0", 1, "--l0", 1, "--k1", 1, "--l1", 2], 0.5 + math.log(2) - 1),
        (["--k0", 1, "--l0", 1, "--k1", 1, "--l1", 1, "--c", 5], 0.0),
        (["--k0", 2, "--l0", 1, "--k1", 1.5, "--l1", 1.2, "--c", 1.5], 0.086900223963689749656),
    ],
)
def test_kl(capsys, argv, expected):
    code, out, _ = run(capsys, "kl", "--format", "json", *argv)
    assert code == 0
    assert rows_of(out)[0]["value"] == pytest.approx(expected, abs=1e-12)


def test_kl_domain_error(capsys):
    code, _, err = run(capsys, "kl", "--k0", 0, "--l0", 1, "--k1", 1, "--l1", 1)
    assert code == EXIT_INPUT and error_of(err)["error"] == "UsageError"


def test_simulate_deterministic_and_echoes_seed(capsys):
    argv = ["simulate", "--table", "est-type1", "--n", 20, "--k", 1, "--p", 0.5, "--reps", 200, "--seed", 42]
    code1, out1, _ = run(capsys, *argv)
    code2, out2, _ = run(capsys, *argv)
    assert code1 == code2 == 0 and out1 == out2
    assert "# seed=42" in out1
    code3, out3, _ = run(capsys, *argv[:-1], 43)
    assert out3 != out1


def test_simulate_single_rep_and_markdown(capsys):
    code, out, _ = run(capsys, "simulate", "--table", "est-complete", "--n", 10, "--k", 1,
                       "--reps", 1, "--format", "markdown")
    assert code == 0
    assert out.startswith("<!-- version=")
    body = [ln for ln in out.splitlines() if ln.startswith("| ") and "mc_stderr" not in ln]
    assert body and all("| nan |" in ln for ln in body)


def test_dataset_round_trip(tmp_path):
    y = sample_weibull(WeibullParams(0.7, 3.0), 25, 8)
    for s in (Sample(y, np.ones(25)), censor_type1(y, 2.0)):
        path = tmp_path / "s.csv"
        write_dataset(s, path)
        back = read_dataset(path).to_sample(s.scheme.name)
        assert np.array_equal(back.y, s.y) and np.array_equal(back.delta, s.delta)
        assert back.scheme == s.scheme


def test_module_entry_point_streams():
    proc = subprocess.run(
        [sys.executable, "-m", "mmlweibull", "kl", "--k0", "1", "--l0", "1", "--k1", "1", "--l1", "2"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and proc.stderr == ""
    assert proc.stdout.splitlines()[-1].startswith("0.193147")
    proc = subprocess.run(
        [sys.executable, "-m", "mmlweibull", "estimate", str(DATA / "all_equal.csv"), "--method", "mle"],
        capture_output=True, text=True,
    )
    assert proc.returncode == EXIT_COMPUTE and proc.stdout == ""
    assert json.loads(proc.stderr)["error"] == "NoRoot"
