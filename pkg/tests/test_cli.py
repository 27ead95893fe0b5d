import json
import math
import subprocess
import sys

import pytest

from monocert.cli import parse_region, parse_real, run, UsageError


def test_certify_monotone_fplus(tmp_path, capsys):
    out = tmp_path / "out.json"
    code = run(["certify", "monotone", "--op", "fplus", "--region", "-pi:pi:-pi:pi",
                "--grid", "129x129", "--json", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] is True and doc["schema_version"] == 1
    assert "PASS" in capsys.readouterr().out


def test_counterexample_default(tmp_path, capsys):
    out = tmp_path / "cert.json"
    assert run(["counterexample", "--u", "sin(x)*sin(y)", "--json", str(out)]) == 0
    assert json.loads(out.read_text())["verdict"] == "counterexample certified"
    assert "counterexample certified" in capsys.readouterr().out


def test_certify_gradient_fplus_fails(capsys):
    assert run(["certify", "gradient", "--op", "fplus"]) == 2
    text = capsys.readouterr().out
    assert "FAIL" in text and "(0, 0)" in text and "= 2 <=" in text


def test_indeterminate_exit(capsys):
    assert run(["certify", "monotone", "--f", "1/x", "--grid", "5x5"]) == 3
    assert run(["eval", "--f", "1/x", "--point", "0,1"]) == 3


@pytest.mark.parametrize("argv", [
    [],
    ["certify"],
    ["certify", "monotone"],
    ["certify", "monotone", "--op", "fplus", "--f", "x"],
    ["certify", "monotone", "--op", "nope"],
    ["certify", "monotone", "--op", "fplus", "--region", "0:0:0:1"],
    ["certify", "monotone", "--op", "fplus", "--region", "1:2:3"],
    ["certify", "monotone", "--op", "fplus", "--grid", "1x5"],
    ["certify", "monotone", "--op", "fplus", "--threads", "0"],
    ["certify", "convex", "--op", "sum"],
    ["refute-skew", "--op", "fplus", "--a-search", "1:-1"],
    ["eval", "--op", "fplus", "--point", "1"],
    ["counterexample", "--u-file", "/nonexistent/u.txt"],
])
def test_usage_errors(argv, capsys):
    assert run(argv) == 1
    assert "error" in capsys.readouterr().err


def test_parse_error_shows_offset(capsys):
    assert run(["counterexample", "--u", "x +* y"]) == 1
    err = capsys.readouterr().err
    assert "offset 3" in err
    assert err.splitlines()[-1] == "     ^"


def test_unknown_identifier(capsys):
    assert run(["certify", "gradient", "--f", "z*x"]) == 1


def test_parse_real_and_region():
    assert parse_real("pi") == math.pi and parse_real("-pi") == -math.pi
    assert parse_real("1e-3") == 1e-3
    r = parse_region("-pi:pi:-1:2.5")
    assert (r.xmin, r.xmax, r.ymin, r.ymax) == (-math.pi, math.pi, -1.0, 2.5)
    with pytest.raises(UsageError):
        parse_real("inf")


def test_eval_json(tmp_path, capsys):
    out = tmp_path / "e.json"
    assert run(["eval", "--op", "fplus", "--point", "0,0", "--json", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["value"] == [0.0, 0.0]
    assert doc["jacobian"] == [[1.0, 1.0], [-1.0, 1.0]]


def test_eval_negative_point(capsys):
    assert run(["eval", "--op", "identity", "--point", "-1.5,-pi"]) == 0
    assert "(-1.5, -3.1415926535897931)" in capsys.readouterr().out


def test_u_file_and_sign(tmp_path, capsys):
    f = tmp_path / "u.txt"
    f.write_text("sin(x)*sin(y)\n")
    assert run(["eval", "--u-file", str(f), "--sign", "minus", "--point", "pi/2,0"]) == 1
    assert run(["eval", "--u-file", str(f), "--sign", "minus", "--point", "1.5,0"]) == 0
    assert "F_minus" in capsys.readouterr().out
    assert run(["eval", "--u-file", str(f), "--u", "x", "--point", "0,0"]) == 1


def test_counterexample_csv_dir(tmp_path):
    d = tmp_path / "csv"
    assert run(["counterexample", "--grid", "33x33", "--pairs", "200", "--quad-step", "0.01",
                "--csv-dir", str(d)]) == 0
    assert len(list(d.glob("*.csv"))) == 7


def test_counterexample_zero_u_fails(capsys):
    assert run(["counterexample", "--u", "0", "--grid", "33x33", "--pairs", "200",
                "--quad-step", "0.01"]) == 2
    assert "family_hypotheses.uxy_nonconstant" in capsys.readouterr().out


def test_refute_and_fit(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run(["refute-skew", "--op", "fplus", "--a-search", "-2:2", "--json", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert abs(doc["min_sup_residual"] - 2.0) <= 1e-6 and abs(doc["best_a"]) <= 1e-6
    assert run(["refute-skew", "--op", "identity"]) == 2
    assert run(["fit-skew", "--op", "identity", "--region", "-1:1:-1:1", "--grid", "65x65"]) == 0


def test_reconstruct(tmp_path, capsys):
    csv_path = tmp_path / "phi.csv"
    assert run(["reconstruct", "--op", "sum", "--anchor", "0,0", "--csv", str(csv_path)]) == 0
    assert "non-affine" in capsys.readouterr().out
    assert csv_path.read_text().startswith("x,y,metric\n")
    assert run(["reconstruct", "--op", "fplus"]) == 2
    assert run(["reconstruct", "--op", "sum", "--anchor", "9,9"]) == 1


def test_solve(tmp_path, capsys):
    csv_path = tmp_path / "trace.csv"
    assert run(["solve", "--op", "fplus", "--z0", "1,1", "--csv", str(csv_path)]) == 0
    assert "CONVERGED" in capsys.readouterr().out
    assert run(["solve", "--op", "identity", "--z0", "-5,3", "--max-iter", "3"]) == 2


def test_certify_csv(tmp_path):
    p = tmp_path / "eig.csv"
    assert run(["certify", "monotone", "--op", "identity", "--grid", "9x9", "--csv", str(p)]) == 0
    lines = p.read_text().splitlines()
    assert lines[0] == "x,y,metric" and len(lines) == 82


def test_convex_and_convex_concave(capsys):
    assert run(["certify", "convex", "--f", "x^2 + y^2"]) == 0
    assert run(["certify", "convex", "--op", "fplus"]) == 2
    assert run(["certify", "convex-concave", "--op", "fminus"]) == 0


@pytest.mark.parametrize("threads", ["1", "4"])
def test_threads_do_not_change_json(tmp_path, threads):
    ref = tmp_path / "ref.json"
    out = tmp_path / f"t{threads}.json"
    base = ["certify", "monotone", "--op", "sum", "--grid", "129x129"]
    assert run(base + ["--json", str(ref)]) == 0
    assert run(base + ["--threads", threads, "--json", str(out)]) == 0
    assert ref.read_bytes() == out.read_bytes()


def test_repeated_subprocess_runs_are_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"c{k}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "monocert", "counterexample", "--grid", "65x65",
             "--seed", "3", "--json", str(path)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
