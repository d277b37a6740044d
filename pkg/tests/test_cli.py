import json
import subprocess
import sys

import pytest
from conftest import CASES_DIR, ROOT

from curvlab.cli import EXIT_EVAL, EXIT_FAIL, EXIT_OK, EXIT_USAGE, run

HYPERBOLIC = str(CASES_DIR / "hyperbolic_lm1.metric")
KDV1 = str(CASES_DIR / "kdv1.fields")
GOLDEN = ROOT / "tests" / "golden" / "hyperbolic_lm1_check.json"

SINGULAR = """[space]
coords = x y z

[metric]
g 1 1 = 1/z^2
g 2 2 = 1/z^2
g 3 3 = 1/z^2

[plan]
z = 0 0
"""


def _run(argv, capsys):
    code = run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_hyperbolic_check_passes(capsys):
    code, out, _ = _run(["check", HYPERBOLIC, "--lambda", "-1", "--json"], capsys)
    assert code == EXIT_OK
    assert json.loads(out)["verdict"] == "pass"


def test_kdv_residual_passes(capsys):
    code, out, _ = _run(["residual", "--system", "kdv", KDV1], capsys)
    assert code == EXIT_OK
    assert "-> PASS" in out


def test_wrong_lambda_exits_one(capsys):
    code, out, _ = _run(["check", "--lambda", "0", HYPERBOLIC], capsys)
    assert code == EXIT_FAIL
    assert "-> FAIL" in out


def test_golden_report():
    proc = subprocess.run(
        [sys.executable, "-m", "curvlab.cli", "check", HYPERBOLIC, "--lambda", "-1", "--json"],
        capture_output=True,
        text=True,
        cwd=ROOT,
        check=False,
    )
    assert proc.returncode == EXIT_OK
    got, want = json.loads(proc.stdout), json.loads(GOLDEN.read_text())
    assert list(got) == list(want)
    for key in want:
        if key.endswith("_residual"):
            # round-off level; only the order of magnitude is stable across BLAS builds
            assert got[key] == pytest.approx(want[key], abs=1e-13)
        else:
            assert got[key] == want[key], key


def test_json_output_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["check", HYPERBOLIC, "--estimate", "--json", "-o", str(a)]) == EXIT_OK
    assert run(["check", HYPERBOLIC, "--estimate", "--json", "--output", str(b)]) == EXIT_OK
    assert capsys.readouterr().out == ""
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["lambda"] == pytest.approx(-1.0, abs=1e-10)


@pytest.mark.parametrize(
    "argv",
    [
        ["check", "no/such/file.metric", "--lambda", "1"],
        ["check", HYPERBOLIC],
        ["check", HYPERBOLIC, "--lambda", "1", "--estimate"],
        ["check", KDV1, "--kind", "flat"],
        ["residual", KDV1, "--system", "kdv", "--variant", "nope"],
        ["residual", HYPERBOLIC, "--system", "kdv"],
        ["residual", KDV1, "--system", "not_a_system"],
        ["corpus", "run", "no_such_case"],
        ["frobnicate"],
        [],
    ],
    ids=[
        "missing_file",
        "no_lambda",
        "lambda_and_estimate",
        "no_metric",
        "bad_variant",
        "missing_fields",
        "bad_system",
        "unknown_case",
        "unknown_command",
        "empty",
    ],
)
def test_usage_errors_exit_two(argv, capsys):
    code, _, _ = _run(argv, capsys)
    assert code == EXIT_USAGE


def test_malformed_file_exits_two(tmp_path, capsys):
    p = tmp_path / "bad.metric"
    p.write_text("[space]\ncoords = x y z\n[metric]\ng 1 1 = 1/(z\n")
    code, _, err = _run(["check", str(p), "--lambda", "1"], capsys)
    assert code == EXIT_USAGE
    assert "error" in err


def test_singular_plan_exits_three(tmp_path, capsys):
    p = tmp_path / "sing.metric"
    p.write_text(SINGULAR)
    code, _, err = _run(["check", str(p), "--lambda", "-1"], capsys)
    assert code == EXIT_EVAL
    assert "evaluation failed" in err


def test_point_and_seed_overrides(capsys):
    code, out, _ = _run(["check", HYPERBOLIC, "--lambda", "-1", "--json", "--points", "5", "--seed", "1"], capsys)
    rep = json.loads(out)
    assert code == EXIT_OK and rep["n_points"] == 5
    assert "seed=1" in rep["notes"][0]


def test_other_subcommands(capsys):
    code, out, _ = _run(["cs", HYPERBOLIC, "--normalized", "--json"], capsys)
    assert code == EXIT_OK and json.loads(out)["check"].startswith("cs_density")
    code, out, _ = _run(["extend", HYPERBOLIC, "--mode", "lc", "--check", "symmetric", "--points", "6"], capsys)
    assert code == EXIT_OK
    code, out, _ = _run(["extend", HYPERBOLIC, "--check", "bundle", "--points", "4", "--json"], capsys)
    assert code == EXIT_OK and len(json.loads(out)) == 2
    code, _, _ = _run(["check", str(CASES_DIR / "ext_flat.metric"), "--kind", "flat"], capsys)
    assert code == EXIT_OK


def test_corpus_list_and_single_run(capsys):
    code, out, _ = _run(["corpus", "list", "--json"], capsys)
    names = [d["name"] for d in json.loads(out)]
    assert code == EXIT_OK and "hyperbolic_lm1" in names
    code, out, _ = _run(["corpus", "run", "hyperbolic_lm1"], capsys)
    assert code == EXIT_OK
    assert out.strip().splitlines()[-1].endswith("0 mismatches")


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "curvlab.cli", "--help"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    for cmd in ("check", "residual", "cs", "extend", "laplace1", "corpus"):
        assert cmd in proc.stdout
