import csv
import io
import json
import math
import shutil
import subprocess
import sys

import pytest

from qgraf.cli import main, parse_value


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize(
    "text,expected",
    [("3", 3), ("-0.25", -0.25), ("0.3+0.2i", 0.3 + 0.2j), ("0.3-0.2i", 0.3 - 0.2j), ("2i", 2j), ("none", None)],
)
def test_parse_value(text, expected):
    assert parse_value(text, 0.5) == expected


def test_parse_value_q_power():
    assert parse_value("q^-2", 0.5) == pytest.approx(4.0)


def test_eval_qgamma(capsys):
    code, out, _ = run(capsys, "eval", "qgamma", "x=1", "q=0.5")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(1.0)


def test_eval_asc(capsys):
    code, out, _ = run(capsys, "eval", "asc", "n=1", "theta=1.0471975512", "a=0.3", "b=0.2", "q=0.5")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(0.5, abs=1e-10)


def test_eval_phi_pole_without_regularization(capsys):
    code, _, err = run(capsys, "eval", "phi", "upper=0.3", "lower=q^-2", "z=0.4", "q=0.5")
    assert code == 2
    assert "Pole" in err


def test_eval_bad_q(capsys):
    code, _, err = run(capsys, "eval", "qgamma", "x=1", "q=1.5")
    assert code == 2 and "q must lie" in err


@pytest.mark.parametrize(
    "fn,params",
    [
        ("qpoch", ["a=0.5", "q=0.5"]),
        ("qcharlier", ["m=3", "x=q^-2", "a=0.7", "q=0.5"]),
        ("qlaguerre", ["n=2", "alpha=0.5", "x=0.3", "q=0.5"]),
        ("weight", ["theta=1.1", "a=0.4", "b=-0.2", "q=0.5"]),
        ("bessel_j", ["nu=0.5", "z=1.3"]),
    ],
)
def test_eval_functions(capsys, fn, params):
    code, out, _ = run(capsys, "eval", fn, *params)
    assert code == 0
    assert "value" in json.loads(out)


def test_eval_qpoch_value(capsys):
    _, out, _ = run(capsys, "eval", "qpoch", "a=0.5", "q=0.5")
    assert json.loads(out)["value"] == pytest.approx(0.2887880951, abs=1e-10)


def test_verify_addition_passes(capsys):
    code, out, _ = run(
        capsys, "verify", "addition", "q=0.5", "a=0.3", "b=0.2", "z=0.4", "nu=1.5", "m=2", "theta=1.0471975512"
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["status"] == "pass"
    assert float(rows[0]["abs_residual"]) < 1e-10


def test_verify_hansen_lommel_json(capsys):
    code, out, _ = run(capsys, "verify", "hansen_lommel_q", "p=1", "m=2", "z=0.4", "q=0.5", "--json")
    assert code == 0
    row = json.loads(out)
    assert row["status"] == "pass"
    assert math.hypot(row["lhs_re"], row["lhs_im"]) < 1e-10


def test_verify_fail_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "inversion", "--tol", "1e-30", "--json")
    assert code == 1
    assert json.loads(out)["status"] == "fail"


@pytest.mark.parametrize(
    "argv",
    [
        ("verify", "addition", "z=1.5"),
        ("verify", "no_such_identity"),
        ("verify", "addition", "bogus=1"),
        ("eval", "no_such_function"),
        ("frobnicate",),
    ],
)
def test_error_exit_codes(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_list_identities(capsys):
    code, out, _ = run(capsys, "list-identities")
    assert code == 0
    for name in ("addition", "product", "ks", "graf", "one_phi_one_shift"):
        assert f"{name}:" in out


def _spec(tmp_path, doc):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_sweep_empty_axes_single_case(tmp_path, capsys):
    spec = _spec(tmp_path, {"identity": "heine0", "axes": {}})
    code, out, err = run(capsys, "sweep", spec, "--no-header")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    assert "1 pass, 0 fail" in err


def test_sweep_cap(tmp_path, capsys):
    spec = _spec(tmp_path, {"identity": "heine0", "axes": {"z": [0.1] * 400, "a": [0.2] * 300}})
    code, _, err = run(capsys, "sweep", spec)
    assert code == 2 and "cap" in err


def test_sweep_bad_axis(tmp_path, capsys):
    spec = _spec(tmp_path, {"identity": "heine0", "axes": {"nu": [1]}})
    code, _, _ = run(capsys, "sweep", spec)
    assert code == 2


def test_sweep_error_rows(tmp_path, capsys):
    spec = _spec(tmp_path, {"identity": "heine0", "axes": {"z": [0.5, 1.5]}})
    code, out, _ = run(capsys, "sweep", spec, "--no-header", "--format", "json")
    assert code == 1
    rows = json.loads(out)["rows"]
    assert [r["status"] for r in rows] == ["pass", "error"]


def test_sweep_row_order_and_complex_columns(tmp_path, capsys):
    spec = _spec(tmp_path, {"identity": "ks", "axes": {"nu": [0, 1], "s": ["0.6+0.8i", 0.8]}})
    code, out, err = run(capsys, "sweep", spec, "--no-header")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    got = [(int(r["nu"]), float(r["s_re"]), float(r["s_im"])) for r in rows]
    assert got == [(0, 0.6, 0.8), (0, 0.8, 0.0), (1, 0.6, 0.8), (1, 0.8, 0.0)]
    assert "4 pass" in err


def test_sweep_header_and_out(tmp_path, capsys):
    spec = _spec(tmp_path, {"identity": "heine0", "axes": {"z": [0.1, 0.2]}, "out": str(tmp_path / "r.csv")})
    code, out, _ = run(capsys, "sweep", spec)
    assert code == 0
    text = (tmp_path / "r.csv").read_text()
    assert text.startswith("# qgraf")
    assert "2 pass" in out


def test_sweep_deterministic_parallel(tmp_path, capsys):
    spec = _spec(tmp_path, {"identity": "heine0", "axes": {"z": [0.1, 0.3, -0.5], "c": [0.3, 0.7]}})
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert run(capsys, "sweep", spec, "--no-header", "--out", str(a))[0] == 0
    assert run(capsys, "sweep", spec, "--no-header", "--out", str(b), "--parallel", "2")[0] == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.skipif(shutil.which("qgraf") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["qgraf", "verify", "heine0"], capture_output=True, text=True)
    assert proc.returncode == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qgraf.cli", "verify", "addition", "z=1.5"], capture_output=True, text=True)
    assert proc.returncode == 2


@pytest.mark.parametrize("name", sorted(__import__("qgraf.registry").registry.REGISTRY))
def test_registry_defaults_pass(name):
    from qgraf.registry import get

    assert get(name).run().passed
