import csv
import io
import json

import numpy as np
import pytest

from expinv.cli import main, quadrature_from_json, quadrature_to_json
from expinv.expsum import build_quadrature, certify, select_params


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_certify_pass(capsys):
    code, out, _ = run(capsys, "certify", "--eps", "0.1", "--delta", "0.01")
    assert code == 0
    assert out.startswith("PASS max_rel_err=")
    assert out.rstrip().endswith("K=535")


def test_gen_domain_error(capsys):
    code, _, err = run(capsys, "gen", "--eps", "2.0", "--delta", "0.5")
    assert code == 2 and "eps" in err


def test_unknown_flag(capsys):
    code, _, err = run(capsys, "gen", "--eps", "0.1", "--delta", "0.5", "--bogus")
    assert code == 2 and "--bogus" in err


def test_help_exits_zero(capsys):
    code, out, _ = run(capsys, "solve", "--help")
    assert code == 0 and "--graph" in out


def test_sweep_rows(capsys):
    code, out, _ = run(
        capsys, "sweep", "--eps-list", "0.1,0.01", "--delta-list", "0.1,0.01", "--grid", "500"
    )
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["eps", "delta", "N", "h", "A", "B", "K", "max_rel_err"]
    assert len(rows) == 5
    assert [(float(r[0]), float(r[1])) for r in rows[1:]] == [
        (0.1, 0.1), (0.1, 0.01), (0.01, 0.1), (0.01, 0.01)
    ]


def test_gen_csv(capsys):
    code, out, _ = run(capsys, "gen", "--eps", "0.1", "--delta", "0.01")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["j", "t", "w"]
    quad = build_quadrature(select_params(0.1, 0.01))
    assert len(rows) - 1 == len(quad)
    assert int(rows[1][0]) == quad.params.A
    assert [float(r[1]) for r in rows[1:]] == quad.nodes.tolist()
    assert [float(r[2]) for r in rows[1:]] == quad.weights.tolist()


def test_json_roundtrip_bit_identical(capsys, tmp_path):
    path = tmp_path / "q.json"
    code, _, _ = run(capsys, "gen", "--eps", "0.1", "--delta", "0.01", "--format", "json",
                     "--out", str(path))
    assert code == 0
    obj = json.loads(path.read_text())
    assert {"eps", "delta", "N", "h", "A", "B", "K", "terms"} <= set(obj)
    direct = certify(build_quadrature(select_params(0.1, 0.01)), 2000)
    parsed = certify(quadrature_from_json(obj), 2000)
    assert parsed.max_rel_error == direct.max_rel_error
    assert parsed == direct
    code, out, _ = run(capsys, "certify", "--quad", str(path), "--grid", "2000")
    assert code == 0
    assert f"max_rel_err={direct.max_rel_error!r}" in out


def test_json_helpers_inverse():
    q = build_quadrature(select_params(0.3, 0.2))
    r = quadrature_from_json(json.loads(json.dumps(quadrature_to_json(q))))
    assert r.params == q.params
    assert np.array_equal(r.nodes, q.nodes) and np.array_equal(r.weights, q.weights)


def test_certify_needs_params(capsys):
    code, _, _ = run(capsys, "certify")
    assert code == 2


def test_bernoulli(capsys):
    code, out, _ = run(capsys, "bernoulli", "--kmax", "4")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["k", "num", "den", "value"]
    assert [(r[1], r[2]) for r in rows[1:]] == [("1", "1"), ("-1", "2"), ("1", "6"), ("0", "1"), ("-1", "30")]


def test_bernoulli_capacity(capsys):
    code, _, err = run(capsys, "bernoulli", "--kmax", "1000")
    assert code == 2 and err


def test_em_check(capsys):
    code, out, _ = run(capsys, "em-check", "--orders", "1,2")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["degree", "N", "h", "defect"]
    assert all(float(r[3]) <= 1e-10 for r in rows[1:])


def test_apply(capsys, tmp_path):
    m, v = tmp_path / "A.txt", tmp_path / "v.txt"
    m.write_text("0.5 0\n0 1\n")
    v.write_text("1\n1\n")
    code, out, _ = run(capsys, "apply", "--matrix", str(m), "--vector", str(v),
                       "--eps", "0.1", "--auto-delta")
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0].startswith("# eps=0.1, delta=0.5, K=")
    assert "max_ratio_dev=" in lines[0]
    y = [float(s) for s in lines[1:]]
    assert y[0] == pytest.approx(2.0, rel=0.1) and y[1] == pytest.approx(1.0, rel=0.1)


def test_apply_spectrum_out_of_range(capsys, tmp_path):
    m, v = tmp_path / "A.txt", tmp_path / "v.txt"
    m.write_text("0.05 0\n0 1\n")
    v.write_text("1 1\n")
    code, _, err = run(capsys, "apply", "--matrix", str(m), "--vector", str(v),
                       "--eps", "0.1", "--delta", "0.1")
    assert code == 2 and "0.05" in err


def test_solve_json_report(capsys):
    code, out, _ = run(capsys, "solve", "--graph", "path:50", "--b", "unit:0,49",
                       "--eps", "0.05", "--report", "json")
    assert code == 0
    rep = json.loads(out)
    assert set(rep) == {"eps", "delta_used", "K", "matvec_count", "rel_error_vs_direct",
                        "residual_norm"}
    assert rep["rel_error_vs_direct"] <= 0.06


def test_solve_vector_output(capsys, tmp_path):
    out_path = tmp_path / "x.txt"
    code, out, _ = run(capsys, "solve", "--graph", "cycle:6", "--b", "random", "--eps", "0.1",
                       "--report", "json", "--out", str(out_path))
    assert code == 0
    x = [float(s) for s in out_path.read_text().splitlines() if not s.startswith("#")]
    assert len(x) == 6 and abs(sum(x)) < 1e-10


def test_solve_bad_graph(capsys):
    code, _, err = run(capsys, "solve", "--graph", "star:5", "--b", "random", "--eps", "0.1")
    assert code == 2 and "star" in err


def test_solve_unit_out_of_range(capsys):
    code, _, _ = run(capsys, "solve", "--graph", "path:5", "--b", "unit:0,9", "--eps", "0.1")
    assert code == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--graph", "grid:3x3", "--b", "random", "--eps", "0.1", "--seed", "5"],
        ["sweep", "--eps-list", "0.1", "--delta-list", "0.1,0.05", "--grid", "300"],
        ["gen", "--eps", "0.5", "--delta", "0.5", "--format", "json"],
    ],
)
def test_deterministic_output(capsys, argv):
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second
    threaded = run(capsys, *argv, "--threads", "3")
    assert threaded[:2] == first[:2]


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "expinv", "certify", "--eps", "1", "--delta", "1",
                        "--grid", "100"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("PASS")
