import json

import pytest

from twisted_triples.cli import EXPRESSIONS, function_from_literal, main
from twisted_triples.report import read_reports, validate_row

SMALL = {
    "n_trunc": 128,
    "n_ladder": [32, 64, 128],
    "matrix": {"dims": [4], "degrees": [2], "trials": 4, "idempotents": 4},
    "circle": {"epsilons": [0.3], "vanishing_samples": 2, "pairs": 2},
}


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "small.json"
    p.write_text(json.dumps(SMALL))
    return p


def rows_without_timing(path):
    return [{k: v for k, v in r.items() if k != "runtime_ms"} for r in read_reports(path)]


def test_verify_matrix(tmp_path, small_config, capsys):
    out = tmp_path / "r.jsonl"
    assert main(["verify-matrix", "--config", str(small_config), "--out", str(out)]) == 0
    rows = read_reports(out)
    assert len({r["check_id"] for r in rows}) >= 12
    for r in rows:
        validate_row(r)
    meta = json.loads((tmp_path / "r.jsonl.meta.json").read_text())
    assert meta["config"]["matrix"]["trials"] == 4
    assert "PASS matrix.chern.cocycle.n2" in capsys.readouterr().out


def test_matrix_runs_are_deterministic(tmp_path, small_config):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for out in (a, b):
        main(["verify-matrix", "--config", str(small_config), "--out", str(out), "--seed", "5"])
    assert rows_without_timing(a) == rows_without_timing(b)


def test_zero_tolerance_fails(tmp_path, small_config):
    out = tmp_path / "r.jsonl"
    code = main(["verify-matrix", "--config", str(small_config), "--out", str(out),
                 "--tol-scale", "0"])
    assert code == 1
    assert not all(r["pass"] for r in read_reports(out))


@pytest.mark.slow
def test_verify_circle_writes_tables(tmp_path, small_config):
    out = tmp_path / "c.jsonl"
    main(["verify-circle", "--config", str(small_config), "--out", str(out)])
    rows = {r["check_id"]: r for r in read_reports(out)}
    assert rows["circle.identity.closed"]["pass"] and rows["circle.residue.zeta"]["pass"]
    lines = (tmp_path / "c.jsonl.boundedness.csv").read_text().splitlines()
    assert lines[0] == "N,value_re,value_im,delta" and len(lines) == 4


def test_compute_tau(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    code = main(["compute", "tau", "--args", '{"f": "sin", "g": "cos"}', "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out.startswith("-3.14159265358979")
    assert read_reports(out)[0]["check_id"] == "compute.tau"


def test_compute_psi1_closed_trivial(tmp_path, capsys):
    code = main(["compute", "psi1_closed", "--args",
                 '{"f": 1, "g": 1, "phi": {"type": "sine", "epsilon": 0.3}}',
                 "--out", str(tmp_path / "r.jsonl")])
    assert code == 0
    assert abs(complex(capsys.readouterr().out.split()[0])) < 1e-14


def test_compute_index_pair(tmp_path, capsys):
    code = main(["compute", "index_pair", "--args", '{"plus": [0, 1], "minus": [2]}',
                 "--out", str(tmp_path / "r.jsonl")])
    assert code == 0
    value = json.loads(capsys.readouterr().out.splitlines()[0])
    assert (value["index_plus"], value["index_minus"]) == (1, -1)


def test_residue_command(tmp_path, capsys):
    code = main(["residue", "--f", "1", "--n-trunc", "128", "--out", str(tmp_path / "r.jsonl")])
    assert code == 0
    assert complex(capsys.readouterr().out.split()[0]).real == pytest.approx(2.0, rel=1e-6)


def test_error_exit_codes(tmp_path):
    out = str(tmp_path / "r.jsonl")
    assert main(["compute", "nonsense", "--out", out]) == 3
    assert main(["compute", "tau", "--args", "[1]", "--out", out]) == 2
    assert main(["compute", "tau", "--args", '{"f": "sin"}', "--out", out]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"unknown": 1}')
    assert main(["verify-matrix", "--config", str(bad), "--out", out]) == 2
    assert main(["residue", "--f", "1", "--n-trunc", "2", "--out", out]) == 4


def test_function_literals():
    assert function_from_literal(2).coeff(0) == 2
    assert function_from_literal("cos(2)").allclose(function_from_literal({"cos": 2}))
    assert function_from_literal([[1, 0.5, 0]]).coeff(1) == 0.5
    assert set(EXPRESSIONS) >= {"tau", "psi1_spectral", "index_pair"}
