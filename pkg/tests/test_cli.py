import csv
import io
import json

import pytest

from finsler_lab.cli import run

RANDERS_BAD = '{"family": "randers", "dim": 2, "A": [[1, 0], [0, 1]], "b": [1.1, 0]}'
RANDERS_OK = '{"family": "randers", "dim": 2, "A": [[1, 0], [0, 1]], "b": [0.5, 0]}'


def invoke(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, err = invoke(capsys, *argv)
    return code, json.loads(out)


def test_invalid_randers_norm_exits_1_with_hessian_detail(capsys):
    code, rep = report(capsys, "norm", "check", "--norm", RANDERS_BAD)
    assert code == 1 and rep["exit_code"] == 1
    assert "hessian_positive" in rep["validity"]["failures"]
    assert "eigenvalue" in rep["validity"]["checks"]["hessian_positive"]["detail"]


def test_valid_norm_exits_0(capsys):
    code, rep = report(capsys, "norm", "check", "--norm", RANDERS_OK, "--samples", "200")
    assert code == 0 and rep["identities"]["passed"]


def test_norm_file_input(capsys, tmp_path):
    p = tmp_path / "n.json"
    p.write_text(RANDERS_OK)
    assert invoke(capsys, "norm", "check", "--norm", str(p), "--samples", "50")[0] == 0


def test_malformed_input_exits_2_with_pointer(capsys):
    code, out, err = invoke(capsys, "norm", "check", "--norm", '{"family": "randers", "A": [[1]]}')
    assert code == 2 and "$.b" in err
    code, _, err = invoke(capsys, "distance", "--space",
                          '{"kind": "product", "factors": [{"kind": "sphere"}]}',
                          "--from", "0", "--to", "1")
    assert code == 2 and "$.factors[0].dim" in err
    assert invoke(capsys, "norm", "check", "--norm", "{oops")[0] == 2


def test_usage_errors_exit_2(capsys):
    assert invoke(capsys, "teleport")[0] == 2
    assert invoke(capsys, "clifford", "verify", "--space", "S2")[0] == 2
    assert invoke(capsys, "distance", "--space", "S2", "--from", "a,b", "--to", "0,0")[0] == 2
    assert invoke(capsys, "distance", "--space", "R2", "--from", "0,0,0", "--to", "0,0")[0] == 2


def test_clifford_negative_control_exits_1(capsys):
    code, rep = report(capsys, "clifford", "verify", "--space", "catalog:S2", "--iso",
                       "rot-z-0.785", "--samples", "200")
    assert code == 1 and rep["verdict"] == "non-clifford"
    assert rep["isometry_defect"] < 1e-8


def test_clifford_positive_control_exits_0(capsys):
    code, rep = report(capsys, "clifford", "verify", "--space", "S3", "--iso", "catalog:S3-hopf",
                       "--samples", "40")
    assert code == 0 and rep["verdict"] == "clifford"
    assert abs(rep["mean"] - 0.7) < 1e-3


def test_inconclusive_band_exits_3(capsys):
    # spread between tol and 10 tol: neither verdict is allowed
    code, rep = report(capsys, "clifford", "verify", "--space", "S2", "--iso", "rot-z-0.0003",
                       "--samples", "100", "--tol", "1e-4")
    assert code == 3 and rep["verdict"] == "inconclusive"


def test_non_isometry_exits_1(capsys):
    code, rep = report(capsys, "clifford", "verify", "--space", "randers-0.5", "--iso", "rot-1.57")
    assert code == 1 and rep["verdict"] == "not-an-isometry"


def test_connection_show(capsys):
    code, rep = report(capsys, "connection", "show", "--space", "S2", "--x", "0.3,0.1",
                       "--y", "1,0")
    assert code == 0
    assert set(rep) >= {"gamma", "N", "Gamma", "berwald"}
    assert rep["torsion_free_defect"] < 1e-12
    code, rep = report(capsys, "connection", "show", "--space", "randers-drift", "--x", "0.4,0.2",
                       "--y", "[0.6, 0.9]")
    assert code == 0 and not rep["berwald"]["is_berwald_at_x"]


def test_geodesic_shoot_csv(capsys, tmp_path):
    p = tmp_path / "g.csv"
    code, rep = report(capsys, "geodesic", "shoot", "--space", "randers-0.5", "--x0", "0,0",
                       "--y0", "1,0", "--t-end", "2", "--csv", str(p))
    assert code == 0 and rep["length"] == pytest.approx(3.0)
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["t", "x1", "x2", "v1", "v2"] and len(rows) == 1002
    code, out, _ = invoke(capsys, "geodesic", "shoot", "--space", "S2", "--x0", "0,0", "--y0",
                          "0.5,0", "--t-end", "1", "--format", "csv")
    assert out.startswith("t,x1,x2,v1,v2\n")


def test_geodesic_leaving_chart_is_inconclusive(capsys):
    code, rep = report(capsys, "geodesic", "shoot", "--space", "S2", "--x0", "0,0", "--y0",
                       "0.5,0", "--t-end", "4")
    assert code == 3 and rep["partial_samples"] > 0


def test_distance_is_directed(capsys):
    _, fwd = report(capsys, "distance", "--space", "randers-0.5", "--from", "0,0", "--to", "1,0",
                    "--method", "shooting")
    _, bwd = report(capsys, "distance", "--space", "randers-0.5", "--from", "1,0", "--to", "0,0")
    assert fwd["value"] == pytest.approx(1.5, abs=1e-8)
    assert bwd["value"] == pytest.approx(0.5, abs=1e-8)


def test_displacement_map_csv(capsys):
    code, out, _ = invoke(capsys, "displacement", "map", "--space", "S2", "--iso", "rot-z-0.5",
                          "--samples", "12", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["x1", "x2", "delta"] and len(rows) == 13
    assert all(0 <= float(r[2]) <= 0.5 + 1e-12 for r in rows[1:])


def test_product_verify(capsys):
    assert invoke(capsys, "product", "verify", "--space", "S3xRanders", "--samples", "30")[0] == 0
    skewed = json.dumps({"kind": "product", "rule": "skewed", "coupling": 0.2,
                         "factors": [{"kind": "catalog", "id": "randers-0.3"},
                                     {"kind": "sphere", "dim": 2}]})
    code, rep = report(capsys, "product", "verify", "--space", skewed, "--samples", "30")
    assert code == 1
    assert {c["name"]: c["passed"] for c in rep["checks"]}["orthogonality"] is False
    assert invoke(capsys, "product", "verify", "--space", "S2")[0] == 2


def test_lemma_runs(capsys):
    code, rep = report(capsys, "lemma", "run", "--which", "3.1", "--space", "S3xRanders")
    assert code == 0 and rep["violations"] == 0
    code, rep = report(capsys, "lemma", "run", "--which", "3.2", "--space", "S2xS2",
                       "--samples", "10")
    assert code == 0 and rep["detail"]["skipped"] == 0


def test_counterexample_csv(capsys, tmp_path):
    p = tmp_path / "swap.csv"
    code, rep = report(capsys, "counterexample", "swap-s2", "--csv", str(p))
    assert code == 0 and rep["max_error"] < 1e-3 and rep["spread"] > 0.9
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["t", "delta_numeric", "delta_formula"] and len(rows) == 34


def test_catalog_list(capsys):
    code, rep = report(capsys, "catalog", "list", "--json")
    assert code == 0 and "S3-hopf" in {e["id"] for e in rep["entries"]}
    code, out, _ = invoke(capsys, "catalog", "list")
    assert "H2-translation-along-geodesic" in out and not out.startswith("{")


def test_reports_embed_provenance_and_are_byte_identical(capsys):
    argv = ["clifford", "verify", "--space", "H2", "--iso", "disk-rot-0.4", "--samples", "30",
            "--seed", "9"]
    first, second = invoke(capsys, *argv)[1], invoke(capsys, *argv)[1]
    assert first == second
    rep = json.loads(first)
    assert rep["seed"] == 9 and rep["version"] and len(rep["config_hash"]) == 16


def test_seed_position_and_env(capsys, monkeypatch):
    _, a = report(capsys, "--seed", "5", "catalog", "list", "--json")
    _, b = report(capsys, "catalog", "list", "--json", "--seed", "5")
    assert a["seed"] == b["seed"] == 5
    monkeypatch.setenv("FINSLER_LAB_SEED", "13")
    assert report(capsys, "catalog", "list", "--json")[1]["seed"] == 13


def test_config_file_and_output_path(capsys, tmp_path):
    cfg = tmp_path / "lab.cfg"
    cfg.write_text("seed = 3\nsamples.norm = 20\n")
    out = tmp_path / "r.json"
    code, stdout, _ = invoke(capsys, "norm", "check", "--norm", RANDERS_OK, "--config", str(cfg),
                             "--output", str(out))
    rep = json.loads(out.read_text())
    assert code == 0 and stdout == "" and rep["seed"] == 3
    cfg.write_text("speed = 3\n")
    assert invoke(capsys, "catalog", "list", "--config", str(cfg))[0] == 2


def test_text_format(capsys):
    code, out, _ = invoke(capsys, "distance", "--space", "R2", "--from", "0,0", "--to", "3,4",
                          "--format", "text")
    assert code == 0 and "value: 5.0" in out
