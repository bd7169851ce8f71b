"""Acceptance battery: one test per criterion, each printing a PASS/FAIL line."""
import subprocess
import sys
import time

import pytest

from finsler_lab.acceptance import CRITERIA
from finsler_lab.config import RunConfig

SEED = 42
# wall-clock budgets in seconds; criteria without one are unbounded
BUDGET = {1: 10.0, 2: 10.0, 3: 60.0, 6: 120.0}


@pytest.fixture
def announce(capsys):
    def emit(number, passed, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")
    return emit


def timed(number):
    cfg = RunConfig(seed=SEED)
    start = time.perf_counter()
    result = CRITERIA[number](cfg)
    return cfg, result, time.perf_counter() - start


def within_budget(number, elapsed):
    return elapsed < BUDGET.get(number, float("inf"))


def test_criterion_1_norm_identities(announce):
    cfg, res, dt = timed(1)
    assert cfg.n("norm") == 1000
    rows = res.metrics
    ok = res.passed and within_budget(1, dt)
    for key, m in rows.items():
        tol = 1e-8 if key.endswith("/analytic") else 1e-4
        ok &= m["tolerance"] <= tol and max(m["euler"], m["g_yy"], m["cartan_contraction"]) <= tol
        ok &= m["inequality_failures"] == 0 and m["homogeneity"] <= 1e-12
    announce(1, ok, f"{len(rows)} norm/mode pairs, {dt:.1f}s")
    assert ok, rows


def test_criterion_2_connection(announce):
    _, res, dt = timed(2)
    m = res.metrics
    ok = (res.passed and within_budget(2, dt) and m["sphere_christoffel_max_error"] < 1e-5
          and m["flat_gamma_max"] < 1e-10 and not m["drift_berwald"]
          and m["drift_max_deviation"] > 1e-3)
    announce(2, ok, f"sphere err {m['sphere_christoffel_max_error']:.1e}, "
                    f"drift deviation {m['drift_max_deviation']:.2e}, {dt:.1f}s")
    assert ok, m


def test_criterion_3_distance_oracles(announce):
    _, res, dt = timed(3)
    m = res.metrics
    ok = (res.passed and within_budget(3, dt) and m["sphere_pairs"] == 100
          and m["sphere_max_error"] < 1e-4 and m["sphere_certified"] == 100
          and all(abs(v - 1.5) < 1e-8 for v in m["randers_forward"].values())
          and all(abs(v - 0.5) < 1e-8 for v in m["randers_backward"].values()))
    announce(3, ok, f"sphere err {m['sphere_max_error']:.1e}, randers err "
                    f"{m['randers_max_error']:.1e}, {dt:.1f}s")
    assert ok, m


def test_criterion_4_clifford_positive(announce):
    _, res, _ = timed(4)
    r = res.metrics["S3-hopf"]
    ok = (res.passed and r["verdict"] == "clifford" and abs(r["mean"] - 0.7) < 1e-3
          and r["spread"] < 1e-4 and r["samples"] == 200)
    announce(4, ok, f"mean {r['mean']:.6f}, spread {r['spread']:.1e}")
    assert ok, r


def test_criterion_5_clifford_negative(announce):
    _, res, _ = timed(5)
    m = res.metrics
    ok = res.passed and m["S2-rot-z-pi/4"]["spread"] > 0.5
    ok &= all(r["verdict"] == r["expected"] for r in m.values())
    announce(5, ok, ", ".join(f"{k}={r['verdict']}" for k, r in m.items()))
    assert ok, m


def test_criterion_6_swap_counterexample(announce):
    _, res, dt = timed(6)
    m = res.metrics
    ok = (res.passed and within_budget(6, dt) and m["points"] == 33 and m["max_error"] < 1e-3
          and m["spread"] > 0.9)
    announce(6, ok, f"max error {m['max_error']:.1e}, spread {m['spread']:.3f}, {dt:.1f}s")
    assert ok, m


def test_criterion_7_lemma_sweeps(announce):
    cfg, res, _ = timed(7)
    m = res.metrics
    ok = (res.passed and cfg.n("lemma31") == 1000 and cfg.n("lemma32") == 200
          and m["lemma31"]["violations"] == 0 and m["lemma31"]["detail"]["equality_cases"] > 0
          and m["lemma32"]["violations"] == 0 and m["lemma32"]["detail"]["skipped"] == 0
          and m["orthogonality_l2"]["passed"] and not m["orthogonality_skewed"]["passed"])
    announce(7, ok, f"lemma31 equality cases {m['lemma31']['detail']['equality_cases']}, "
                    f"skewed defect {m['orthogonality_skewed']['worst']:.3f}")
    assert ok, m


def test_criterion_8_symmetric_lie_algebra(announce):
    _, res, _ = timed(8)
    m = res.metrics
    ok = (res.passed and m["so2-euclidean"]["max_defect"] < 1e-10
          and m["so2-randers"]["max_defect"] > 1e-2)
    announce(8, ok, f"euclidean defect {m['so2-euclidean']['max_defect']:.1e}, "
                    f"randers defect {m['so2-randers']['max_defect']:.3f}")
    assert ok, m


@pytest.mark.slow
def test_criterion_9_suite_is_byte_reproducible(announce, tmp_path):
    reports = []
    for k in range(2):
        out = tmp_path / f"suite-{k}.json"
        proc = subprocess.run([sys.executable, "-m", "finsler_lab.cli", "suite", "--seed", str(SEED),
                               "--output", str(out)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        reports.append(out.read_bytes())
    ok = reports[0] == reports[1] and len(reports[0]) > 0
    announce(9, ok, f"two suite runs, {len(reports[0])} bytes each")
    assert ok
