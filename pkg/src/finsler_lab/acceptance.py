"""The acceptance battery, shared by ``finsler-lab suite`` and the test suite.

Each ``criterion_N(cfg)`` returns a :class:`CriterionResult` whose metrics
are pure functions of the seed and config, so suite reports are
byte-reproducible.  Wall-clock timings are deliberately left out of them.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import catalog
from .config import RunConfig
from .connection import berwald_check, chern_coeffs, christoffel_formal
from .geodesics import distance, distances
from .isometries import clifford_check, disk_mobius, disk_rotation, quaternion_left, \
    rotation2d, rotation_z, translation
from .models import randers_plane
from .norms import EuclideanNorm, ProductNorm, RandersNorm, fundamental_inequality_check, \
    unit_directions
from .products import lemma31_check, lemma32_check, make_product, orthogonality_check, \
    swap_counterexample_displacement


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    inconclusive: bool = False

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else ("INCONCLUSIVE" if self.inconclusive else "FAIL")
        return f"{status} criterion {self.number}: {self.title}"

    def to_dict(self):
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "inconclusive": self.inconclusive, "metrics": self.metrics}


# ---------------------------------------------------------------------------
# 1. norm identities


def catalog_norms():
    """Every Minkowski norm appearing in the catalog, keyed by a short label."""
    I2 = np.eye(2)
    return {
        "euclidean-1": EuclideanNorm(np.eye(1)),
        "euclidean-2": EuclideanNorm(I2),
        "euclidean-3": EuclideanNorm(np.eye(3)),
        "euclidean-4": EuclideanNorm(np.eye(4)),
        "euclidean-diag23": EuclideanNorm(np.diag([2.0, 3.0])),
        "randers-0.3": RandersNorm(I2, np.array([0.3, 0.0])),
        "randers-0.5": RandersNorm(I2, np.array([0.5, 0.0])),
        "randers-0.3-0.1": RandersNorm(I2, np.array([0.3, 0.1])),
        "product-randers-euclidean": ProductNorm(
            (RandersNorm(I2, np.array([0.3, 0.0])), EuclideanNorm(np.eye(1)))),
    }


def norm_identities(norm, samples: int, seed: int) -> dict:
    """Worst defects of the norm identities over ``samples`` random inputs."""
    rng = np.random.default_rng(seed)
    n = norm.dim
    if isinstance(norm, ProductNorm):
        # F^2 is only C^1 where a Randers block vanishes, so keep every block
        # in the same magnitude band as whole vectors of the other norms
        Y = np.concatenate([unit_directions(rng, samples, c.dim)
                            * rng.uniform(0.5, 2.0, (samples, 1)) for c in norm.components], axis=1)
    else:
        Y = unit_directions(rng, samples, n) * rng.uniform(0.5, 2.0, (samples, 1))
    W = rng.standard_normal((samples, n))
    U = unit_directions(rng, samples, n)
    V = unit_directions(rng, samples, n)
    lam = rng.uniform(0.01, 10.0, samples)
    F = norm(Y)
    homog = float(np.max(np.abs(norm(Y * lam[:, None]) - lam * F) / (lam * F)))
    euler = gyy = cartan = 0.0
    ineq_worst = np.inf
    ineq_fail = 0
    equality_missed = 0
    for y, w, u, v, f in zip(Y, W, U, V, F):
        grad = norm.gradient(y)
        g = norm.g(y)
        C = norm.cartan(y)
        euler = max(euler, abs(grad @ y - f) / max(1.0, f))
        gyy = max(gyy, abs(y @ g @ y - f * f) / max(1.0, f * f))
        cartan = max(cartan, float(np.max(np.abs(np.einsum("ijk,i->jk", C, y)))),
                     abs(float(np.einsum("ijk,i,j,k->", C, y, u, v))))
        r = fundamental_inequality_check(norm, y, w, tol=1e-9)
        ineq_worst = min(ineq_worst, r.slack)
        ineq_fail += not r.holds
        equality_missed += not fundamental_inequality_check(norm, y, 2 * y).equality_flag
    return {"homogeneity": homog, "euler": float(euler), "g_yy": float(gyy),
            "cartan_contraction": float(cartan), "inequality_min_slack": float(ineq_worst),
            "inequality_failures": ineq_fail, "equality_missed": equality_missed}


def criterion_1(cfg: RunConfig) -> CriterionResult:
    rows, ok = {}, True
    for label, norm in catalog_norms().items():
        for mode in ("analytic", "fd"):
            nm = norm.with_mode(mode)
            tol = cfg.tol("analytic") if nm.analytic else cfg.tol("fd")
            m = norm_identities(nm, cfg.n("norm"), cfg.seed)
            good = (m["homogeneity"] <= 1e-12 and m["euler"] <= tol and m["g_yy"] <= tol
                    and m["cartan_contraction"] <= tol and m["inequality_failures"] == 0
                    and m["equality_missed"] == 0)
            rows[f"{label}/{mode}"] = {**m, "tolerance": tol, "passed": good}
            ok &= good
    return CriterionResult(1, "norm identities on catalog norms", ok, rows)


# ---------------------------------------------------------------------------
# 2. connection


def criterion_2(cfg: RunConfig) -> CriterionResult:
    rng = np.random.default_rng(cfg.seed)
    S2 = catalog.get_space("S2")
    pts = S2.sample_points(rng, 20)
    sphere_err = 0.0
    for x in pts:
        y = rng.standard_normal(2)
        num = christoffel_formal(S2, x, y, mode="numeric")
        sphere_err = max(sphere_err, float(np.max(np.abs(num - S2.christoffel_fn(x)))))
    flat_max = 0.0
    for sid in ("R2", "R3", "randers-0.3", "randers-0.5"):
        sp = catalog.get_space(sid)
        for x in sp.sample_points(rng, 5):
            y = rng.standard_normal(sp.dim)
            flat_max = max(flat_max, float(np.max(np.abs(chern_coeffs(sp, x, y)))))
    drift = catalog.get_space("randers-drift")
    rep = berwald_check(drift, np.array([0.7, -0.3]), 10, cfg.seed)
    ok = sphere_err < 1e-5 and flat_max < 1e-10 and (not rep.is_berwald_at_x) \
        and rep.max_deviation > 1e-3
    return CriterionResult(2, "connection coefficients", ok, {
        "sphere_christoffel_max_error": sphere_err, "flat_gamma_max": flat_max,
        "drift_berwald": rep.is_berwald_at_x, "drift_max_deviation": rep.max_deviation})


# ---------------------------------------------------------------------------
# 3. distance oracles


def criterion_3(cfg: RunConfig) -> CriterionResult:
    rng = np.random.default_rng(cfg.seed)
    S2 = catalog.get_space("S2")
    k = cfg.n("sphere_pairs")
    X, Z = S2.sample_points(rng, k), S2.sample_points(rng, k)
    res = distances(S2, X, Z, method="shooting", seed=cfg.seed)
    emb = S2.embedding
    oracle = np.arccos(np.clip(np.sum(emb.to_ambient(X) * emb.to_ambient(Z), axis=1), -1, 1))
    err = float(np.max(np.abs(np.array([r.value for r in res]) - oracle)))
    certified = sum(r.certified for r in res)
    R = catalog.get_space("randers-0.5")
    o, e = np.zeros(2), np.array([1.0, 0.0])
    fwd = {m: distance(R, o, e, method=m).value for m in ("closed-form", "shooting")}
    bwd = {m: distance(R, e, o, method=m).value for m in ("closed-form", "shooting")}
    flat_err = max(max(abs(v - 1.5) for v in fwd.values()), max(abs(v - 0.5) for v in bwd.values()))
    ok = err < 1e-4 and certified == k and flat_err < 1e-8
    return CriterionResult(3, "distance oracles", ok, {
        "sphere_pairs": k, "sphere_certified": certified, "sphere_max_error": err,
        "randers_forward": fwd, "randers_backward": bwd, "randers_max_error": flat_err})


# ---------------------------------------------------------------------------
# 4-5. Clifford controls


def _clifford(space, iso, cfg, method):
    r = clifford_check(space, iso, cfg.n("clifford"), cfg.seed, cfg.tol("clifford"), method)
    return r.to_dict()


def criterion_4(cfg: RunConfig) -> CriterionResult:
    S3 = catalog.get_space("S3")
    q = [np.cos(0.7), np.sin(0.7), 0.0, 0.0]
    r = _clifford(S3, quaternion_left(S3, q), cfg, "shooting")
    ok = r["verdict"] == "clifford" and abs(r["mean"] - 0.7) < 1e-3 and r["spread"] < 1e-4
    return CriterionResult(4, "Clifford positive control on S3", ok, {"S3-hopf": r},
                           inconclusive=r["verdict"] == "inconclusive")


def criterion_5(cfg: RunConfig) -> CriterionResult:
    S2, H2 = catalog.get_space("S2"), catalog.get_space("H2")
    R2, Rr = catalog.get_space("R2"), catalog.get_space("randers-0.5")
    runs = {
        "S2-rot-z-pi/4": (_clifford(S2, rotation_z(S2, np.pi / 4), cfg, "shooting"), "non-clifford"),
        "H2-translation": (_clifford(H2, disk_mobius(0.5), cfg, "shooting"), "non-clifford"),
        "H2-rotation": (_clifford(H2, disk_rotation(0.5), cfg, "shooting"), "non-clifford"),
        "R2-rotation": (_clifford(R2, rotation2d(0.5), cfg, "shooting"), "non-clifford"),
        "R2-translation": (_clifford(R2, translation([1.0, 0.5]), cfg, "shooting"), "clifford"),
        "randers-translation": (_clifford(Rr, translation([1.0, 0.5]), cfg, "shooting"),
                                "clifford"),
    }
    ok = all(r["verdict"] == exp for r, exp in runs.values())
    ok &= runs["S2-rot-z-pi/4"][0]["spread"] > 0.5
    metrics = {k: {**r, "expected": exp} for k, (r, exp) in runs.items()}
    return CriterionResult(5, "Clifford negative controls", ok, metrics,
                           inconclusive=any(r["verdict"] == "inconclusive" for r, _ in runs.values()))


# ---------------------------------------------------------------------------
# 6. swap counterexample


def criterion_6(cfg: RunConfig) -> CriterionResult:
    curve = swap_counterexample_displacement(cfg.n("swap_grid"), "shooting", cfg.seed)
    ok = curve.max_error < 1e-3 and curve.spread > 0.9 and bool(curve.certified.all())
    return CriterionResult(6, "swap counterexample on S2xS2", ok, curve.to_dict())


# ---------------------------------------------------------------------------
# 7. lemma sweeps


def lemma_spaces():
    return {
        "randers-x-R1": make_product([randers_plane([0.3, 0.0]), catalog.get_space("R1")]),
        "S2xS2": catalog.get_space("S2xS2"),
        "randers-x-S2-skewed": make_product([randers_plane([0.3, 0.1]), catalog.get_space("S2")],
                                            "skewed", 0.2),
        "randers-x-S2": make_product([randers_plane([0.3, 0.1]), catalog.get_space("S2")]),
    }


def criterion_7(cfg: RunConfig) -> CriterionResult:
    sp = lemma_spaces()
    l31 = lemma31_check(sp["randers-x-R1"], cfg.n("lemma31"), cfg.seed)
    l32 = lemma32_check(sp["S2xS2"], cfg.n("lemma32"), cfg.seed, "shooting", cfg.tol("lemma32"))
    ortho = orthogonality_check(sp["randers-x-S2"], cfg.n("orthogonality"), cfg.seed)
    skew = orthogonality_check(sp["randers-x-S2-skewed"], cfg.n("orthogonality"), cfg.seed)
    ok = (l31.passed and l31.violations == 0 and l31.detail["equality_cases"] > 0
          and l32.passed and l32.detail["skipped"] == 0
          and ortho.passed and not skew.passed and skew.worst > 1e-2)
    return CriterionResult(7, "product lemma sweeps", ok, {
        "lemma31": l31.to_dict(), "lemma32": l32.to_dict(),
        "orthogonality_l2": ortho.to_dict(), "orthogonality_skewed": skew.to_dict()})


# ---------------------------------------------------------------------------
# 8. symmetric Lie algebra condition


def criterion_8(cfg: RunConfig) -> CriterionResult:
    ex = catalog.standard_lie_examples()
    reps = {k: catalog.minkowski_symmetric_check(d, cfg.n("lie"), cfg.seed) for k, d in ex.items()}
    ok = (reps["so2-euclidean"].passed and reps["so2-euclidean"].max_defect < 1e-10
          and not reps["so2-randers"].passed and reps["so2-randers"].max_defect > 1e-2
          and reps["abelian-randers"].passed)
    return CriterionResult(8, "symmetric Lie algebra condition", ok,
                           {k: r.to_dict() for k, r in reps.items()})


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8}


def catalog_expectations(cfg: RunConfig) -> list:
    """Reproduce the expected verdict of every catalog entry."""
    out = []
    for e in catalog.list_catalog():
        r = clifford_check(e.space, e.isometry, cfg.n("clifford"), cfg.seed, cfg.tol("clifford"))
        out.append({"id": e.id, "expected": e.expected, "verdict": r.verdict,
                    "matches": r.verdict == e.expected, "mean": r.mean, "spread": r.spread})
    return out


def _run_one(number: int, cfg: RunConfig) -> CriterionResult:
    return CRITERIA[number](cfg)


def run_suite(cfg: RunConfig, criteria=None, workers: int | None = None) -> dict:
    """Run the battery; criteria are independent and run in worker processes.

    Results are gathered in criterion order, so the report does not depend
    on scheduling.  ``workers=1`` runs everything in-process.
    """
    numbers = sorted(criteria or CRITERIA)
    if workers is None:
        workers = min(len(numbers), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, numbers, [cfg] * len(numbers)))
    else:
        results = [_run_one(k, cfg) for k in numbers]
    expectations = catalog_expectations(cfg)
    passed = all(r.passed for r in results) and all(e["matches"] for e in expectations)
    inconclusive = any(r.inconclusive for r in results) or \
        any(e["verdict"] == "inconclusive" for e in expectations)
    return {"criteria": [r.to_dict() for r in results], "catalog": expectations,
            "passed": passed, "inconclusive": inconclusive,
            "lines": [r.line for r in results]}
