"""Orthogonal products of Finsler spaces.

The default combination ``F = sqrt(sum F_i^2)`` keeps each factor's
metric on its own tangent block, splits geodesics blockwise and makes
cross-block directions g-orthogonal.  The ``skewed`` rule breaks the last
property and serves as a negative control.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ChartExitError, InputError, NotAProductIsometryError
from .geodesics import distances, integrate_geodesic
from .isometries import IsometryAction, antipodal, verdict_for
from .norms import EQUALITY_SLACK, FD_STEP, ProductNorm, unit_directions
from .spaces import FinslerSpace, ProductChart, SmoothMap

ORTHO_TOL_ANALYTIC = 1e-6
ORTHO_TOL_FD = 1e-4
ZERO_BLOCK_BAND = 1e-7
PROBE_COUNT = 16
PROBE_THRESHOLD = 1e-8


@dataclass(frozen=True, eq=False)
class ProductSpace(FinslerSpace):
    factors: tuple = ()
    rule: str = "l2"
    coupling: float = 0.0

    @property
    def blocks(self):
        return self.chart.blocks

    def split(self, x):
        x = np.asarray(x, dtype=float)
        return [x[..., s] for s in self.blocks]

    def project(self, i, x):
        return np.asarray(x, dtype=float)[..., self.blocks[i]]

    def join(self, parts):
        return np.concatenate([np.asarray(p, dtype=float) for p in parts], axis=-1)


def _combine(values, rule, coupling):
    sq = sum(v ** 2 for v in values)
    if rule == "skewed":
        for i in range(len(values)):
            for j in range(i + 1, len(values)):
                sq = sq + coupling * values[i] * values[j]
    return np.sqrt(np.maximum(sq, 0.0))


def make_product(factors, rule: str = "l2", coupling: float = 0.0, name=None) -> ProductSpace:
    """Product of ``factors`` with the chosen norm rule.

    Only the ``l2`` rule inherits blockwise sprays, closed-form distance
    ``sqrt(sum d_i^2)`` and recentering from the factors.
    """
    factors = tuple(factors)
    if len(factors) < 2:
        raise InputError("a product needs at least two factors")
    if rule not in ("l2", "skewed"):
        raise InputError(f"unknown product rule {rule!r}")
    if rule == "skewed" and not 0 <= coupling < 2:
        raise InputError("skewed coupling must lie in [0, 2) to keep F positive")
    chart = ProductChart([f.chart for f in factors])
    blocks = chart.blocks
    n = sum(f.dim for f in factors)
    name = name or "x".join(f.name for f in factors)

    def split(x):
        return [x[..., s] for s in blocks]

    def norm_at(x):
        x = np.asarray(x, dtype=float)
        return ProductNorm(tuple(f.norm_at(p) for f, p in zip(factors, split(x))), rule, coupling)

    def metric(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return _combine([f.F(a, b) for f, a, b in zip(factors, split(x), split(y))], rule, coupling)

    extras = {}
    l2 = rule == "l2"
    if l2 and all(f.spray_fn is not None for f in factors):
        extras["spray_fn"] = lambda X, V: np.concatenate(
            [f.spray_fn(a, b) for f, a, b in zip(factors, split(np.asarray(X, float)),
                                                 split(np.asarray(V, float)))], axis=-1)
    if l2 and all(f.connection_fn is not None for f in factors):
        def connection(x):
            G = np.zeros((n, n, n))
            for f, s, p in zip(factors, blocks, split(np.asarray(x, float))):
                G[s, s, s] = f.connection_fn(p)
            return G
        extras["connection_fn"] = connection
        if all(f.riemannian for f in factors):
            extras["christoffel_fn"] = connection
    if l2 and all(f.distance_fn is not None for f in factors):
        def dist(x, z):
            x, z = np.asarray(x, float), np.asarray(z, float)
            return float(np.sqrt(sum(f.distance_fn(a, b) ** 2
                                     for f, a, b in zip(factors, split(x), split(z)))))
        extras["distance_fn"] = dist
    if l2 and all(f.log_fn is not None for f in factors):
        extras["log_fn"] = lambda x, z: np.concatenate(
            [f.log_fn(a, b) for f, a, b in zip(factors, split(np.asarray(x, float)),
                                               split(np.asarray(z, float)))])
    if any(f.cut_locus_fn is not None for f in factors):
        extras["cut_locus_fn"] = lambda x, z: any(
            f.cut_locus_fn is not None and f.cut_locus_fn(a, b)
            for f, a, b in zip(factors, split(np.asarray(x, float)), split(np.asarray(z, float))))
    if l2 and any(f.recenter is not None for f in factors):
        extras["recenter"] = lambda x, z: _recenter(factors, rule, coupling, blocks, x, z)

    if all(f.sampler is None for f in factors):
        sampler = None
    else:
        sampler = lambda rng, count: np.concatenate(
            [f.sample_points(rng, count) for f in factors], axis=-1)
    berwald = l2 and all(f.berwald for f in factors)
    keys = [f.spray_key for f in factors]
    spray_key = ("product", rule, coupling, *keys) if all(k is not None for k in keys) else None
    return ProductSpace(
        name=name, dim=n, norm_at=norm_at, chart=chart, metric_fn=metric, sampler=sampler,
        spray_key=spray_key,
        reversible=l2 and all(f.reversible for f in factors),
        berwald=True if berwald else None,
        riemannian=l2 and all(f.riemannian for f in factors),
        description={"kind": "product", "rule": rule, "coupling": coupling,
                     "factors": [f.description for f in factors]},
        factors=factors, rule=rule, coupling=coupling, **extras)


def _recenter(factors, rule, coupling, blocks, x, z):
    locals_, tos, froms = [], [], []
    for f, s in zip(factors, blocks):
        if f.recenter is None:
            ident = SmoothMap("identity", lambda p: p, lambda p, y: y)
            locals_.append(f)
            tos.append(ident)
            froms.append(ident)
        else:
            loc, to, frm = f.recenter(x[s], z[s])
            locals_.append(loc)
            tos.append(to)
            froms.append(frm)

    def blockwise(maps):
        return SmoothMap(
            maps[0].name,
            lambda p: np.concatenate([m.point_map(p[..., s]) for m, s in zip(maps, blocks)],
                                     axis=-1),
            lambda p, y: np.concatenate([m.tangent_map(p[..., s], y[..., s])
                                         for m, s in zip(maps, blocks)], axis=-1))

    local = make_product(locals_, rule, coupling, name="x".join(f.name for f in locals_))
    return local, blockwise(tos), blockwise(froms)


# ---------------------------------------------------------------------------
# structural checks on a product


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst: float
    threshold: float
    samples: int
    violations: int = 0
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "worst": self.worst,
                "threshold": self.threshold, "samples": self.samples,
                "violations": self.violations, "detail": self.detail}


def _unit_in_block(norm, rng, block, n):
    """Random vector supported on ``block`` with F = 1."""
    y = np.zeros(n)
    y[block] = rng.standard_normal(block.stop - block.start)
    return y / norm(y)


def half_directional_derivative(norm: ProductNorm, y, v) -> float:
    """``(1/2) D_v F^2 (y)``, which equals ``g_y(y, v)`` wherever F is smooth.

    Only first derivatives are needed, so it is well defined on the whole
    slit space.  The analytic path uses the exact gradient of F^2; otherwise
    a second-order one-sided stencil is used (one-sided, so it sees the kink
    of non-smooth rules instead of averaging it away).
    """
    if norm.analytic:
        return 0.5 * float(norm.grad_sq(y) @ v)
    h = FD_STEP * max(1.0, np.linalg.norm(y))
    f0, f1, f2 = (float(norm(y + k * h * v)) ** 2 for k in range(3))
    return 0.5 * (-3 * f0 + 4 * f1 - f2) / (2 * h)


def orthogonality_check(product: ProductSpace, samples: int = 200, seed: int = 0) -> CheckReport:
    """Max ``|g_y(y, v)|`` for y in one factor block and v in another."""
    rng = np.random.default_rng(seed)
    X = product.sample_points(rng, samples)
    k = len(product.factors)
    worst, analytic = 0.0, True
    for x in X:
        i, j = rng.choice(k, size=2, replace=False)
        norm = product.norm_at(x)
        analytic &= norm.analytic
        y = _unit_in_block(norm, rng, product.blocks[i], product.dim)
        v = _unit_in_block(norm, rng, product.blocks[j], product.dim)
        worst = max(worst, abs(half_directional_derivative(norm, y, v)))
    thr = ORTHO_TOL_ANALYTIC if analytic else ORTHO_TOL_FD
    return CheckReport("orthogonality", bool(worst < thr), float(worst), thr, samples,
                       detail={"mode": "analytic" if analytic else "fd"})


def restriction_check(product: ProductSpace, samples: int = 200, seed: int = 0) -> CheckReport:
    """F on a factor block equals the factor metric."""
    rng = np.random.default_rng(seed)
    X = product.sample_points(rng, samples)
    worst = 0.0
    for x in X:
        for f, s in zip(product.factors, product.blocks):
            y = np.zeros(product.dim)
            y[s] = rng.standard_normal(f.dim)
            worst = max(worst, abs(float(product.F(x, y)) - float(f.F(x[s], y[s]))))
    return CheckReport("restriction", worst < 1e-12, worst, 1e-12, samples)


def projection_check(product: ProductSpace, samples: int = 5, seed: int = 0,
                     t_end: float = 1.0, tol: float = 1e-6) -> CheckReport:
    """Projections of product geodesics match separately integrated factor geodesics."""
    rng = np.random.default_rng(seed)
    X = product.sample_points(rng, samples)
    worst, skipped = 0.0, 0
    for x in X:
        y = rng.standard_normal(product.dim)
        y /= product.F(x, y)
        try:
            path = integrate_geodesic(product, x, y, t_end)
            for f, s in zip(product.factors, product.blocks):
                fp = integrate_geodesic(f, x[s], y[s], t_end)
                worst = max(worst, float(np.max(np.abs(path.x[:, s] - fp.x))))
        except ChartExitError:
            skipped += 1
    return CheckReport("projection", worst < tol, worst, tol, samples - skipped,
                       detail={"skipped": skipped})


def lemma31_check(product: ProductSpace, samples: int = 1000, seed: int = 0) -> CheckReport:
    """``F(v_1 + ... + v_s) >= F(v_k)`` with equality exactly when the other blocks vanish.

    About a quarter of the samples zero all blocks but one so that the
    equality branch is exercised; the others draw every block with
    magnitude in [0.1, 2].  Equality is declared when the relative gap is
    below 1e-7, and a block counts as zero when its size is below 1e-7.
    """
    rng = np.random.default_rng(seed)
    X = product.sample_points(rng, samples)
    k = len(product.factors)
    violations, worst, equal_cases = 0, np.inf, 0
    for x in X:
        norm = product.norm_at(x)
        parts = []
        for f in product.factors:
            d = unit_directions(rng, 1, f.dim)[0]
            parts.append(d * rng.uniform(0.1, 2.0))
        keep = int(rng.integers(k))
        if rng.uniform() < 0.25:
            parts = [p if i == keep else np.zeros_like(p) for i, p in enumerate(parts)]
        v = np.concatenate(parts)
        vk = np.zeros_like(v)
        vk[product.blocks[keep]] = v[product.blocks[keep]]
        Fv, Fk = float(norm(v)), float(norm(vk))
        gap = Fv - Fk
        others_zero = all(np.linalg.norm(p) < ZERO_BLOCK_BAND for i, p in enumerate(parts)
                          if i != keep)
        equal = gap <= EQUALITY_SLACK * max(Fk, 1.0)
        equal_cases += others_zero
        worst = min(worst, gap)
        if gap < -EQUALITY_SLACK * max(Fk, 1.0) or equal != others_zero:
            violations += 1
    return CheckReport("lemma-3.1", violations == 0, float(worst), 0.0, samples, violations,
                       {"equality_cases": int(equal_cases)})


def lemma32_check(product: ProductSpace, samples: int = 200, seed: int = 0,
                  method: str = "shooting", tol: float = 1e-4) -> CheckReport:
    """``d(x, x') >= d_1(x_1, x_1')``, with equality iff the remaining coordinates agree.

    Half the pairs share the non-first coordinates (equality branch).  Product
    distances come from ``method`` and factor distances from the factor's own
    solver; uncertified samples are skipped and counted.
    """
    rng = np.random.default_rng(seed)
    X = product.sample_points(rng, samples)
    Z = product.sample_points(rng, samples)
    s1 = product.blocks[0]
    f1 = product.factors[0]
    Z = np.array([np.concatenate([z[s1], x[s1.stop:]]) if i % 2 == 0 else z
                  for i, (x, z) in enumerate(zip(X, Z))])
    D = distances(product, X, Z, method=method, seed=seed)
    D1 = distances(f1, X[:, s1], Z[:, s1], seed=seed)
    violations, skipped, worst_eq, worst_strict = 0, 0, 0.0, np.inf
    for idx, (d, d1) in enumerate(zip(D, D1)):
        same = idx % 2 == 0
        if not (d.certified and d1.certified):
            skipped += 1
            continue
        gap = d.value - d1.value
        if same:
            worst_eq = max(worst_eq, abs(gap))
            violations += abs(gap) > tol
        else:
            worst_strict = min(worst_strict, gap)
            violations += gap <= tol
    return CheckReport("lemma-3.2", violations == 0, float(worst_eq), tol, samples - skipped,
                       int(violations), {"skipped": skipped, "min_strict_gap": float(worst_strict),
                                         "method": method})


# ---------------------------------------------------------------------------
# isometries of products


def product_isometry(product: ProductSpace, isos, perm=None) -> IsometryAction:
    """``(x_1, ..., x_s) -> (f_1(x_{perm[0]}), ..., f_s(x_{perm[s-1]}))``."""
    k = len(product.factors)
    perm = list(range(k)) if perm is None else list(perm)
    if sorted(perm) != list(range(k)) or len(isos) != k:
        raise InputError("need one factor map per factor and a permutation of the factors")
    blocks = product.blocks

    def point(x):
        return np.concatenate([isos[j](x[..., blocks[perm[j]]]) for j in range(k)], axis=-1)

    def tangent(x, y):
        return np.concatenate([isos[j].push(x[..., blocks[perm[j]]], y[..., blocks[perm[j]]])
                               for j in range(k)], axis=-1)

    name = "x".join(i.name for i in isos) + ("" if perm == list(range(k)) else f"@{perm}")
    return IsometryAction(name, "product", point, tangent,
                          {"factors": [i.to_dict() for i in isos], "perm": perm})


def swap(product: ProductSpace) -> IsometryAction:
    ident = IsometryAction("identity", "identity", lambda x: x.copy(), lambda x, y: y.copy())
    return product_isometry(product, [ident, ident], [1, 0])


def swap_antipodal(product: ProductSpace) -> IsometryAction:
    """``(x_1, x_2) -> (A x_2, x_1)`` on a product of two spheres."""
    ident = IsometryAction("identity", "identity", lambda x: x.copy(), lambda x, y: y.copy())
    return product_isometry(product, [antipodal(product.factors[1]), ident], [1, 0])


@dataclass
class FactorDecomposition:
    perm: list
    factor_maps: list
    defect: float

    def to_dict(self):
        return {"perm": self.perm, "defect": self.defect}


def decompose_isometry(product: ProductSpace, iso: IsometryAction, samples: int = PROBE_COUNT,
                       seed: int = 0) -> FactorDecomposition:
    """Recover the block permutation and factor maps of a product isometry.

    Each input block is perturbed ``samples`` times; an output block depends
    on an input block when its image moves by more than 1e-8.  The
    dependency pattern must be a permutation.
    """
    rng = np.random.default_rng(seed)
    blocks = product.blocks
    k = len(blocks)
    base = product.sample_points(rng, samples)
    dep = np.zeros((k, k), dtype=bool)
    for x in base:
        fx = iso(x)
        for i, s in enumerate(blocks):
            xp = x.copy()
            xp[s] = product.factors[i].sample_points(rng, 1)[0]
            fp = iso(xp)
            for j, t in enumerate(blocks):
                dep[j, i] |= np.max(np.abs(fp[t] - fx[t])) > PROBE_THRESHOLD
    if not (dep.sum(axis=0) == 1).all() or not (dep.sum(axis=1) == 1).all():
        raise NotAProductIsometryError(f"block dependency pattern is not a permutation: "
                                       f"{dep.astype(int).tolist()}")
    perm = [int(np.flatnonzero(dep[j])[0]) for j in range(k)]
    maps = []
    for j in range(k):
        src, dst = blocks[perm[j]], blocks[j]
        anchor = base[0]

        def embed(p, src=src, anchor=anchor):
            p = np.asarray(p, dtype=float)
            x = np.broadcast_to(anchor, p.shape[:-1] + anchor.shape).copy()
            x[..., src] = p
            return x

        def point(p, dst=dst, embed=embed):
            return iso(embed(p))[..., dst]

        def tangent(p, y, src=src, dst=dst, embed=embed):
            v = np.zeros(np.shape(y)[:-1] + (product.dim,))
            v[..., src] = y
            return iso.push(embed(p), v)[..., dst]

        maps.append(IsometryAction(f"factor-{j}", "factor", point, tangent,
                                   {"source": perm[j], "target": j}))
    recon = reassemble(product, FactorDecomposition(perm, maps, 0.0))
    defect = max(float(np.max(np.abs(recon(x) - iso(x)))) for x in base)
    if defect > 1e-6:
        raise NotAProductIsometryError(f"factor maps do not reproduce the isometry "
                                       f"(defect {defect:.2e})")
    return FactorDecomposition(perm, maps, defect)


def reassemble(product: ProductSpace, dec: FactorDecomposition) -> IsometryAction:
    return product_isometry(product, dec.factor_maps, dec.perm)


# ---------------------------------------------------------------------------
# swap counterexample


@dataclass
class SwapCurve:
    t: np.ndarray
    numeric: np.ndarray
    formula: np.ndarray
    certified: np.ndarray
    methods: list

    @property
    def max_error(self):
        return float(np.max(np.abs(self.numeric - self.formula)))

    @property
    def spread(self):
        return float(self.numeric.max() - self.numeric.min())

    @property
    def verdict(self):
        return verdict_for(self.numeric, 1e-4, bool(self.certified.all()))

    def to_csv(self) -> str:
        lines = ["t,delta_numeric,delta_formula"]
        lines += [f"{a!r},{b!r},{c!r}" for a, b, c in
                  zip(self.t.tolist(), self.numeric.tolist(), self.formula.tolist())]
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {"points": int(self.t.shape[0]), "max_error": self.max_error,
                "spread": self.spread, "verdict": self.verdict,
                "certified": int(self.certified.sum()), "methods": sorted(set(self.methods))}


def swap_counterexample_displacement(points: int = 33, method: str = "shooting",
                                     seed: int = 0) -> SwapCurve:
    """Displacement of ``(x1, x2) -> (A x2, x1)`` along ``(x1, gamma(t))`` on S^2 x S^2.

    ``gamma`` is a unit-speed half great circle from ``x1`` to its antipode,
    integrated numerically; ``t`` runs over ``points`` equally spaced values
    in [0, pi].  Both sphere charts are centred on the pole of that great
    circle so the whole configuration stays well inside the chart.
    """
    from .models import sphere

    S = sphere(2, center=[0.0, 1.0, 0.0])
    P = make_product([S, S])
    emb = S.embedding
    ex, ez = np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])
    x1 = emb.from_ambient(ex)
    steps_per_interval = 32
    t_grid = np.linspace(0.0, np.pi, points)
    h = np.pi / ((points - 1) * steps_per_interval)
    gamma = integrate_geodesic(S, x1, emb.pull(ex, ez), np.pi, h=h)
    sigma = swap_antipodal(P)
    idx = np.rint(t_grid / gamma.h).astype(int)
    pts = [np.concatenate([x1, gamma.x[i]]) for i in idx]
    res = distances(P, pts, [sigma(p) for p in pts], method=method, seed=seed)
    numeric = [r.value for r in res]
    cert = [r.certified for r in res]
    methods = [r.method for r in res]
    formula = np.sqrt((np.pi - t_grid) ** 2 + t_grid ** 2)
    return SwapCurve(gamma.t[idx], np.array(numeric), formula, np.array(cert), methods)
