"""Isometries of catalog spaces, displacement functions and Clifford tests."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ChartExitError, DomainError, InputError
from .geodesics import (GeodesicPath, distance, distances, integrate_geodesic,
                        shooting_distance)
from .spaces import FinslerSpace, SmoothMap

DEFAULT_CLIFFORD_TOL = 1e-4
PRESERVATION_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class IsometryAction:
    """A named map ``rho`` with its differential ``(x, y) -> d rho_x(y)``."""

    name: str
    kind: str
    point_map: Callable
    tangent_map: Callable
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return np.asarray(self.point_map(np.asarray(x, dtype=float)), dtype=float)

    def push(self, x, y):
        return np.asarray(self.tangent_map(np.asarray(x, float), np.asarray(y, float)), dtype=float)

    def then(self, other: "IsometryAction") -> "IsometryAction":
        """``other`` after ``self``."""
        return IsometryAction(
            f"{other.name}*{self.name}", "composite",
            lambda x: other(self(x)),
            lambda x, y: other.push(self(x), self.push(x, y)),
            {"first": self.to_dict(), "second": other.to_dict()})

    def conjugate(self, to_local: SmoothMap, from_local: SmoothMap) -> "IsometryAction":
        """The same isometry written in another chart."""
        def point(p):
            return to_local.point_map(self(from_local.point_map(p)))

        def tangent(p, y):
            q = from_local.point_map(p)
            return to_local.tangent_map(self(q), self.push(q, from_local.tangent_map(p, y)))

        return IsometryAction(self.name, self.kind, point, tangent, self.params)

    def to_dict(self):
        return {"kind": self.kind, "name": self.name, **self.params}


# ---------------------------------------------------------------------------
# constructors


def identity(dim: int) -> IsometryAction:
    return IsometryAction("identity", "identity", lambda x: x.copy(), lambda x, y: y.copy())


def translation(v) -> IsometryAction:
    v = np.asarray(v, dtype=float)
    return IsometryAction(f"translate-{v.tolist()}", "translation", lambda x: x + v,
                          lambda x, y: y.copy(), {"v": v.tolist()})


def linear(M, name=None) -> IsometryAction:
    M = np.asarray(M, dtype=float)
    return IsometryAction(name or "linear", "linear", lambda x: x @ M.T, lambda x, y: y @ M.T,
                          {"M": M.tolist()})


def rotation2d(theta: float) -> IsometryAction:
    c, s = np.cos(theta), np.sin(theta)
    iso = linear([[c, -s], [s, c]], name=f"rot-{theta:g}")
    return IsometryAction(iso.name, "rotation", iso.point_map, iso.tangent_map, {"angle": theta})


def ambient_orthogonal(space: FinslerSpace, Q, name="ambient-orthogonal", kind="ambient",
                       params=None) -> IsometryAction:
    """Restriction of an orthogonal map of the ambient space to an embedded sphere."""
    emb = space.embedding
    if emb is None:
        raise InputError(f"{space.name} has no ambient embedding")
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (emb.ambient_dim,) * 2 or not np.allclose(Q.T @ Q, np.eye(Q.shape[0]), atol=1e-12):
        raise InputError("ambient map must be an orthogonal matrix of the ambient dimension")

    def point(x):
        return emb.from_ambient(emb.to_ambient(x) @ Q.T)

    def tangent(x, y):
        return emb.pull(emb.to_ambient(x) @ Q.T, emb.push(x, y) @ Q.T)

    return IsometryAction(name, kind, point, tangent,
                          params if params is not None else {"Q": Q.tolist()})


def rotation_z(space: FinslerSpace, theta: float) -> IsometryAction:
    """Rotation by ``theta`` in the plane of the first two ambient axes."""
    m = space.embedding.ambient_dim
    Q = np.eye(m)
    c, s = np.cos(theta), np.sin(theta)
    Q[:2, :2] = [[c, -s], [s, c]]
    return ambient_orthogonal(space, Q, f"rot-z-{theta:g}", "rot-z", {"angle": theta})


def antipodal(space: FinslerSpace) -> IsometryAction:
    m = space.embedding.ambient_dim
    return ambient_orthogonal(space, -np.eye(m), "antipodal", "antipodal", {})


def quaternion_matrix(q) -> np.ndarray:
    """Matrix of ``p -> q p`` on R^4 with quaternion coordinates (w, x, y, z)."""
    w, x, y, z = q
    return np.array([[w, -x, -y, -z],
                     [x, w, -z, y],
                     [y, z, w, -x],
                     [z, -y, x, w]])


def quaternion_left(space: FinslerSpace, q) -> IsometryAction:
    q = np.asarray(q, dtype=float)
    if q.shape != (4,) or not np.isclose(np.linalg.norm(q), 1.0, atol=1e-12):
        raise InputError("q must be a unit quaternion [w, x, y, z]")
    if space.embedding is None or space.embedding.ambient_dim != 4:
        raise InputError("quaternion-left acts on S^3 only")
    return ambient_orthogonal(space, quaternion_matrix(q), "quaternion-left", "quaternion-left",
                              {"q": q.tolist()})


def disk_mobius(a: complex, theta: float = 0.0) -> IsometryAction:
    """``z -> e^{i theta} (z + a) / (1 + conj(a) z)`` on the Poincare disk."""
    a = complex(a)
    if abs(a) >= 1:
        raise InputError("Mobius parameter must lie in the open unit disk")
    rot = np.exp(1j * theta)

    def point(x):
        x = np.asarray(x, dtype=float)
        zc = x[..., 0] + 1j * x[..., 1]
        w = rot * (zc + a) / (1 + np.conj(a) * zc)
        return np.stack([w.real, w.imag], axis=-1)

    def tangent(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        zc = x[..., 0] + 1j * x[..., 1]
        dz = rot * (1 - abs(a) ** 2) / (1 + np.conj(a) * zc) ** 2
        w = dz * (y[..., 0] + 1j * y[..., 1])
        return np.stack([w.real, w.imag], axis=-1)

    kind = "mobius-translation" if theta == 0 else "mobius"
    return IsometryAction(f"{kind}-{a}", kind, point, tangent,
                          {"a": [a.real, a.imag], "angle": theta})


def disk_rotation(theta: float) -> IsometryAction:
    iso = disk_mobius(0.0, theta)
    return IsometryAction(f"disk-rot-{theta:g}", "disk-rotation", iso.point_map, iso.tangent_map,
                          {"angle": theta})


# ---------------------------------------------------------------------------
# checks


def _sample_pairs(space, iso, rng, count):
    """Sample points x with both x and rho(x) inside the chart."""
    out = []
    while sum(len(o) for o in out) < count:
        X = space.sample_points(rng, count)
        Y = np.array([iso(x) for x in X])
        out.append(X[space.chart.contains(Y)])
    return np.concatenate(out)[:count]


def isometry_certificate(space: FinslerSpace, iso: IsometryAction, samples: int = 200,
                         seed: int = 0) -> float:
    """Largest ``|F(rho x, d rho(y)) - F(x, y)|`` over sampled (x, y)."""
    rng = np.random.default_rng(seed)
    X = _sample_pairs(space, iso, rng, samples)
    Y = rng.standard_normal(X.shape)
    Fx = np.asarray(space.F(X, Y))
    Fr = np.array([space.F(iso(x), iso.push(x, y)) for x, y in zip(X, Y)])
    return float(np.max(np.abs(Fr - Fx)))


def displacement(space: FinslerSpace, iso: IsometryAction, x, method: str = "auto",
                 seed: int = 0):
    """Directed displacement ``d(x, rho(x))`` as a DistanceResult."""
    x = space.check_point(x)
    return distance(space, x, iso(x), method=method, seed=seed)


@dataclass
class DisplacementReport:
    points: np.ndarray
    values: np.ndarray
    tolerance: float
    certified: int
    verdict: str

    @property
    def min(self):
        return float(self.values.min())

    @property
    def max(self):
        return float(self.values.max())

    @property
    def mean(self):
        return float(self.values.mean())

    @property
    def spread(self):
        return self.max - self.min

    def to_dict(self, with_samples=False):
        d = {"verdict": self.verdict, "min": self.min, "max": self.max, "mean": self.mean,
             "spread": self.spread, "tolerance": self.tolerance,
             "samples": int(self.values.shape[0]), "certified": self.certified}
        if with_samples:
            d["points"] = self.points.tolist()
            d["values"] = self.values.tolist()
        return d


def verdict_for(values, tol, all_certified=True) -> str:
    values = np.asarray(values, dtype=float)
    if not all_certified:
        return "inconclusive"
    spread = values.max() - values.min()
    scale = 1 + values.mean()
    if spread <= tol * scale:
        return "clifford"
    if spread > 10 * tol * scale:
        return "non-clifford"
    return "inconclusive"


def clifford_check(space: FinslerSpace, iso: IsometryAction, sample_count: int = 200,
                   seed: int = 0, tol: float = DEFAULT_CLIFFORD_TOL,
                   method: str = "auto") -> DisplacementReport:
    """Sample the displacement function and classify it.

    Points whose image leaves the chart are redrawn.  Any non-certified
    distance makes the verdict inconclusive.
    """
    if sample_count < 2:
        raise InputError("sample_count must be at least 2")
    rng = np.random.default_rng(seed)
    X = _sample_pairs(space, iso, rng, sample_count)
    results = distances(space, X, [iso(x) for x in X], method=method, seed=seed)
    values = np.array([r.value for r in results])
    certified = sum(r.certified for r in results)
    return DisplacementReport(X, values, tol, certified,
                              verdict_for(values, tol, certified == len(results)))


def geodesic_preservation_defect(space: FinslerSpace, iso: IsometryAction, path: GeodesicPath,
                                 c: float, samples: int = 64, tangent: bool = False) -> float:
    """Max chart distance between ``rho(gamma(t))`` and ``gamma(t + c)``.

    With ``tangent=True`` compares ``d rho(gamma'(t))`` with ``gamma'(t + c)``.
    """
    t0, t1 = float(path.t[0]), float(path.t[-1])
    if c < 0 or t0 + c > t1 + 1e-12:
        raise DomainError(f"shift c={c:g} exceeds the path domain [{t0:g}, {t1:g}]")
    ts = np.linspace(t0, max(t0, t1 - c), samples)
    P, Ps = path.at(ts), path.at(np.minimum(ts + c, t1))
    if tangent:
        V, Vs = path.velocity_at(ts), path.velocity_at(np.minimum(ts + c, t1))
        img = np.array([iso.push(p, v) for p, v in zip(P, V)])
        return float(np.max(np.linalg.norm(img - Vs, axis=1)))
    img = np.array([iso(p) for p in P])
    return float(np.max(np.linalg.norm(img - Ps, axis=1)))


def preserves_geodesic_check(space: FinslerSpace, iso: IsometryAction, path: GeodesicPath,
                             c: float, tol: float = PRESERVATION_TOL) -> bool:
    return geodesic_preservation_defect(space, iso, path, c) <= tol


@dataclass
class EquivalenceReport:
    cond1: Optional[bool]
    cond2: Optional[bool]
    status: str
    displacement: float = float("nan")
    point_defect: float = float("nan")
    tangent_defect: float = float("nan")

    @property
    def agree(self) -> Optional[bool]:
        if self.cond1 is None or self.cond2 is None:
            return None
        return self.cond1 == self.cond2

    def to_dict(self):
        return {"cond1": self.cond1, "cond2": self.cond2, "agree": self.agree,
                "status": self.status, "displacement": self.displacement,
                "point_defect": self.point_defect, "tangent_defect": self.tangent_defect}


def clifford_criterion_equivalence(space: FinslerSpace, iso: IsometryAction, x,
                                   tol: float = PRESERVATION_TOL, seed: int = 0) -> EquivalenceReport:
    """Compare point-level and tangent-level preservation of the minimal geodesic x -> rho(x).

    The minimal geodesic comes from a shooting certificate, is reparametrised
    to unit speed and extended to length ``2 delta``; both conditions use the
    shift ``c = delta``.  Work happens in a chart centred on the pair when the
    space offers one.
    """
    x = space.check_point(x)
    z = iso(x)
    if not space.chart.contains(z):
        return EquivalenceReport(None, None, "inconclusive")
    if np.linalg.norm(z - x) < 1e-12:
        return EquivalenceReport(True, True, "trivial", 0.0, 0.0, 0.0)
    local, local_iso, xl, zl = space, iso, x, z
    if space.recenter is not None:
        local, to_local, from_local = space.recenter(x, z)
        local_iso = iso.conjugate(to_local, from_local)
        xl, zl = to_local.point_map(x), to_local.point_map(z)
    res = shooting_distance(local, xl, zl, seed=seed)
    if not res.certified or res.path is None:
        return EquivalenceReport(None, None, "inconclusive", res.value)
    delta = res.value
    try:
        path = integrate_geodesic(local, xl, res.path.v[0] / delta, 2 * delta)
    except ChartExitError:
        return EquivalenceReport(None, None, "inconclusive", delta)
    pd = geodesic_preservation_defect(local, local_iso, path, delta)
    td = geodesic_preservation_defect(local, local_iso, path, delta, tangent=True)
    return EquivalenceReport(pd <= tol, td <= tol, "ok", delta, pd, td)
