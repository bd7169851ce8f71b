"""Concrete model spaces: flat Minkowski spaces, round spheres, the hyperbolic plane.

Spheres live in a stereographic chart centred at a chosen unit vector ``c``
(projection from ``-c``), so the chart origin is ``c`` and the metric is
``4|y|^2 / (1 + |x|^2)^2``.  The hyperbolic plane uses the Poincare disk.
Both metrics are conformal, ``exp(2 phi) |y|^2``, and share the closed-form
Christoffel symbols ``d_ij phi_k + d_ik phi_j - d_jk phi_i``.
"""
from __future__ import annotations

import numpy as np

from .errors import InputError
from .norms import EuclideanNorm, RandersNorm
from .spaces import Chart, Embedding, FinslerSpace, SmoothMap

SPHERE_CHART_RADIUS = 100.0
CUT_LOCUS_BAND = 1e-3


def conformal_christoffel(dphi):
    n = dphi.shape[-1]
    I = np.eye(n)
    return (np.einsum("ij,...k->...ijk", I, dphi) + np.einsum("ik,...j->...ijk", I, dphi)
            - np.einsum("jk,...i->...ijk", I, dphi))


def conformal_spray(dphi, V):
    """Gamma(v, v) for a conformal metric, without forming Gamma."""
    dv = np.add.reduce(dphi * V, axis=-1, keepdims=True)
    vv = np.add.reduce(V * V, axis=-1, keepdims=True)
    return 2 * V * dv - vv * dphi


def _zero_connection(n):
    # every flat space shares the zero spray and the default box chart
    return dict(spray_key=("flat", n), connection_fn=lambda x: np.zeros((n, n, n)),
                christoffel_fn=lambda x: np.zeros((n, n, n)),
                spray_fn=lambda X, V: np.zeros_like(np.asarray(V, dtype=float)))


# ---------------------------------------------------------------------------
# flat spaces


def euclidean_space(n: int, A=None, name=None) -> FinslerSpace:
    A = np.eye(n) if A is None else np.asarray(A, dtype=float)
    norm = EuclideanNorm(A)
    return FinslerSpace(
        name=name or f"R{n}", dim=n, norm_at=lambda x: norm, chart=Chart.box(n),
        metric_fn=lambda x, y: norm(y),
        distance_fn=lambda x, z: float(norm(np.asarray(z, float) - np.asarray(x, float))),
        geodesic_fn=lambda x0, y0, t: np.asarray(x0) + np.multiply.outer(t, y0),
        log_fn=lambda x, z: np.asarray(z, float) - np.asarray(x, float),
        reversible=True, berwald=True, riemannian=True,
        description={"kind": "euclidean", "dim": n, "A": A.tolist()},
        **_zero_connection(n))


def minkowski_space(norm, name=None) -> FinslerSpace:
    """Locally Minkowski space: the same norm at every point, straight-line geodesics."""
    n = norm.dim
    return FinslerSpace(
        name=name or f"minkowski-{norm.family}", dim=n, norm_at=lambda x: norm,
        chart=Chart.box(n), metric_fn=lambda x, y: norm(y),
        distance_fn=lambda x, z: float(norm(np.asarray(z, float) - np.asarray(x, float))),
        geodesic_fn=lambda x0, y0, t: np.asarray(x0) + np.multiply.outer(t, y0),
        log_fn=lambda x, z: np.asarray(z, float) - np.asarray(x, float),
        reversible=isinstance(norm, EuclideanNorm), berwald=True,
        riemannian=isinstance(norm, EuclideanNorm),
        description={"kind": "minkowski", "norm": norm.to_dict()},
        **_zero_connection(n))


def randers_plane(b, A=None, name=None) -> FinslerSpace:
    b = np.asarray(b, dtype=float)
    A = np.eye(b.shape[0]) if A is None else np.asarray(A, dtype=float)
    norm = RandersNorm(A, b)
    if norm.drift_norm >= 1:
        raise InputError(f"Randers drift has A-norm {norm.drift_norm:.3f} >= 1")
    space = minkowski_space(norm, name or f"randers-{b[0]:g}")
    object.__setattr__(space, "description", {"kind": "randers-plane", "A": A.tolist(),
                                              "b": b.tolist()})
    return space


def randers_drift_plane(amplitude: float = 0.3, name=None) -> FinslerSpace:
    """Randers plane with drift ``b(x) = (amplitude * sin x^1, 0)``; not Berwald."""
    if not 0 <= amplitude < 1:
        raise InputError("drift amplitude must lie in [0, 1)")
    I = np.eye(2)

    def drift(x):
        x = np.asarray(x, dtype=float)
        return np.stack([amplitude * np.sin(x[..., 0]), np.zeros(x.shape[:-1])], axis=-1)

    def metric(x, y):
        y = np.asarray(y, dtype=float)
        return np.linalg.norm(y, axis=-1) + np.sum(drift(x) * y, axis=-1)

    return FinslerSpace(
        name=name or f"randers-drift-{amplitude:g}", dim=2,
        norm_at=lambda x: RandersNorm(I, drift(x)), chart=Chart.box(2), metric_fn=metric,
        berwald=False, description={"kind": "randers-drift", "amplitude": amplitude})


# ---------------------------------------------------------------------------
# spheres


def _complement_basis(c):
    m = c.shape[0]
    if np.allclose(c, np.eye(m)[-1]):
        return np.eye(m)[:, : m - 1]
    Q, _ = np.linalg.qr(np.column_stack([c, np.eye(m)]))
    return Q[:, 1:m]


def sphere(n: int, center=None, name=None) -> FinslerSpace:
    """Unit sphere S^n embedded in R^(n+1), stereographic chart centred at ``center``."""
    m = n + 1
    c = np.eye(m)[-1] if center is None else np.asarray(center, dtype=float)
    if c.shape != (m,) or not np.isclose(np.linalg.norm(c), 1.0):
        raise InputError(f"sphere centre must be a unit vector in R^{m}")
    c = c / np.linalg.norm(c)
    E = _complement_basis(c)

    def to_ambient(x):
        x = np.asarray(x, dtype=float)
        s = 1 + np.add.reduce(x * x, axis=-1, keepdims=True)
        return (2 - s) / s * c + 2 / s * (x @ E.T)

    def from_ambient(X):
        X = np.asarray(X, dtype=float)
        X = X / np.linalg.norm(X, axis=-1, keepdims=True)
        return (X @ E) / (1 + X @ c)[..., None]

    def push(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        s = 1 + np.add.reduce(x * x, axis=-1, keepdims=True)
        xy = np.add.reduce(x * y, axis=-1, keepdims=True)
        return 2 / s * (y @ E.T) - 4 * xy / s ** 2 * (c + x @ E.T)

    def pull(X, V):
        X, V = np.asarray(X, dtype=float), np.asarray(V, dtype=float)
        den = (1 + X @ c)[..., None]
        return (V @ E) / den - (X @ E) * (V @ c)[..., None] / den ** 2

    emb = Embedding(m, to_ambient, from_ambient, push, pull)

    def dphi(x):
        x = np.asarray(x, dtype=float)
        return -2 * x / (1 + np.add.reduce(x * x, axis=-1, keepdims=True))

    def metric(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return 2 * np.linalg.norm(y, axis=-1) / (1 + np.sum(x * x, axis=-1))

    def distance(x, z):
        X, Z = to_ambient(x), to_ambient(z)
        return float(2 * np.arctan2(np.linalg.norm(X - Z), np.linalg.norm(X + Z)))

    def geodesic(x0, y0, t):
        X0, V0 = to_ambient(x0), push(x0, y0)
        speed = np.linalg.norm(V0)
        st = (np.asarray(t, dtype=float) * speed)[..., None]
        return from_ambient(np.cos(st) * X0 + np.sin(st) * V0 / speed)

    def perpendicular(X):
        # deterministic choice shared with ``recenter`` for antipodal pairs
        e = np.eye(m)[int(np.argmin(np.abs(X)))]
        return e - (e @ X) * X

    def log(x, z):
        X, Z = to_ambient(x), to_ambient(z)
        W = Z - (X @ Z) * X
        if np.linalg.norm(W) < 1e-12:
            if X @ Z > 0:
                return np.zeros(n)
            W = perpendicular(X)
        return pull(X, distance(x, z) * W / np.linalg.norm(W))

    def sampler(rng, count):
        out = np.empty((0, n))
        while out.shape[0] < count:
            X = rng.standard_normal((count, m))
            x = from_ambient(X / np.linalg.norm(X, axis=1, keepdims=True))
            out = np.concatenate([out, x[chart.contains(x)]])
        return out[:count]

    def recenter(x, z):
        X, Z = to_ambient(x), to_ambient(z)
        mid = X + Z
        if np.linalg.norm(mid) < 1e-6:
            # antipodal pair: any unit vector orthogonal to X is a midpoint
            mid = perpendicular(X)
        local = sphere(n, mid / np.linalg.norm(mid), name=f"{space_name}@local")
        le = local.embedding
        to_local = SmoothMap("to-local", lambda p: le.from_ambient(to_ambient(p)),
                             lambda p, y: le.pull(to_ambient(p), push(p, y)))
        from_local = SmoothMap("from-local", lambda p: from_ambient(le.to_ambient(p)),
                               lambda p, y: pull(le.to_ambient(p), le.push(p, y)))
        return local, to_local, from_local

    chart = Chart.ball(n, SPHERE_CHART_RADIUS, scale=1.0)
    space_name = name or f"S{n}"
    return FinslerSpace(
        name=space_name, dim=n,
        norm_at=lambda x: EuclideanNorm((2 / (1 + np.dot(x, x))) ** 2 * np.eye(n)),
        chart=chart, metric_fn=metric, embedding=emb,
        connection_fn=lambda x: conformal_christoffel(dphi(x)),
        christoffel_fn=lambda x: conformal_christoffel(dphi(x)),
        spray_fn=lambda X, V: conformal_spray(dphi(X), np.asarray(V, dtype=float)),
        distance_fn=distance, geodesic_fn=geodesic, log_fn=log, recenter=recenter,
        cut_locus_fn=lambda x, z: distance(x, z) > np.pi - CUT_LOCUS_BAND,
        sampler=sampler, spray_key=("stereographic-sphere", n), reversible=True,
        berwald=True, riemannian=True,
        description={"kind": "sphere", "dim": n, "center": c.tolist()})


def antipode(space: FinslerSpace, x):
    emb = space.embedding
    return emb.from_ambient(-emb.to_ambient(x))


# ---------------------------------------------------------------------------
# hyperbolic plane


def hyperbolic_disk(name=None) -> FinslerSpace:
    """Poincare disk model of H^2 (curvature -1)."""

    def dphi(x):
        x = np.asarray(x, dtype=float)
        return 2 * x / (1 - np.add.reduce(x * x, axis=-1, keepdims=True))

    def metric(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return 2 * np.linalg.norm(y, axis=-1) / (1 - np.sum(x * x, axis=-1))

    def distance(x, z):
        a, b = complex(*x), complex(*z)
        return float(2 * np.arctanh(abs(b - a) / abs(1 - a.conjugate() * b)))

    return FinslerSpace(
        name=name or "H2", dim=2,
        norm_at=lambda x: EuclideanNorm((2 / (1 - np.dot(x, x))) ** 2 * np.eye(2)),
        chart=Chart.ball(2, 1.0, sample_radius=0.8), metric_fn=metric,
        connection_fn=lambda x: conformal_christoffel(dphi(x)),
        christoffel_fn=lambda x: conformal_christoffel(dphi(x)),
        spray_fn=lambda X, V: conformal_spray(dphi(X), np.asarray(V, dtype=float)),
        distance_fn=distance, sampler=_disk_sampler(0.8), reversible=True, berwald=True,
        riemannian=True, description={"kind": "hyperbolic-disk"})


def _disk_sampler(radius):
    def sample(rng, count):
        r = radius * np.sqrt(rng.uniform(0, 1, count))
        th = rng.uniform(0, 2 * np.pi, count)
        return np.column_stack([r * np.cos(th), r * np.sin(th)])
    return sample
