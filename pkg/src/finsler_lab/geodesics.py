"""Geodesics of Berwald spaces, arc length and directed distance.

Geodesics solve ``x'' + Gamma(x)(x', x') = 0`` with fixed-step RK4.  The
directed distance uses, in order of preference, a closed-form provider,
multi-start shooting (damped Gauss-Newton on the endpoint map), and a
discrete energy minimisation over a polyline.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import minimize

from .connection import berwald_check, chern_coeffs
from .errors import ChartExitError, InputError, UnsupportedError
from .spaces import FinslerSpace

DEFAULT_STEPS = 1000
SHOOT_STEPS = 200
SHOOT_STARTS = 8
SHOOT_MAX_ITER = 200
SHOOT_TOL = 1e-10
ENERGY_NODES = 64
TIE_BAND = 1e-6
SHOOT_STALL = 5


@dataclass
class GeodesicPath:
    space_name: str
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    h: float
    integrator: str = "rk4"

    def __len__(self):
        return self.t.shape[0]

    @property
    def start(self):
        return self.x[0]

    @property
    def end(self):
        return self.x[-1]

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    def at(self, t):
        """Cubic Hermite interpolation of (x, v) at times ``t``."""
        if len(self) < 2:
            return np.broadcast_to(self.x[0], np.shape(t) + self.x.shape[1:]).copy()
        return CubicHermiteSpline(self.t, self.x, self.v, axis=0)(t)

    def velocity_at(self, t):
        if len(self) < 2:
            return np.broadcast_to(self.v[0], np.shape(t) + self.v.shape[1:]).copy()
        return CubicHermiteSpline(self.t, self.x, self.v, axis=0).derivative()(t)

    def mapped(self, smooth_map, space_name=None):
        """Image path under a smooth map (vectorised over samples)."""
        x = np.asarray(smooth_map.point_map(self.x), dtype=float)
        v = np.asarray(smooth_map.tangent_map(self.x, self.v), dtype=float)
        return GeodesicPath(space_name or self.space_name, self.t.copy(), x, v, self.h,
                            self.integrator)

    def to_csv(self, fh=None) -> str:
        """Columns ``t, x1..xn, v1..vn``."""
        buf = io.StringIO()
        n = self.x.shape[1]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)])
        for t, x, v in zip(self.t, self.x, self.v):
            w.writerow([repr(float(t))] + [repr(float(a)) for a in x] + [repr(float(a)) for a in v])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


# ---------------------------------------------------------------------------
# integration


def spray_for(space: FinslerSpace, x0=None):
    """Return a vectorised ``(X, V) -> Gamma(x)(v, v)`` or raise UnsupportedError."""
    if space.spray_fn is not None:
        return space.spray_fn
    if space.connection_fn is not None:
        return lambda X, V: np.einsum("...ijk,...j,...k->...i",
                                      _batched(space.connection_fn, X, space.dim), V, V)
    if space.berwald is False:
        raise UnsupportedError(f"{space.name} is not Berwald; geodesics are out of scope")
    if x0 is not None and not berwald_check(space, x0).is_berwald_at_x:
        raise UnsupportedError(f"{space.name} fails the Berwald check at {np.asarray(x0).tolist()}")

    def numeric(X, V):
        X, V = np.asarray(X, float), np.asarray(V, float)
        flatX, flatV = X.reshape(-1, space.dim), V.reshape(-1, space.dim)
        out = np.array([np.einsum("ijk,j,k->i", chern_coeffs(space, a, b), b, b)
                        if np.linalg.norm(b) > 0 else np.zeros(space.dim)
                        for a, b in zip(flatX, flatV)])
        return out.reshape(V.shape)

    return numeric


def _batched(fn, X, n):
    X = np.asarray(X, dtype=float)
    flat = X.reshape(-1, n)
    return np.array([fn(x) for x in flat]).reshape(X.shape[:-1] + (n, n, n))


def _rk4_step(spray, x, v, h):
    a1 = -spray(x, v)
    x2, v2 = x + 0.5 * h * v, v + 0.5 * h * a1
    a2 = -spray(x2, v2)
    x3, v3 = x + 0.5 * h * v2, v + 0.5 * h * a2
    a3 = -spray(x3, v3)
    x4, v4 = x + h * v3, v + h * a3
    a4 = -spray(x4, v4)
    return (x + h / 6 * (v + 2 * v2 + 2 * v3 + v4),
            v + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4))


def integrate_geodesic(space: FinslerSpace, x0, y0, t_end: float, h: Optional[float] = None,
                       spray=None) -> GeodesicPath:
    """Fixed-step RK4 geodesic from ``x0`` with initial velocity ``y0``.

    ``h`` defaults to ``1e-3 * t_end``.  Leaving the chart raises
    :class:`ChartExitError` carrying the partial path.
    """
    x0 = space.check_point(x0, "x0")
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (space.dim,) or np.linalg.norm(y0) == 0:
        raise InputError("y0 must be a nonzero vector of the space dimension")
    if t_end <= 0:
        raise InputError("t_end must be positive")
    spray = spray or spray_for(space, x0)
    steps = DEFAULT_STEPS if h is None else max(1, int(round(t_end / h)))
    h = t_end / steps
    xs = np.empty((steps + 1, space.dim))
    vs = np.empty_like(xs)
    xs[0], vs[0] = x0, y0
    x, v = x0, y0
    for i in range(steps):
        x, v = _rk4_step(spray, x, v, h)
        if not space.chart.contains(x):
            partial = GeodesicPath(space.name, h * np.arange(i + 1), xs[: i + 1].copy(),
                                   vs[: i + 1].copy(), h)
            raise ChartExitError(f"geodesic left the chart of {space.name} at t={(i + 1) * h:.6g}",
                                 partial)
        xs[i + 1], vs[i + 1] = x, v
    return GeodesicPath(space.name, h * np.arange(steps + 1), xs, vs, h)


def arc_length(space: FinslerSpace, path: GeodesicPath) -> float:
    """Composite Simpson quadrature of ``F(x(t), x'(t))``."""
    if len(path) < 2:
        return 0.0
    return float(simpson(space.F(path.x, path.v), x=path.t))


# ---------------------------------------------------------------------------
# distance


@dataclass
class DistanceResult:
    source: np.ndarray
    target: np.ndarray
    value: float
    method: str
    certified: bool
    path: Optional[GeodesicPath] = None
    detail: dict = field(default_factory=dict)

    def to_dict(self, with_path=False):
        d = {"from": self.source.tolist(), "to": self.target.tolist(), "value": self.value,
             "method": self.method, "certified": self.certified, "detail": self.detail}
        if with_path and self.path is not None:
            d["path"] = {"t": self.path.t.tolist(), "x": self.path.x.tolist(),
                         "v": self.path.v.tolist()}
        return d


def _localise(space, x, z):
    if space.recenter is None:
        return space, x, z, None
    local, to_local, from_local = space.recenter(x, z)
    return local, to_local(x), to_local(z), from_local


def _finish(space, x, z, value, method, certified, path, from_local, detail):
    if path is not None and from_local is not None:
        path = path.mapped(from_local, space.name)
    return DistanceResult(x, z, float(value), method, certified, path, detail)


def shooting_distance(space: FinslerSpace, x, z, seed: int = 0, starts: int = SHOOT_STARTS,
                      max_iter: int = SHOOT_MAX_ITER, steps: int = SHOOT_STEPS) -> DistanceResult:
    """Multi-start shooting on the endpoint map ``v -> exp_x(v)``.

    Start 0 is the chart chord ``z - x``; starts 1..``starts`` are seeded
    directions uniform on the indicatrix, scaled to the chord's F-length.
    Each start runs damped Gauss-Newton with a forward-difference Jacobian;
    the shortest converged geodesic wins (ties within 1e-6 go to the lower
    start index).
    """
    return shooting_distances(space, [x], [z], seed, starts, max_iter, steps)[0]


@dataclass
class _Problem:
    x: np.ndarray
    z: np.ndarray
    local: FinslerSpace
    xl: np.ndarray
    zl: np.ndarray
    from_local: object
    V: np.ndarray
    scale: float
    tol: float


def _prepare(space, x, z, seed, starts):
    x = space.check_point(x)
    z = space.check_point(z, "z")
    if np.linalg.norm(z - x) == 0:
        return DistanceResult(x, z, 0.0, "shooting", True,
                              GeodesicPath(space.name, np.zeros(1), x[None],
                                           np.zeros((1, space.dim)), 0.0))
    local, xl, zl, from_local = _localise(space, x, z)
    chord = zl - xl
    chord_len = float(local.F(xl, chord))
    if space.cut_locus_fn is not None and space.cut_locus_fn(x, z):
        # conjugate endpoints: the closed form is the certificate
        value = space.distance_fn(x, z)
        V = local.log_fn(xl, zl) if local.log_fn is not None else chord * (value / chord_len)
        path = integrate_geodesic(local, xl, V, 1.0)
        return _finish(space, x, z, value, "closed-form", True, path, from_local,
                       {"reason": "cut locus"})
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((starts, space.dim))
    U = U / np.asarray(local.F(np.broadcast_to(xl, U.shape), U))[:, None]
    V = np.vstack([chord, U * chord_len])
    return _Problem(x, z, local, xl, zl, from_local, V, float(np.linalg.norm(chord)),
                    SHOOT_TOL * (1 + np.linalg.norm(zl)))


def _batch_endpoints(chart, spray, X0, V0, steps):
    """Integrate geodesics with per-row initial data over [0, 1]; returns (X1, ok)."""
    h = 1.0 / steps
    x, v = X0.copy(), V0.copy()
    ok = np.ones(V0.shape[0], dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(steps):
            x, v = _rk4_step(spray, x, v, h)
            ok &= chart.contains(x)
            if not ok.any():
                break
            # freeze escaped trajectories so they cannot overflow
            x[~ok] = X0[~ok]
            v[~ok] = 0.0
    return x, ok


def _batch_paths(spray, X0, V0, steps=DEFAULT_STEPS):
    h = 1.0 / steps
    xs = np.empty((steps + 1,) + X0.shape)
    vs = np.empty_like(xs)
    xs[0], vs[0] = X0, V0
    x, v = X0, V0
    for i in range(steps):
        x, v = _rk4_step(spray, x, v, h)
        xs[i + 1], vs[i + 1] = x, v
    return xs, vs


def _newton_group(problems, spray, chart, steps, max_iter):
    """Damped Gauss-Newton for every (problem, start) of a group in one batch."""
    n = problems[0].local.dim
    S = problems[0].V.shape[0]
    P = len(problems)
    V = np.stack([p.V for p in problems])
    X0 = np.stack([p.xl for p in problems])
    Z = np.stack([p.zl for p in problems])
    status = np.zeros((P, S), dtype=int)  # 0 active, 1 converged, -1 failed
    best_res = np.full((P, S), np.inf)
    stall = np.zeros((P, S), dtype=int)
    iters = np.zeros(P, dtype=int)
    eye = np.eye(n)
    for _ in range(max_iter):
        act = np.argwhere(status == 0)
        if act.size == 0:
            break
        iters[np.unique(act[:, 0])] += 1
        Vs = V[act[:, 0], act[:, 1]]
        eps = 1e-7 * np.maximum(1.0, np.linalg.norm(Vs, axis=1))
        batch = np.concatenate([Vs[:, None, :], Vs[:, None, :] + eps[:, None, None] * eye],
                               axis=1).reshape(-1, n)
        origin = np.repeat(X0[act[:, 0]], n + 1, axis=0)
        X1, ok = _batch_endpoints(chart, spray, origin, batch, steps)
        X1 = X1.reshape(-1, n + 1, n)
        ok = ok.reshape(-1, n + 1).all(axis=1)
        for a, (p, s) in enumerate(act):
            if not ok[a]:
                status[p, s] = -1
                continue
            r = X1[a, 0] - Z[p]
            rn = np.linalg.norm(r)
            if rn < problems[p].tol:
                status[p, s] = 1
                continue
            stall[p, s] = 0 if rn < 0.5 * best_res[p, s] else stall[p, s] + 1
            best_res[p, s] = min(best_res[p, s], rn)
            if stall[p, s] > SHOOT_STALL or rn > 1e3 * (1 + problems[p].scale):
                status[p, s] = -1
                continue
            J = (X1[a, 1:] - X1[a, 0]).T / eps[a]
            step = np.linalg.lstsq(J, -r, rcond=1e-10)[0]
            cap = 0.5 * max(np.linalg.norm(Vs[a]), problems[p].scale)
            sn = np.linalg.norm(step)
            if sn > cap:
                step *= cap / sn
            V[p, s] = Vs[a] + step
    return V, status, iters


def shooting_distances(space: FinslerSpace, X, Z, seed: int = 0, starts: int = SHOOT_STARTS,
                       max_iter: int = SHOOT_MAX_ITER, steps: int = SHOOT_STEPS) -> list:
    """Batched form of :func:`shooting_distance` for many pairs ``(X[i], Z[i])``.

    Pairs whose local charts carry the same ``spray_key`` share one RK4
    batch; the result for each pair is identical to the single-pair call.
    """
    out = [_prepare(space, x, z, seed, starts) for x, z in zip(X, Z)]
    groups = {}
    for i, item in enumerate(out):
        if isinstance(item, _Problem):
            key = item.local.spray_key
            if key is None:
                key = ("object", id(item.local))
            groups.setdefault(key, []).append(i)
    for members in groups.values():
        probs = [out[i] for i in members]
        first = probs[0]
        spray = spray_for(first.local, first.xl)
        V, status, iters = _newton_group(probs, spray, first.local.chart, steps, max_iter)
        winners = {}
        for a, (i, p) in enumerate(zip(members, probs)):
            conv = np.flatnonzero(status[a] == 1)
            detail = {"starts": int(V.shape[1]), "converged": int(conv.size),
                      "iterations": int(iters[a])}
            if conv.size == 0:
                out[i] = _finish(space, p.x, p.z, float(p.local.F(p.xl, p.zl - p.xl)),
                                 "shooting", False, None, p.from_local, detail)
                continue
            values = np.asarray(p.local.F(np.broadcast_to(p.xl, (conv.size, p.xl.size)),
                                          V[a, conv]))
            best = _first_minimum(values)
            detail["start"] = int(conv[best])
            winners[i] = (a, float(values[best]), V[a, conv[best]], detail)
        if not winners:
            continue
        keys = list(winners)
        X0 = np.stack([out[i].xl for i in keys])
        V0 = np.stack([winners[i][2] for i in keys])
        xs, vs = _batch_paths(spray, X0, V0)
        t = np.linspace(0.0, 1.0, xs.shape[0])
        for b, i in enumerate(keys):
            p, (_, value, _, detail) = out[i], winners[i]
            path = GeodesicPath(p.local.name, t, xs[:, b].copy(), vs[:, b].copy(), t[1])
            inside = bool(p.local.chart.contains(path.x).all())
            detail["endpoint_error"] = float(np.linalg.norm(path.end - p.zl))
            out[i] = _finish(space, p.x, p.z, value, "shooting", inside, path, p.from_local,
                             detail)
    return out


def _first_minimum(values):
    values = np.asarray(values, dtype=float)
    lo = values.min()
    return int(np.flatnonzero(values <= lo + TIE_BAND)[0])


def energy_distance(space: FinslerSpace, x, z, nodes: int = ENERGY_NODES,
                    max_iter: int = 5000) -> DistanceResult:
    """Discrete geodesic by minimising ``sum F(x_i, dx_i)^2 / dt`` over a polyline.

    ``nodes`` is the number of segments.  Interior nodes are optimised with
    L-BFGS-B inside the chart's bounding box; the gradient is assembled from
    per-segment energies perturbing even and odd nodes separately, so each
    segment sees exactly one moving endpoint.
    """
    x = space.check_point(x)
    z = space.check_point(z, "z")
    if np.linalg.norm(z - x) == 0:
        return DistanceResult(x, z, 0.0, "energy-min", True, None)
    local, xl, zl, from_local = _localise(space, x, z)
    n, k = space.dim, nodes
    dt = 1.0 / k
    s = np.linspace(0.0, 1.0, k + 1)[:, None]
    P0 = (1 - s) * xl + s * zl

    def seg_energy(P):
        D = P[1:] - P[:-1]
        return np.asarray(local.F(0.5 * (P[1:] + P[:-1]), D)) ** 2 / dt

    def assemble(flat):
        P = np.empty((k + 1, n))
        P[0], P[-1] = xl, zl
        P[1:-1] = flat.reshape(k - 1, n)
        return P

    h = 1e-6 * local.chart.scale

    def fun(flat):
        P = assemble(flat)
        e = seg_energy(P)
        grad = np.zeros((k + 1, n))
        for color in (0, 1):
            nodes_c = np.arange(1, k)
            nodes_c = nodes_c[nodes_c % 2 == color]
            for d in range(n):
                Pp, Pm = P.copy(), P.copy()
                Pp[nodes_c, d] += h
                Pm[nodes_c, d] -= h
                de = (seg_energy(Pp) - seg_energy(Pm)) / (2 * h)
                grad[nodes_c, d] = de[nodes_c - 1] + de[nodes_c]
        return float(e.sum()), grad[1:-1].ravel()

    lo = np.tile(local.chart.lower, k - 1)
    hi = np.tile(local.chart.upper, k - 1)
    res = minimize(fun, P0[1:-1].ravel(), jac=True, method="L-BFGS-B",
                   bounds=list(zip(lo, hi)), options={"maxiter": max_iter, "ftol": 1e-15,
                                                      "gtol": 1e-10})
    P = assemble(res.x)
    D = P[1:] - P[:-1]
    F0 = np.asarray(local.F(P[:-1], D))
    Fm = np.asarray(local.F(0.5 * (P[1:] + P[:-1]), D))
    F1 = np.asarray(local.F(P[1:], D))
    value = float(np.sum(F0 + 4 * Fm + F1) / 6)
    t = s[:, 0]
    path = GeodesicPath(local.name, t, P, np.gradient(P, t, axis=0), dt, "energy-polyline")
    certified = bool(res.success) and bool(local.chart.contains(P).all())
    return _finish(space, x, z, value, "energy-min", certified, path, from_local,
                   {"iterations": int(res.nit), "energy": float(res.fun), "nodes": k})


def _closed_form(space, x, z):
    return DistanceResult(x, z, float(space.distance_fn(x, z)), "closed-form", True, None)


def geodesics_supported(space: FinslerSpace) -> bool:
    return (space.spray_fn is not None or space.connection_fn is not None
            or space.berwald is not False)


def distance(space: FinslerSpace, x, z, method: str = "auto", seed: int = 0) -> DistanceResult:
    """Directed distance d(x, z).

    ``method`` is one of ``auto``, ``closed-form``, ``shooting``,
    ``energy-min``.  ``auto`` prefers a closed form, then shooting, then the
    energy fallback, and returns the smallest certified value found.
    """
    x = space.check_point(x)
    z = space.check_point(z, "z")
    if method == "closed-form":
        if space.distance_fn is None:
            raise UnsupportedError(f"{space.name} has no closed-form distance")
        return _closed_form(space, x, z)
    if method == "shooting":
        return shooting_distance(space, x, z, seed=seed)
    if method == "energy-min":
        return energy_distance(space, x, z)
    if method != "auto":
        raise InputError(f"unknown distance method {method!r}")
    if space.distance_fn is not None:
        return _closed_form(space, x, z)
    results = []
    if geodesics_supported(space):
        try:
            results.append(shooting_distance(space, x, z, seed=seed))
        except UnsupportedError:
            pass
    if not any(r.certified for r in results):
        results.append(energy_distance(space, x, z))
    pool = [r for r in results if r.certified] or results
    return pool[_first_minimum([r.value for r in pool])]


def distances(space: FinslerSpace, X, Z, method: str = "auto", seed: int = 0) -> list:
    """:func:`distance` over many pairs, batching the shooting solves."""
    X, Z = list(X), list(Z)
    if method == "shooting" or (method == "auto" and space.distance_fn is None
                                and geodesics_supported(space)):
        try:
            out = shooting_distances(space, X, Z, seed=seed)
        except UnsupportedError:
            if method == "shooting":
                raise
            out = [None] * len(X)
        if method == "auto":
            for i, r in enumerate(out):
                if r is None or not r.certified:
                    alt = energy_distance(space, X[i], Z[i])
                    pool = [c for c in (r, alt) if c is not None]
                    pool = [c for c in pool if c.certified] or pool
                    out[i] = pool[_first_minimum([c.value for c in pool])]
        return out
    return [distance(space, x, z, method=method, seed=seed) for x, z in zip(X, Z)]


def minimality_check(space: FinslerSpace, path: GeodesicPath, tol: float = 1e-6,
                     method: str = "auto") -> bool:
    if len(path) < 2:
        return True
    d = distance(space, path.start, path.end, method=method)
    return arc_length(space, path) <= d.value + tol
