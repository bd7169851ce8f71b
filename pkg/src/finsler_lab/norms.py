"""Minkowski norms on a real vector space.

Three families are provided: :class:`EuclideanNorm` (``sqrt(y.A.y)``),
:class:`RandersNorm` (``sqrt(y.A.y) + b.y``) and :class:`ProductNorm`, which
combines component norms on consecutive coordinate blocks.  Every norm
evaluates vectorised over leading axes and exposes its fundamental tensor
``g_y = 1/2 Hess(F^2)`` and Cartan tensor ``C_y = 1/4 D^3(F^2)``, either in
closed form or by central finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .errors import InputError, SlitBundleError

SLIT_GUARD = 1e-8
FD_STEP = 1e-5
# third derivatives lose ~eps/h^3 to roundoff; 1e-3 balances that against h^2 truncation
FD3_STEP = 1e-3
EQUALITY_SLACK = 1e-7
COLLINEAR_ANGLE = 1e-6

DERIVATIVE_MODES = ("analytic", "fd")


def _as_vector(y, dim=None, name="y"):
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise InputError(f"{name} must be a 1-d vector, got shape {y.shape}")
    if dim is not None and y.shape[0] != dim:
        raise InputError(f"{name} has length {y.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(y)):
        raise InputError(f"{name} has non-finite entries")
    return y


def _check_spd(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise InputError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(A).min() <= 0:
        raise InputError(f"{name} must be positive definite")
    return 0.5 * (A + A.T)


# ---------------------------------------------------------------------------
# finite-difference stencils (vectorised: one batched call per derivative)


def fd_gradient(f, y, h):
    n = y.shape[0]
    E = np.eye(n) * h
    vals = f(np.concatenate([y + E, y - E]))
    return (vals[:n] - vals[n:]) / (2 * h)


def fd_hessian(f, y, h):
    """Composition of two central differences; O(h^2) for mixed and pure entries."""
    n = y.shape[0]
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    signs = np.array([(1, 1), (1, -1), (-1, 1), (-1, -1)], dtype=float)
    pts = np.empty((len(pairs), 4, n))
    for p, (i, j) in enumerate(pairs):
        for s, (si, sj) in enumerate(signs):
            z = y.copy()
            z[i] += si * h
            z[j] += sj * h
            pts[p, s] = z
    vals = f(pts.reshape(-1, n)).reshape(len(pairs), 4)
    weights = signs[:, 0] * signs[:, 1]
    H = np.empty((n, n))
    for p, (i, j) in enumerate(pairs):
        H[i, j] = H[j, i] = vals[p] @ weights / (4 * h * h)
    return H


def fd_third(f, y, h):
    n = y.shape[0]
    triples = list(combinations_with_replacement(range(n), 3))
    signs = np.array([(a, b, c) for a in (1, -1) for b in (1, -1) for c in (1, -1)], dtype=float)
    pts = np.empty((len(triples), 8, n))
    for p, (i, j, k) in enumerate(triples):
        for s, (si, sj, sk) in enumerate(signs):
            z = y.copy()
            z[i] += si * h
            z[j] += sj * h
            z[k] += sk * h
            pts[p, s] = z
    vals = f(pts.reshape(-1, n)).reshape(len(triples), 8)
    weights = signs.prod(axis=1)
    T = np.empty((n, n, n))
    for p, (i, j, k) in enumerate(triples):
        v = vals[p] @ weights / (8 * h ** 3)
        for a, b, c in {(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)}:
            T[a, b, c] = v
    return T


# ---------------------------------------------------------------------------
# norm families


class MinkowskiNorm:
    """Base class.  Subclasses implement ``__call__`` and optionally the
    ``_analytic_*`` hooks; the public derivative methods fall back to finite
    differences when a hook is missing or ``derivative_mode == "fd"``."""

    family = "abstract"
    dim: int
    derivative_mode: str = "analytic"

    def __call__(self, y):
        raise NotImplementedError

    def evaluate(self, y) -> float:
        y = _as_vector(y, self.dim)
        return float(self(y))

    # hooks -----------------------------------------------------------
    def _analytic_gradient(self, y):
        return None

    def _analytic_g(self, y):
        return None

    def _analytic_cartan(self, y):
        return None

    # public derivatives ---------------------------------------------
    @property
    def analytic(self) -> bool:
        return self.derivative_mode == "analytic" and self._has_analytic()

    def _has_analytic(self) -> bool:
        return True

    def _guard(self, y, scale=1.0):
        y = _as_vector(y, self.dim)
        if np.linalg.norm(y) < SLIT_GUARD * scale:
            raise SlitBundleError(f"|y| = {np.linalg.norm(y):.3e} is inside the slit guard")
        return y

    def _sq(self, factor):
        return lambda Y: factor * self(Y) ** 2

    def gradient(self, y):
        """dF/dy^i at y != 0."""
        y = self._guard(y)
        if self.analytic:
            out = self._analytic_gradient(y)
            if out is not None:
                return out
        return fd_gradient(self, y, FD_STEP * max(1.0, np.linalg.norm(y)))

    def g(self, y):
        y = self._guard(y)
        if self.analytic:
            out = self._analytic_g(y)
            if out is not None:
                return out
        H = fd_hessian(self._sq(0.5), y, FD_STEP * max(1.0, np.linalg.norm(y)))
        return 0.5 * (H + H.T)

    def cartan(self, y):
        y = self._guard(y)
        if self.analytic:
            out = self._analytic_cartan(y)
            if out is not None:
                return out
        return fd_third(self._sq(0.25), y, FD3_STEP * max(1.0, np.linalg.norm(y)))

    def with_mode(self, mode: str) -> "MinkowskiNorm":
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class EuclideanNorm(MinkowskiNorm):
    A: np.ndarray
    derivative_mode: str = "analytic"
    family = "euclidean"

    def __post_init__(self):
        object.__setattr__(self, "A", _check_spd(self.A))
        _check_mode(self.derivative_mode)

    @property
    def dim(self):
        return self.A.shape[0]

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", y, self.A, y), 0.0))

    def _analytic_gradient(self, y):
        return self.A @ y / self(y)

    def _analytic_g(self, y):
        return self.A.copy()

    def _analytic_cartan(self, y):
        return np.zeros((self.dim,) * 3)

    def with_mode(self, mode):
        return EuclideanNorm(self.A, mode)

    def to_dict(self):
        return {"family": "euclidean", "dim": self.dim, "A": self.A.tolist(),
                "derivative_mode": self.derivative_mode}


@dataclass(frozen=True, eq=False)
class RandersNorm(MinkowskiNorm):
    """``F(y) = sqrt(y.A.y) + b.y``.

    The constructor does not insist on ``|b|_A < 1``: out-of-range drifts are
    representable so that :func:`validate_norm` can report them.  Use
    :attr:`drift_norm` to read the strong-convexity margin.
    """

    A: np.ndarray
    b: np.ndarray
    derivative_mode: str = "analytic"
    family = "randers"

    def __post_init__(self):
        A = _check_spd(self.A)
        b = _as_vector(self.b, A.shape[0], "b")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        _check_mode(self.derivative_mode)

    @property
    def dim(self):
        return self.A.shape[0]

    @property
    def drift_norm(self) -> float:
        return float(np.sqrt(self.b @ np.linalg.solve(self.A, self.b)))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        alpha = np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", y, self.A, y), 0.0))
        return alpha + y @ self.b

    def _parts(self, y):
        alpha = np.sqrt(y @ self.A @ y)
        ell = self.A @ y / alpha
        h = self.A - np.outer(ell, ell)
        return alpha, ell, h

    def _analytic_gradient(self, y):
        _, ell, _ = self._parts(y)
        return ell + self.b

    def _analytic_g(self, y):
        alpha, ell, h = self._parts(y)
        F = alpha + self.b @ y
        dF = ell + self.b
        g = (F / alpha) * h + np.outer(dF, dF)
        return 0.5 * (g + g.T)

    def _analytic_cartan(self, y):
        # C_ijk = 1/2 (F_ij F_k + F_jk F_i + F_ki F_j + F F_ijk), with F_ij = h/alpha
        # and F_ijk = -(h_ij l_k + h_jk l_i + h_ki l_j)/alpha^2
        alpha, ell, h = self._parts(y)
        F = alpha + self.b @ y
        dF = ell + self.b
        sym = lambda a, v: (np.einsum("ij,k->ijk", a, v) + np.einsum("jk,i->ijk", a, v)
                            + np.einsum("ki,j->ijk", a, v))
        return 0.5 * (sym(h, dF) / alpha - F * sym(h, ell) / alpha ** 2)

    def with_mode(self, mode):
        return RandersNorm(self.A, self.b, mode)

    def to_dict(self):
        return {"family": "randers", "dim": self.dim, "A": self.A.tolist(),
                "b": self.b.tolist(), "derivative_mode": self.derivative_mode}


PRODUCT_RULES = ("l2", "skewed")


@dataclass(frozen=True, eq=False)
class ProductNorm(MinkowskiNorm):
    """Norm on a direct sum of blocks.

    ``rule="l2"`` gives ``F = sqrt(sum F_i^2)``.  ``rule="skewed"`` adds
    ``coupling * sum_{i<j} F_i F_j`` under the square root; it exists as a
    negative control for block orthogonality and always uses finite
    differences.

    With the l2 rule the product is only C^1 where a non-quadratic component
    vanishes, so second and third derivatives are refused there.
    """

    components: tuple
    rule: str = "l2"
    coupling: float = 0.0
    derivative_mode: str = "analytic"
    family = "product"

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise InputError("product norm needs at least one component")
        for c in comps:
            if not isinstance(c, MinkowskiNorm):
                raise InputError("product components must be MinkowskiNorm instances")
        if self.rule not in PRODUCT_RULES:
            raise InputError(f"unknown product rule {self.rule!r}")
        object.__setattr__(self, "components", comps)
        _check_mode(self.derivative_mode)

    @property
    def dim(self):
        return sum(c.dim for c in self.components)

    @property
    def blocks(self):
        out, start = [], 0
        for c in self.components:
            out.append(slice(start, start + c.dim))
            start += c.dim
        return out

    def split(self, y):
        return [y[..., s] for s in self.blocks]

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        vals = [c(part) for c, part in zip(self.components, self.split(y))]
        sq = sum(v ** 2 for v in vals)
        if self.rule == "skewed":
            for i in range(len(vals)):
                for j in range(i + 1, len(vals)):
                    sq = sq + self.coupling * vals[i] * vals[j]
        return np.sqrt(np.maximum(sq, 0.0))

    def _has_analytic(self):
        return self.rule == "l2" and all(c.analytic for c in self.components)

    def _block_active(self, part, comp):
        if np.linalg.norm(part) >= SLIT_GUARD:
            return True
        if isinstance(comp, EuclideanNorm):
            return False
        raise SlitBundleError(
            f"product norm is not twice differentiable where its {comp.family} block vanishes")

    def grad_sq(self, y):
        """Gradient of F^2; defined everywhere for the l2 rule (each F_i^2 is C^1)."""
        y = _as_vector(y, self.dim)
        if not self.analytic:
            return fd_gradient(self._sq(1.0), y, FD_STEP * max(1.0, np.linalg.norm(y)))
        out = np.zeros(self.dim)
        for s, c in zip(self.blocks, self.components):
            part = y[s]
            if np.linalg.norm(part) >= SLIT_GUARD:
                out[s] = 2 * c(part) * c.gradient(part)
        return out

    def _analytic_gradient(self, y):
        return 0.5 * self.grad_sq(y) / self(y)

    def _analytic_g(self, y):
        g = np.zeros((self.dim, self.dim))
        for s, c in zip(self.blocks, self.components):
            part = y[s]
            g[s, s] = c.g(part) if self._block_active(part, c) else c.A
        return g

    def _analytic_cartan(self, y):
        C = np.zeros((self.dim,) * 3)
        for s, c in zip(self.blocks, self.components):
            part = y[s]
            if self._block_active(part, c):
                C[s, s, s] = c.cartan(part)
        return C

    def with_mode(self, mode):
        return ProductNorm(tuple(c.with_mode(mode) for c in self.components),
                           self.rule, self.coupling, mode)

    def to_dict(self):
        d = {"family": "product", "dim": self.dim,
             "components": [c.to_dict() for c in self.components],
             "rule": self.rule, "derivative_mode": self.derivative_mode}
        if self.rule == "skewed":
            d["coupling"] = self.coupling
        return d


def _check_mode(mode):
    if mode not in DERIVATIVE_MODES:
        raise InputError(f"derivative_mode must be one of {DERIVATIVE_MODES}, got {mode!r}")


def norm_from_dict(d: dict, path: str = "$") -> MinkowskiNorm:
    """Inverse of ``to_dict``.  Errors name the offending JSON field."""
    if not isinstance(d, dict):
        raise InputError(f"{path}: expected an object")
    family = d.get("family")
    mode = d.get("derivative_mode", "analytic")
    if mode not in DERIVATIVE_MODES:
        raise InputError(f"{path}.derivative_mode: must be one of {DERIVATIVE_MODES}")
    try:
        if family == "euclidean":
            A = _field_matrix(d, "A", path)
            norm = EuclideanNorm(A, mode)
        elif family == "randers":
            A = _field_matrix(d, "A", path)
            if "b" not in d:
                raise InputError(f"{path}.b: missing")
            norm = RandersNorm(A, np.asarray(d["b"], dtype=float), mode)
        elif family == "product":
            comps = d.get("components")
            if not isinstance(comps, list) or not comps:
                raise InputError(f"{path}.components: expected a non-empty list")
            parts = tuple(norm_from_dict(c, f"{path}.components[{i}]") for i, c in enumerate(comps))
            norm = ProductNorm(parts, d.get("rule", "l2"), float(d.get("coupling", 0.0)), mode)
        else:
            raise InputError(f"{path}.family: unknown family {family!r}")
    except InputError as exc:
        msg = str(exc)
        raise InputError(msg if msg.startswith(path) else f"{path}: {msg}") from None
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if "dim" in d and d["dim"] != norm.dim:
        raise InputError(f"{path}.dim: declared {d['dim']} but data has dimension {norm.dim}")
    return norm


def _field_matrix(d, key, path):
    if key not in d:
        raise InputError(f"{path}.{key}: missing")
    try:
        A = np.asarray(d[key], dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{path}.{key}: not a numeric matrix") from None
    if A.ndim != 2:
        raise InputError(f"{path}.{key}: expected a 2-d array")
    return A


# ---------------------------------------------------------------------------
# operations


def evaluate(norm: MinkowskiNorm, y) -> float:
    return norm.evaluate(y)


@dataclass(frozen=True)
class FundamentalTensor:
    base_direction: np.ndarray
    matrix: np.ndarray

    def __call__(self, u, v) -> float:
        return float(np.asarray(u) @ self.matrix @ np.asarray(v))


@dataclass(frozen=True)
class CartanTensor:
    base_direction: np.ndarray
    entries: np.ndarray

    def __call__(self, u, v, w) -> float:
        return float(np.einsum("ijk,i,j,k->", self.entries, u, v, w))

    def contract(self, y, slot: int = 0) -> np.ndarray:
        """Contract ``y`` into one slot; the result is an n x n matrix."""
        return np.tensordot(self.entries, np.asarray(y, dtype=float), axes=([slot], [0]))


def fundamental_tensor(norm: MinkowskiNorm, y) -> FundamentalTensor:
    y = _as_vector(y, norm.dim)
    return FundamentalTensor(y, norm.g(y))


def cartan_tensor(norm: MinkowskiNorm, y) -> CartanTensor:
    y = _as_vector(y, norm.dim)
    return CartanTensor(y, norm.cartan(y))


def collinearity_angle(w, y) -> float:
    """Angle between ``w`` and the ray through ``y``; zero vectors count as collinear."""
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    nw, ny = np.linalg.norm(w), np.linalg.norm(y)
    if nw == 0 or ny == 0:
        return 0.0
    cos = w @ y / (nw * ny)
    sin = np.linalg.norm(w / nw - cos * y / ny)
    return float(np.arctan2(sin, cos))


@dataclass(frozen=True)
class InequalityResult:
    holds: bool
    equality_flag: bool
    slack: float
    collinear: bool


def fundamental_inequality_check(norm: MinkowskiNorm, y, w, tol: float = 1e-9) -> InequalityResult:
    """Test ``F(w) >= w . grad F(y)``, with equality iff ``w = a*y`` for some ``a >= 0``."""
    y = norm._guard(y)
    w = _as_vector(w, norm.dim, "w")
    Fw = float(norm(w))
    rhs = float(w @ norm.gradient(y))
    slack = Fw - rhs
    scale = max(1.0, abs(Fw))
    collinear = collinearity_angle(w, y) < COLLINEAR_ANGLE
    return InequalityResult(
        holds=slack >= -tol * scale,
        equality_flag=abs(slack) <= EQUALITY_SLACK * scale and collinear,
        slack=slack,
        collinear=collinear,
    )


@dataclass
class CheckResult:
    passed: bool
    worst: float
    threshold: float
    detail: str = ""


@dataclass
class ValidityReport:
    passed: bool
    checks: dict = field(default_factory=dict)

    @property
    def failures(self):
        return [name for name, c in self.checks.items() if not c.passed]

    def to_dict(self):
        return {"passed": self.passed,
                "checks": {k: {"passed": c.passed, "worst": c.worst, "threshold": c.threshold,
                               "detail": c.detail} for k, c in self.checks.items()},
                "failures": self.failures}


def unit_directions(rng, count, dim):
    Y = rng.standard_normal((count, dim))
    return Y / np.linalg.norm(Y, axis=1, keepdims=True)


def validate_norm(norm: MinkowskiNorm, sample_count: int = 1000, seed: int = 0) -> ValidityReport:
    """Sample-based check of the Minkowski norm axioms.

    Positivity, positive homogeneity, positive-definiteness of ``g_y`` and
    the triangle inequality are each scanned over ``sample_count`` random
    directions; the report records the worst margin of every check.
    """
    if sample_count < 1:
        raise InputError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    U = unit_directions(rng, sample_count, norm.dim)
    V = unit_directions(rng, sample_count, norm.dim) * rng.uniform(0.1, 3.0, (sample_count, 1))
    lam = rng.uniform(0.0, 10.0, sample_count)
    lam[lam == 0] = 1.0
    F = norm(U)
    checks = {}

    checks["positivity"] = CheckResult(bool(F.min() > 0), float(F.min()), 0.0,
                                       f"min F on unit sphere at {U[F.argmin()].tolist()}")
    homog = np.abs(norm(U * lam[:, None]) - lam * F) / np.maximum(lam * np.abs(F), 1e-300)
    checks["homogeneity"] = CheckResult(bool(homog.max() <= 1e-12), float(homog.max()), 1e-12)

    eig = np.array([np.linalg.eigvalsh(norm.g(u)).min() for u in U])
    # where F <= 0 the Hessian of F^2 says nothing about convexity of F
    eig = np.where(F > 0, eig, np.minimum(eig, 0.0))
    k = int(eig.argmin())
    checks["hessian_positive"] = CheckResult(bool(eig.min() > 0), float(eig.min()), 0.0,
                                             f"min eigenvalue of g_y at y={U[k].tolist()}")

    tri = norm(U) + norm(V) - norm(U + V)
    scale = np.abs(norm(U)) + np.abs(norm(V))
    k = int(tri.argmin())
    checks["triangle"] = CheckResult(bool((tri >= -1e-12 * scale).all()), float(tri.min()), 0.0,
                                     f"worst pair u={U[k].tolist()}, v={V[k].tolist()}")
    return ValidityReport(all(c.passed for c in checks.values()), checks)
