"""Formal Christoffel symbols, nonlinear connection and Chern connection in a chart.

Index convention: ``gamma[i, j, k]`` is gamma^i_jk, ``N[i, j]`` is N^i_j and
``Gamma[l, j, k]`` is Gamma^l_jk.  The Cartan-type tensor ``A_ijk`` entering
the Chern formula is taken as ``F * C_ijk``, so ``A / F`` is just ``C``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import FinslerLabError, UnsupportedError
from .spaces import FinslerSpace

X_STEP = 1e-5
MODES = ("numeric", "closed-form", "auto")


@dataclass(frozen=True)
class ConnectionCoefficients:
    x: np.ndarray
    y: np.ndarray
    gamma: np.ndarray
    N: np.ndarray
    Gamma: np.ndarray

    def to_dict(self):
        return {"x": self.x.tolist(), "y": self.y.tolist(), "gamma": self.gamma.tolist(),
                "N": self.N.tolist(), "Gamma": self.Gamma.tolist()}


def _prepare(space, x, y):
    x = space.check_point(x)
    norm = space.norm_at(x)
    y = norm._guard(y)
    return x, y, norm


def _inverse(g):
    try:
        return np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise FinslerLabError(f"singular fundamental tensor: {exc}") from None


def metric_x_derivative(space: FinslerSpace, x, y):
    """``dg[k, i, j] = d g_ij / d x^k`` at fixed y, by central differences."""
    h = X_STEP * space.chart.scale
    n = space.dim
    dg = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        dg[k] = (space.norm_at(x + e).g(y) - space.norm_at(x - e).g(y)) / (2 * h)
    return dg


def _resolve(space, mode, provider):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "auto":
        return "closed-form" if provider is not None else "numeric"
    if mode == "closed-form" and provider is None:
        raise UnsupportedError(f"{space.name} has no closed-form provider")
    return mode


def christoffel_formal(space: FinslerSpace, x, y, mode: str = "numeric") -> np.ndarray:
    x, y, norm = _prepare(space, x, y)
    if _resolve(space, mode, space.christoffel_fn) == "closed-form":
        return np.asarray(space.christoffel_fn(x), dtype=float)
    ginv = _inverse(norm.g(y))
    dg = metric_x_derivative(space, x, y)
    lower = 0.5 * (np.einsum("ksj->sjk", dg) - dg + np.einsum("jks->sjk", dg))
    return np.einsum("is,sjk->ijk", ginv, lower)


def _nonlinear(gamma, Cup, y):
    Gyy = np.einsum("krs,r,s->k", gamma, y, y)
    return np.einsum("ijk,k->ij", gamma, y) - np.einsum("ijk,k->ij", Cup, Gyy)


def nonlinear_coeffs(space: FinslerSpace, x, y, mode: str = "numeric") -> np.ndarray:
    x, y, norm = _prepare(space, x, y)
    gamma = christoffel_formal(space, x, y, mode)
    Cup = np.einsum("is,sjk->ijk", _inverse(norm.g(y)), norm.cartan(y))
    return _nonlinear(gamma, Cup, y)


def _chern(gamma, ginv, C, N):
    # C[i,j,s] N[s,k] - C[j,k,s] N[s,i] + C[k,i,s] N[s,j]
    bracket = (np.einsum("ijs,sk->ijk", C, N) - np.einsum("jks,si->ijk", C, N)
               + np.einsum("kis,sj->ijk", C, N))
    return gamma - np.einsum("li,ijk->ljk", ginv, bracket)


def chern_coeffs(space: FinslerSpace, x, y, mode: str = "numeric") -> np.ndarray:
    x, y, norm = _prepare(space, x, y)
    if _resolve(space, mode, space.connection_fn) == "closed-form":
        return np.asarray(space.connection_fn(x), dtype=float)
    return connection_coefficients(space, x, y).Gamma


def connection_coefficients(space: FinslerSpace, x, y) -> ConnectionCoefficients:
    """gamma, N and Gamma at (x, y), all computed numerically from the metric."""
    x, y, norm = _prepare(space, x, y)
    g = norm.g(y)
    ginv = _inverse(g)
    C = norm.cartan(y)
    gamma = christoffel_formal(space, x, y)
    N = _nonlinear(gamma, np.einsum("is,sjk->ijk", ginv, C), y)
    return ConnectionCoefficients(x, y, gamma, N, _chern(gamma, ginv, C, N))


@dataclass(frozen=True)
class BerwaldReport:
    is_berwald_at_x: bool
    max_deviation: float
    tolerance: float
    directions: int


def berwald_check(space: FinslerSpace, x, direction_samples: int = 10, seed: int = 0,
                  tol: float | None = None, mode: str = "numeric") -> BerwaldReport:
    """Compare Chern coefficients at ``x`` across random directions.

    Berwald at x iff the maximum pairwise entrywise deviation stays below
    ``tol`` (default 1e-6 for closed-form providers, 1e-4 numerically).
    """
    x = space.check_point(x)
    mode = _resolve(space, mode, space.connection_fn)
    if tol is None:
        tol = 1e-6 if mode == "closed-form" else 1e-4
    rng = np.random.default_rng(seed)
    Y = rng.standard_normal((max(direction_samples, 2), space.dim))
    Gammas = [chern_coeffs(space, x, y, mode) for y in Y]
    dev = max(float(np.abs(a - b).max()) for a, b in combinations(Gammas, 2))
    return BerwaldReport(dev < tol, dev, tol, len(Gammas))
