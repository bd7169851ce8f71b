"""Chart-based Finsler spaces and smooth maps between charts."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InputError
from .norms import MinkowskiNorm


@dataclass(frozen=True)
class Chart:
    """Coordinate domain: a box, optionally intersected with an open ball about 0.

    ``sample_lower``/``sample_upper`` bound the region used for uniform point
    sampling; ``scale`` is the characteristic length used to size
    finite-difference steps in x.
    """

    lower: np.ndarray
    upper: np.ndarray
    radius: float = np.inf
    sample_lower: Optional[np.ndarray] = None
    sample_upper: Optional[np.ndarray] = None
    scale: float = 1.0

    @classmethod
    def box(cls, dim, half_width=10.0, sample_half_width=2.0, scale=1.0):
        hw = np.full(dim, float(half_width))
        sw = np.full(dim, float(sample_half_width))
        return cls(-hw, hw, np.inf, -sw, sw, scale)

    @classmethod
    def ball(cls, dim, radius, sample_radius=None, scale=1.0):
        r = np.full(dim, float(radius))
        s = np.full(dim, float(sample_radius if sample_radius is not None else radius))
        return cls(-r, r, float(radius), -s, s, scale)

    @property
    def dim(self):
        return self.lower.shape[0]

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.all((x > self.lower) & (x < self.upper), axis=-1)
        if np.isfinite(self.radius):
            inside &= np.linalg.norm(x, axis=-1) < self.radius
        return inside & np.all(np.isfinite(x), axis=-1)

    def sample(self, rng, count):
        lo = self.sample_lower if self.sample_lower is not None else self.lower
        hi = self.sample_upper if self.sample_upper is not None else self.upper
        out = np.empty((0, self.dim))
        while out.shape[0] < count:
            X = rng.uniform(lo, hi, (count, self.dim))
            out = np.concatenate([out, X[self.contains(X)]])
        return out[:count]


class ProductChart(Chart):
    """Cartesian product of factor charts; membership is checked per factor."""

    def __init__(self, charts):
        charts = tuple(charts)
        cat = lambda attr: np.concatenate([
            getattr(c, attr) if getattr(c, attr) is not None else getattr(c, attr.replace("sample_", ""))
            for c in charts])
        super().__init__(cat("lower"), cat("upper"), np.inf, cat("sample_lower"),
                         cat("sample_upper"), max(c.scale for c in charts))
        blocks, start = [], 0
        for c in charts:
            blocks.append(slice(start, start + c.dim))
            start += c.dim
        object.__setattr__(self, "charts", charts)
        object.__setattr__(self, "blocks", tuple(blocks))

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.ones(x.shape[:-1], dtype=bool)
        for c, s in zip(self.charts, self.blocks):
            inside &= c.contains(x[..., s])
        return inside

    def sample(self, rng, count):
        return np.concatenate([c.sample(rng, count) for c in self.charts], axis=-1)


@dataclass(frozen=True)
class Embedding:
    ambient_dim: int
    to_ambient: Callable
    from_ambient: Callable
    push: Callable  # (x, y) -> ambient tangent vector
    pull: Callable  # (X, V) -> chart tangent vector


@dataclass(frozen=True)
class SmoothMap:
    """Point map with its differential ``(x, y) -> d(map)_x(y)``.

    Both callables must accept stacked inputs (leading batch axes).
    """

    name: str
    point_map: Callable
    tangent_map: Callable

    def __call__(self, x):
        return self.point_map(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class FinslerSpace:
    """A Finsler metric on a single chart.

    Only ``name``, ``dim``, ``norm_at`` and ``chart`` are required; the rest
    are optional closed-form providers.  ``connection_fn(x)`` returns the
    Chern coefficients of a Berwald space (y-independent),
    ``christoffel_fn(x)`` the formal Christoffel symbols when they are
    y-independent (Riemannian case), ``spray_fn(X, V)`` the contraction
    ``Gamma(x)(v, v)`` vectorised over leading axes.  ``log_fn(x, z)`` gives
    the initial velocity of a minimal geodesic reaching z at t = 1.
    Spaces sharing a ``spray_key`` have the same chart and the same spray in
    coordinates, which lets solvers batch geodesics across such spaces.
    """

    name: str
    dim: int
    norm_at: Callable[[np.ndarray], MinkowskiNorm]
    chart: Chart
    metric_fn: Optional[Callable] = None
    embedding: Optional[Embedding] = None
    connection_fn: Optional[Callable] = None
    christoffel_fn: Optional[Callable] = None
    spray_fn: Optional[Callable] = None
    distance_fn: Optional[Callable] = None
    geodesic_fn: Optional[Callable] = None
    log_fn: Optional[Callable] = None
    recenter: Optional[Callable] = None
    cut_locus_fn: Optional[Callable] = None
    sampler: Optional[Callable] = None
    spray_key: Optional[tuple] = None
    reversible: bool = False
    berwald: Optional[bool] = None
    riemannian: bool = False
    description: dict = field(default_factory=dict)

    @property
    def connection_mode(self) -> str:
        return "closed-form" if self.connection_fn is not None else "numeric"

    def F(self, x, y):
        """Metric value, vectorised over matching leading axes of x and y."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.metric_fn is not None:
            return self.metric_fn(x, y)
        if x.ndim == 1 and y.ndim == 1:
            return float(self.norm_at(x)(y))
        X, Y = np.broadcast_arrays(x, y)
        flatX, flatY = X.reshape(-1, self.dim), Y.reshape(-1, self.dim)
        out = np.array([self.norm_at(a)(b) for a, b in zip(flatX, flatY)])
        return out.reshape(X.shape[:-1])

    def check_point(self, x, name="x"):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise InputError(f"{name} must have shape ({self.dim},), got {x.shape}")
        if not self.chart.contains(x):
            raise InputError(f"{name}={x.tolist()} lies outside the chart of {self.name}")
        return x

    def sample_points(self, rng, count):
        if self.sampler is not None:
            return self.sampler(rng, count)
        return self.chart.sample(rng, count)
