"""Named model spaces and isometries with expected Clifford verdicts.

Taxonomy tags follow the usual splitting of a symmetric Berwald space into
a flat (Minkowski) part, a compact-type part and a noncompact-type part;
products carry the tag ``product``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import InputError
from .isometries import (IsometryAction, antipodal, disk_mobius, disk_rotation, identity,
                         quaternion_left, rotation2d, rotation_z, translation)
from .models import euclidean_space, hyperbolic_disk, randers_drift_plane, randers_plane, sphere
from .norms import EuclideanNorm, MinkowskiNorm, RandersNorm, unit_directions
from .products import make_product, product_isometry, swap, swap_antipodal
from .spaces import FinslerSpace

TAGS = ("minkowski", "compact-type", "noncompact-type", "product")
HOPF_ANGLE = 0.7


# ---------------------------------------------------------------------------
# spaces

_SPACE_FACTORIES: dict[str, tuple[Callable[[], FinslerSpace], str, str]] = {
    "R1": (lambda: euclidean_space(1), "minkowski", "Euclidean line"),
    "R2": (lambda: euclidean_space(2), "minkowski", "Euclidean plane"),
    "R3": (lambda: euclidean_space(3), "minkowski", "Euclidean 3-space"),
    "R4": (lambda: euclidean_space(4), "minkowski", "Euclidean 4-space"),
    "randers-0.3": (lambda: randers_plane([0.3, 0.0]), "minkowski",
                    "flat Randers plane, drift (0.3, 0)"),
    "randers-0.5": (lambda: randers_plane([0.5, 0.0]), "minkowski",
                    "flat Randers plane, drift (0.5, 0)"),
    "randers-drift": (lambda: randers_drift_plane(0.3), "minkowski",
                      "Randers plane with drift (0.3 sin x1, 0); not Berwald, connection checks only"),
    "S2": (lambda: sphere(2), "compact-type", "unit 2-sphere, stereographic chart"),
    "S3": (lambda: sphere(3), "compact-type", "unit 3-sphere, stereographic chart"),
    "H2": (hyperbolic_disk, "noncompact-type", "hyperbolic plane, Poincare disk"),
    "S2xS2": (lambda: make_product([sphere(2), sphere(2)], name="S2xS2"), "product",
              "product of two unit 2-spheres"),
    "S3xRanders": (lambda: make_product([sphere(3), randers_plane([0.3, 0.0])],
                                        name="S3xRanders"), "product",
                   "unit 3-sphere times the flat Randers plane randers-0.3"),
}

# Where distance queries are trusted: every chart pair for flat spaces; on
# spheres the solver recentres on each pair, so the whole sphere minus the
# chart pole; on H2 the sampling disk of radius 0.8.
DISTANCE_DOMAINS = {
    "R1": "whole chart", "R2": "whole chart", "R3": "whole chart", "R4": "whole chart",
    "randers-0.3": "whole chart", "randers-0.5": "whole chart",
    "randers-drift": "energy minimisation only (no geodesic flow)",
    "S2": "all pairs; antipodal band certified by closed form",
    "S3": "all pairs; antipodal band certified by closed form",
    "H2": "disk of radius 0.8",
    "S2xS2": "all pairs; per-factor antipodal band certified by closed form",
    "S3xRanders": "all pairs",
}


@lru_cache(maxsize=None)
def get_space(space_id: str) -> FinslerSpace:
    try:
        return _SPACE_FACTORIES[space_id][0]()
    except KeyError:
        raise InputError(f"unknown catalog space {space_id!r}") from None


def space_tag(space_id: str) -> str:
    return _SPACE_FACTORIES[space_id][1]


def space_ids():
    return list(_SPACE_FACTORIES)


# ---------------------------------------------------------------------------
# isometry entries


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    space_id: str
    iso_factory: Callable[[FinslerSpace], IsometryAction]
    expected: str
    tag: str
    note: str = ""

    @property
    def space(self) -> FinslerSpace:
        return get_space(self.space_id)

    @property
    def isometry(self) -> IsometryAction:
        return self.iso_factory(self.space)

    def to_dict(self):
        iso = self.isometry
        return {"id": self.id, "space": self.space_id, "isometry": iso.to_dict(),
                "expected": self.expected, "tag": self.tag, "note": self.note}


def _hopf(space):
    return quaternion_left(space, [np.cos(HOPF_ANGLE), np.sin(HOPF_ANGLE), 0.0, 0.0])


_ENTRIES = [
    CatalogEntry("R2-identity", "R2", lambda s: identity(2), "clifford", "minkowski"),
    CatalogEntry("R2-translation", "R2", lambda s: translation([1.0, 0.5]), "clifford",
                 "minkowski"),
    CatalogEntry("R2-rotation", "R2", lambda s: rotation2d(0.5), "non-clifford", "minkowski",
                 "a nontrivial linear isometry of a flat space"),
    CatalogEntry("R3-translation", "R3", lambda s: translation([0.3, -0.2, 0.9]), "clifford",
                 "minkowski"),
    CatalogEntry("flat-randers-translation", "randers-0.5", lambda s: translation([1.0, 0.5]),
                 "clifford", "minkowski"),
    CatalogEntry("flat-randers-0.3-translation", "randers-0.3",
                 lambda s: translation([-0.4, 0.7]), "clifford", "minkowski"),
    CatalogEntry("S3-hopf", "S3", _hopf, "clifford", "compact-type",
                 f"left multiplication by q with Re q = cos {HOPF_ANGLE}"),
    CatalogEntry("S3-antipodal", "S3", antipodal, "clifford", "compact-type"),
    CatalogEntry("S2-antipodal", "S2", antipodal, "clifford", "compact-type"),
    CatalogEntry("S2-rot-z-0.785", "S2", lambda s: rotation_z(s, 0.785), "non-clifford",
                 "compact-type", "rotation fixes the poles and moves the equator"),
    CatalogEntry("H2-translation-along-geodesic", "H2", lambda s: disk_mobius(0.5),
                 "non-clifford", "noncompact-type", "hyperbolic translation along the real axis"),
    CatalogEntry("H2-rotation", "H2", lambda s: disk_rotation(0.5), "non-clifford",
                 "noncompact-type"),
    CatalogEntry("S2xS2-antipodal", "S2xS2",
                 lambda s: product_isometry(s, [antipodal(f) for f in s.factors]), "clifford",
                 "product"),
    CatalogEntry("S2xS2-swap", "S2xS2", swap, "non-clifford", "product"),
    CatalogEntry("S2xS2-swap-antipodal", "S2xS2", swap_antipodal, "non-clifford", "product",
                 "(x1, x2) -> (A x2, x1)"),
    CatalogEntry("S3xRanders-hopf-translation", "S3xRanders",
                 lambda s: product_isometry(s, [_hopf(s.factors[0]), translation([0.4, 0.2])]),
                 "clifford", "product"),
]

ENTRIES = {e.id: e for e in _ENTRIES}


def list_catalog():
    return list(_ENTRIES)


def get_entry(entry_id: str) -> CatalogEntry:
    try:
        return ENTRIES[entry_id]
    except KeyError:
        raise InputError(f"unknown catalog entry {entry_id!r}") from None


def catalog_listing() -> dict:
    return {
        "spaces": [{"id": k, "tag": v[1], "description": v[2],
                    "distance_domain": DISTANCE_DOMAINS[k]}
                   for k, v in _SPACE_FACTORIES.items()],
        "entries": [e.to_dict() for e in _ENTRIES],
    }


# ---------------------------------------------------------------------------
# symmetric Lie algebra condition


@dataclass(frozen=True)
class SymmetricLieAlgebraData:
    """``g = h + m`` with the action of h on m given by structure constants.

    ``bracket[a]`` is the matrix of ``u -> [h_a, u]`` on m, so
    ``[x, u] = sum_a x^a bracket[a] @ u``.
    """

    dim_h: int
    dim_m: int
    bracket: np.ndarray
    norm: MinkowskiNorm
    name: str = ""

    def __post_init__(self):
        B = np.asarray(self.bracket, dtype=float)
        if B.shape != (self.dim_h, self.dim_m, self.dim_m):
            raise InputError(f"bracket must have shape ({self.dim_h}, {self.dim_m}, {self.dim_m}),"
                             f" got {B.shape}")
        if not np.all(np.isfinite(B)):
            raise InputError("bracket entries must be finite")
        if self.norm.dim != self.dim_m:
            raise InputError("norm dimension must equal dim m")
        object.__setattr__(self, "bracket", B)

    def act(self, x, u):
        return np.einsum("a,aij,j->i", x, self.bracket, u)


def so2_on_plane(norm: MinkowskiNorm) -> SymmetricLieAlgebraData:
    return SymmetricLieAlgebraData(1, 2, np.array([[[0.0, -1.0], [1.0, 0.0]]]), norm,
                                   f"so(2)+R2/{norm.family}")


def abelian(norm: MinkowskiNorm, dim_h: int = 1) -> SymmetricLieAlgebraData:
    return SymmetricLieAlgebraData(dim_h, norm.dim, np.zeros((dim_h, norm.dim, norm.dim)), norm,
                                   f"abelian/{norm.family}")


@dataclass
class SymmetricCheckReport:
    passed: bool
    max_defect: float
    threshold: float
    samples: int

    def to_dict(self):
        return {"passed": self.passed, "max_defect": self.max_defect,
                "threshold": self.threshold, "samples": self.samples}


def minkowski_symmetric_check(data: SymmetricLieAlgebraData, samples: int = 200,
                              seed: int = 0) -> SymmetricCheckReport:
    """Max of ``|g_y([x,u],v) + g_y(u,[x,v]) + 2 C_y([x,y],u,v)|`` over samples.

    y, u, v are unit vectors of m and x a unit vector of h.
    """
    rng = np.random.default_rng(seed)
    norm = data.norm
    Y = unit_directions(rng, samples, data.dim_m)
    U = unit_directions(rng, samples, data.dim_m)
    W = unit_directions(rng, samples, data.dim_m)
    H = unit_directions(rng, samples, data.dim_h)
    worst = 0.0
    for y, u, v, x in zip(Y, U, W, H):
        g, C = norm.g(y), norm.cartan(y)
        val = (data.act(x, u) @ g @ v + u @ g @ data.act(x, v)
               + 2 * np.einsum("ijk,i,j,k->", C, data.act(x, y), u, v))
        worst = max(worst, abs(float(val)))
    thr = 1e-6 if norm.analytic else 1e-4
    return SymmetricCheckReport(worst < thr, worst, thr, samples)


def standard_lie_examples():
    """The three reference cases: Euclidean so(2), Randers so(2), abelian Randers."""
    return {
        "so2-euclidean": so2_on_plane(EuclideanNorm(np.eye(2))),
        "so2-randers": so2_on_plane(RandersNorm(np.eye(2), np.array([0.5, 0.0]))),
        "abelian-randers": abelian(RandersNorm(np.eye(2), np.array([0.5, 0.0]))),
    }
