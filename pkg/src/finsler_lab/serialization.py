"""Space and isometry descriptions: JSON objects, files and short string specs.

Space JSON (``kind`` selects the family)::

    {"kind": "euclidean", "dim": 3}                       optional "A"
    {"kind": "minkowski", "norm": {<norm JSON>}}
    {"kind": "randers-plane", "b": [0.3, 0], "A": [[1, 0], [0, 1]]}
    {"kind": "randers-drift", "amplitude": 0.3}
    {"kind": "sphere", "dim": 2, "center": [0, 0, 1]}     center optional
    {"kind": "hyperbolic-disk"}
    {"kind": "product", "factors": [<space>, ...], "rule": "l2", "coupling": 0}
    {"kind": "catalog", "id": "S2"}

Isometry JSON::

    {"kind": "identity"} | {"kind": "translation", "v": [...]}
    {"kind": "linear", "M": [[...]]} | {"kind": "rotation", "angle": t}
    {"kind": "rot-z", "angle": t} | {"kind": "antipodal"} | {"kind": "ambient", "Q": [[...]]}
    {"kind": "quaternion-left", "q": [w, x, y, z]}
    {"kind": "mobius-translation", "a": [re, im]} | {"kind": "mobius", "a": [re, im], "angle": t}
    {"kind": "disk-rotation", "angle": t}
    {"kind": "product", "factors": [<iso>, ...], "perm": [...]}
    {"kind": "swap"} | {"kind": "swap-antipodal"} | {"kind": "catalog", "id": "S3-hopf"}

String specs: ``catalog:<id>``, a bare catalog id, a path to a JSON file,
inline JSON, and for isometries the shorthands ``rot-z-<angle>``,
``rot-<angle>``, ``disk-rot-<angle>``, ``identity``, ``antipodal``, ``swap``,
``swap-antipodal``.
"""
from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from . import catalog, isometries as isom, models, products
from .errors import FinslerLabError, InputError
from .norms import norm_from_dict
from .spaces import FinslerSpace


def _get(d, key, path, default=...):
    if key in d:
        return d[key]
    if default is ...:
        raise InputError(f"{path}.{key}: missing")
    return default


def _array(d, key, path, ndim, default=...):
    raw = _get(d, key, path, default)
    if raw is None:
        return None
    try:
        a = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{path}.{key}: not numeric") from None
    if a.ndim != ndim:
        raise InputError(f"{path}.{key}: expected a {ndim}-d array")
    return a


def _number(d, key, path, default=...):
    v = _get(d, key, path, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InputError(f"{path}.{key}: expected a number")
    return float(v)


def _int(d, key, path, default=...):
    v = _get(d, key, path, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise InputError(f"{path}.{key}: expected an integer")
    return v


def load_json_spec(spec: str):
    """Inline JSON or a path to a JSON file."""
    text = spec
    if not spec.lstrip().startswith(("{", "[")):
        try:
            text = Path(spec).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {spec}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{spec}: invalid JSON at line {exc.lineno} column {exc.colno}") from None


# ---------------------------------------------------------------------------
# spaces


def space_from_dict(d, path="$") -> FinslerSpace:
    if not isinstance(d, dict):
        raise InputError(f"{path}: expected an object")
    kind = _get(d, "kind", path)
    try:
        if kind == "catalog":
            return catalog.get_space(_get(d, "id", path))
        if kind == "euclidean":
            A = _array(d, "A", path, 2, None)
            n = _int(d, "dim", path, None if A is not None else ...)
            if A is not None and n is not None and A.shape != (n, n):
                raise InputError(f"{path}.A: shape {A.shape} does not match dim {n}")
            return models.euclidean_space(n if n is not None else A.shape[0], A)
        if kind == "minkowski":
            return models.minkowski_space(norm_from_dict(_get(d, "norm", path), f"{path}.norm"))
        if kind == "randers-plane":
            return models.randers_plane(_array(d, "b", path, 1), _array(d, "A", path, 2, None))
        if kind == "randers-drift":
            return models.randers_drift_plane(_number(d, "amplitude", path, 0.3))
        if kind == "sphere":
            return models.sphere(_int(d, "dim", path), _array(d, "center", path, 1, None))
        if kind == "hyperbolic-disk":
            return models.hyperbolic_disk()
        if kind == "product":
            facs = _get(d, "factors", path)
            if not isinstance(facs, list):
                raise InputError(f"{path}.factors: expected a list")
            factors = [space_from_dict(f, f"{path}.factors[{i}]") for i, f in enumerate(facs)]
            return products.make_product(factors, _get(d, "rule", path, "l2"),
                                         _number(d, "coupling", path, 0.0))
    except InputError as exc:
        msg = str(exc)
        raise InputError(msg if msg.startswith("$") else f"{path}: {msg}") from None
    raise InputError(f"{path}.kind: unknown space kind {kind!r}")


def space_to_dict(space: FinslerSpace) -> dict:
    return dict(space.description)


def space_from_spec(spec: str) -> FinslerSpace:
    if spec.startswith("catalog:"):
        return catalog.get_space(spec.split(":", 1)[1])
    if spec in catalog.space_ids():
        return catalog.get_space(spec)
    return space_from_dict(load_json_spec(spec))


# ---------------------------------------------------------------------------
# isometries

_SHORTHAND = re.compile(r"^(rot-z|rot|disk-rot)-(-?[0-9.]+(?:e-?[0-9]+)?)$")


def isometry_from_dict(space: FinslerSpace, d, path="$") -> isom.IsometryAction:
    if not isinstance(d, dict):
        raise InputError(f"{path}: expected an object")
    kind = _get(d, "kind", path)
    try:
        if kind == "catalog":
            return catalog.get_entry(_get(d, "id", path)).iso_factory(space)
        if kind == "identity":
            return isom.identity(space.dim)
        if kind == "translation":
            v = _array(d, "v", path, 1)
            if v.shape != (space.dim,):
                raise InputError(f"{path}.v: expected length {space.dim}")
            return isom.translation(v)
        if kind == "linear":
            return isom.linear(_array(d, "M", path, 2))
        if kind == "rotation":
            return isom.rotation2d(_number(d, "angle", path))
        if kind == "rot-z":
            _need_embedding(space, path)
            return isom.rotation_z(space, _number(d, "angle", path))
        if kind == "antipodal":
            _need_embedding(space, path)
            return isom.antipodal(space)
        if kind == "ambient":
            _need_embedding(space, path)
            return isom.ambient_orthogonal(space, _array(d, "Q", path, 2))
        if kind == "quaternion-left":
            return isom.quaternion_left(space, _array(d, "q", path, 1))
        if kind in ("mobius-translation", "mobius"):
            a = _array(d, "a", path, 1)
            if a.shape != (2,):
                raise InputError(f"{path}.a: expected [re, im]")
            return isom.disk_mobius(complex(a[0], a[1]), _number(d, "angle", path, 0.0))
        if kind == "disk-rotation":
            return isom.disk_rotation(_number(d, "angle", path))
        if kind in ("product", "swap", "swap-antipodal"):
            if not isinstance(space, products.ProductSpace):
                raise InputError(f"{path}.kind: {kind!r} needs a product space")
            if kind == "swap":
                return products.swap(space)
            if kind == "swap-antipodal":
                return products.swap_antipodal(space)
            perm = _get(d, "perm", path, None)
            facs = _get(d, "factors", path)
            if not isinstance(facs, list) or len(facs) != len(space.factors):
                raise InputError(f"{path}.factors: expected {len(space.factors)} entries")
            perm = list(range(len(facs))) if perm is None else perm
            # factor j receives block perm[j], so it acts on factor perm[j]'s space
            maps = [isometry_from_dict(space.factors[perm[j]], f, f"{path}.factors[{j}]")
                    for j, f in enumerate(facs)]
            return products.product_isometry(space, maps, perm)
    except InputError as exc:
        msg = str(exc)
        raise InputError(msg if msg.startswith("$") else f"{path}: {msg}") from None
    except FinslerLabError as exc:
        raise InputError(f"{path}: {exc}") from None
    raise InputError(f"{path}.kind: unknown isometry kind {kind!r}")


def _need_embedding(space, path):
    if space.embedding is None:
        raise InputError(f"{path}.kind: {space.name} has no ambient embedding")


def isometry_from_spec(space: FinslerSpace, spec: str) -> isom.IsometryAction:
    if spec.startswith("catalog:"):
        return catalog.get_entry(spec.split(":", 1)[1]).iso_factory(space)
    if spec in catalog.ENTRIES:
        return catalog.get_entry(spec).iso_factory(space)
    if spec in ("identity", "antipodal", "swap", "swap-antipodal"):
        return isometry_from_dict(space, {"kind": spec})
    m = _SHORTHAND.match(spec)
    if m:
        kind = {"rot-z": "rot-z", "rot": "rotation", "disk-rot": "disk-rotation"}[m.group(1)]
        return isometry_from_dict(space, {"kind": kind, "angle": float(m.group(2))})
    return isometry_from_dict(space, load_json_spec(spec))
