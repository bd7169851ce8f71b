"""Run configuration: seed, tolerance overrides, sample counts and output format.

A config file is either a JSON object or ``key = value`` lines (``#``
comments allowed).  Nested keys use dots: ``tol.clifford = 1e-5``,
``samples.lemma32 = 50``.  Unknown keys are rejected.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import InputError

SEED_ENV = "FINSLER_LAB_SEED"
FORMATS = ("json", "csv", "text")

DEFAULT_TOLERANCES = {
    "clifford": 1e-4,        # verdict band for displacement spread
    "preservation": 1e-6,    # geodesic preservation, chart distance
    "lemma32": 1e-4,         # equality band for product vs factor distance
    "analytic": 1e-8,        # norm identities with analytic derivatives
    "fd": 1e-4,              # norm identities with finite differences
}

DEFAULT_SAMPLES = {
    "norm": 1000,
    "clifford": 200,
    "sphere_pairs": 100,
    "lemma31": 1000,
    "lemma32": 200,
    "orthogonality": 200,
    "lie": 200,
    "swap_grid": 33,
}


@dataclass
class RunConfig:
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    samples: dict = field(default_factory=lambda: dict(DEFAULT_SAMPLES))
    output_format: str = "json"
    output: str | None = None

    def tol(self, name: str) -> float:
        return float(self.tolerances[name])

    def n(self, name: str) -> int:
        return int(self.samples[name])

    def to_dict(self):
        return asdict(self)

    def hash(self) -> str:
        """Digest of everything that can change a report (the output path cannot)."""
        d = self.to_dict()
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_kv(text: str, source: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _parse_value(value)
    return out


def _flatten(d: dict, prefix="") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def apply_settings(cfg: RunConfig, settings: dict, source: str = "config") -> RunConfig:
    for key, value in _flatten(settings).items():
        if key == "seed":
            if isinstance(value, bool) or not isinstance(value, int):
                raise InputError(f"{source}: seed must be an integer")
            cfg.seed = value
        elif key in ("format", "output_format"):
            if value not in FORMATS:
                raise InputError(f"{source}: format must be one of {FORMATS}")
            cfg.output_format = value
        elif key == "output":
            cfg.output = str(value)
        elif key.startswith(("tol.", "tolerances.")):
            name = key.split(".", 1)[1]
            if name not in DEFAULT_TOLERANCES:
                raise InputError(f"{source}: unknown tolerance {name!r}")
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
                raise InputError(f"{source}: tolerance {name!r} must be a positive number")
            cfg.tolerances[name] = float(value)
        elif key.startswith("samples."):
            name = key.split(".", 1)[1]
            if name not in DEFAULT_SAMPLES:
                raise InputError(f"{source}: unknown sample count {name!r}")
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise InputError(f"{source}: sample count {name!r} must be a positive integer")
            cfg.samples[name] = value
        else:
            raise InputError(f"{source}: unknown key {key!r}")
    return cfg


def load_config(path: str | None = None, seed: int | None = None) -> RunConfig:
    """Defaults, then the environment seed, then the file, then an explicit seed."""
    cfg = RunConfig()
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            cfg.seed = int(env)
        except ValueError:
            raise InputError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from None
        if text.lstrip().startswith("{"):
            try:
                settings = json.loads(text)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: invalid JSON ({exc})") from None
        else:
            settings = _parse_kv(text, path)
        apply_settings(cfg, settings, path)
    if seed is not None:
        cfg.seed = seed
    return cfg
