"""``finsler-lab`` command line.

Exit codes: 0 all checks pass, 1 a verified mathematical violation,
2 input or usage error, 3 inconclusive (a solver could not certify).
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import acceptance, catalog, connection, geodesics, isometries, products
from .config import FORMATS, load_config
from .errors import ChartExitError, FinslerLabError, InputError, UnsupportedError
from .norms import norm_from_dict, validate_norm
from .report import (EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_OK, EXIT_VIOLATION, dumps, envelope,
                     jsonable)
from .serialization import isometry_from_spec, load_json_spec, space_from_spec

ISOMETRY_DEFECT_TOL = 1e-8


def parse_vector(text: str, name: str) -> np.ndarray:
    text = text.strip()
    try:
        vals = json.loads(text) if text.startswith("[") else [float(t) for t in text.split(",")]
        return np.asarray(vals, dtype=float).reshape(-1)
    except (ValueError, TypeError, json.JSONDecodeError):
        raise InputError(f"--{name}: expected comma-separated numbers, got {text!r}") from None


class Output:
    """Collects the report or CSV text of a command and writes it once."""

    def __init__(self, cfg):
        self.cfg = cfg

    def emit(self, text: str):
        if self.cfg.output:
            with open(self.cfg.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def _text(report: dict) -> str:
    lines = []
    for k, v in sorted(jsonable(report).items()):
        lines.append(f"{k}: {json.dumps(v, sort_keys=True)}")
    return "\n".join(lines) + "\n"


def _finish(cfg, command, body, code, csv_text=None):
    if cfg.output_format == "csv" and csv_text is not None:
        Output(cfg).emit(csv_text)
        return code
    report = envelope(command, cfg, body, code)
    Output(cfg).emit(_text(report) if cfg.output_format == "text" else dumps(report))
    return code


# ---------------------------------------------------------------------------
# commands


def cmd_norm_check(args, cfg):
    norm = norm_from_dict(load_json_spec(args.norm))
    rep = validate_norm(norm, args.samples or cfg.n("norm"), cfg.seed)
    body = {"norm": norm.to_dict(), "validity": rep.to_dict()}
    if rep.passed:
        ident = acceptance.norm_identities(norm, args.samples or cfg.n("norm"), cfg.seed)
        tol = cfg.tol("analytic") if norm.analytic else cfg.tol("fd")
        ok = (ident["homogeneity"] <= 1e-12 and ident["euler"] <= tol and ident["g_yy"] <= tol
              and ident["cartan_contraction"] <= tol and ident["inequality_failures"] == 0)
        body["identities"] = {**ident, "tolerance": tol, "passed": ok}
        return _finish(cfg, "norm check", body, EXIT_OK if ok else EXIT_VIOLATION)
    return _finish(cfg, "norm check", body, EXIT_VIOLATION)


def cmd_connection_show(args, cfg):
    space = space_from_spec(args.space)
    x, y = parse_vector(args.x, "x"), parse_vector(args.y, "y")
    if args.mode == "numeric":
        cc = connection.connection_coefficients(space, x, y)
        body = cc.to_dict()
    else:
        body = {"x": x.tolist(), "y": y.tolist(),
                "gamma": connection.christoffel_formal(space, x, y, args.mode),
                "N": connection.nonlinear_coeffs(space, x, y, args.mode),
                "Gamma": connection.chern_coeffs(space, x, y, args.mode)}
    G = np.asarray(body["Gamma"])
    body["torsion_free_defect"] = float(np.max(np.abs(G - G.transpose(0, 2, 1))))
    body["mode"] = args.mode
    body["space"] = space.name
    rep = connection.berwald_check(space, x, seed=cfg.seed)
    body["berwald"] = {"is_berwald_at_x": rep.is_berwald_at_x,
                       "max_deviation": rep.max_deviation, "tolerance": rep.tolerance}
    return _finish(cfg, "connection show", body, EXIT_OK)


def cmd_geodesic_shoot(args, cfg):
    space = space_from_spec(args.space)
    x0, y0 = parse_vector(args.x0, "x0"), parse_vector(args.y0, "y0")
    try:
        path = geodesics.integrate_geodesic(space, x0, y0, args.t_end, args.h)
    except ChartExitError as exc:
        body = {"space": space.name, "error": str(exc), "partial_samples": len(exc.path)}
        return _finish(cfg, "geodesic shoot", body, EXIT_INCONCLUSIVE,
                       exc.path.to_csv() if exc.path is not None else None)
    speed = np.asarray(space.F(path.x, path.v))
    body = {"space": space.name, "samples": len(path), "h": path.h, "t_end": path.duration,
            "start": path.start, "end": path.end, "length": geodesics.arc_length(space, path),
            "speed_drift": float(np.max(np.abs(speed - speed[0])))}
    if args.csv:
        with open(args.csv, "w") as fh:
            path.to_csv(fh)
        body["csv"] = args.csv
    return _finish(cfg, "geodesic shoot", body, EXIT_OK, path.to_csv())


def cmd_distance(args, cfg):
    space = space_from_spec(args.space)
    x, z = parse_vector(args.source, "from"), parse_vector(args.target, "to")
    res = geodesics.distance(space, x, z, method=args.method, seed=cfg.seed)
    body = {"space": space.name, **res.to_dict()}
    csv_text = res.path.to_csv() if res.path is not None else None
    if args.csv and res.path is not None:
        with open(args.csv, "w") as fh:
            res.path.to_csv(fh)
        body["csv"] = args.csv
    return _finish(cfg, "distance", body, EXIT_OK if res.certified else EXIT_INCONCLUSIVE,
                   csv_text)


def _space_iso(args):
    space = space_from_spec(args.space)
    return space, isometry_from_spec(space, args.iso)


def cmd_displacement_map(args, cfg):
    space, iso = _space_iso(args)
    rep = isometries.clifford_check(space, iso, args.samples or cfg.n("clifford"), cfg.seed,
                                    cfg.tol("clifford"), args.method)
    n = space.dim
    lines = [",".join([f"x{i + 1}" for i in range(n)] + ["delta"])]
    lines += [",".join(repr(float(a)) for a in [*p, d]) for p, d in zip(rep.points, rep.values)]
    body = {"space": space.name, "isometry": iso.to_dict(), **rep.to_dict(with_samples=True)}
    code = EXIT_OK if rep.certified == len(rep.values) else EXIT_INCONCLUSIVE
    return _finish(cfg, "displacement map", body, code, "\n".join(lines) + "\n")


def cmd_clifford_verify(args, cfg):
    space, iso = _space_iso(args)
    defect = isometries.isometry_certificate(space, iso, 200, cfg.seed)
    body = {"space": space.name, "isometry": iso.to_dict(), "isometry_defect": defect}
    if defect > ISOMETRY_DEFECT_TOL:
        body["verdict"] = "not-an-isometry"
        return _finish(cfg, "clifford verify", body, EXIT_VIOLATION)
    tol = args.tol if args.tol is not None else cfg.tol("clifford")
    rep = isometries.clifford_check(space, iso, args.samples or cfg.n("clifford"), cfg.seed, tol,
                                    args.method)
    body.update(rep.to_dict())
    code = {"clifford": EXIT_OK, "non-clifford": EXIT_VIOLATION}.get(rep.verdict,
                                                                     EXIT_INCONCLUSIVE)
    return _finish(cfg, "clifford verify", body, code)


def _product(spec):
    space = space_from_spec(spec)
    if not isinstance(space, products.ProductSpace):
        raise InputError(f"--space: {space.name} is not a product space")
    return space


def cmd_product_verify(args, cfg):
    P = _product(args.space)
    n = args.samples or cfg.n("orthogonality")
    checks = [products.restriction_check(P, n, cfg.seed),
              products.orthogonality_check(P, n, cfg.seed)]
    if P.spray_fn is not None:
        checks.append(products.projection_check(P, 5, cfg.seed))
    body = {"space": P.name, "rule": P.rule, "checks": [c.to_dict() for c in checks],
            "passed": all(c.passed for c in checks)}
    return _finish(cfg, "product verify", body, EXIT_OK if body["passed"] else EXIT_VIOLATION)


def cmd_lemma_run(args, cfg):
    P = _product(args.space)
    if args.which == "3.1":
        rep = products.lemma31_check(P, args.samples or cfg.n("lemma31"), cfg.seed)
    else:
        rep = products.lemma32_check(P, args.samples or cfg.n("lemma32"), cfg.seed, args.method,
                                     cfg.tol("lemma32"))
    body = {"space": P.name, "lemma": args.which, **rep.to_dict()}
    if rep.passed:
        code = EXIT_OK
    elif rep.violations == 0:
        code = EXIT_INCONCLUSIVE
    else:
        code = EXIT_VIOLATION
    return _finish(cfg, "lemma run", body, code)


def cmd_counterexample(args, cfg):
    curve = products.swap_counterexample_displacement(args.points or cfg.n("swap_grid"),
                                                      args.method, cfg.seed)
    body = {"space": "S2xS2", "isometry": "swap-antipodal", **curve.to_dict(),
            "t": curve.t, "delta_numeric": curve.numeric, "delta_formula": curve.formula}
    if not curve.certified.all():
        code = EXIT_INCONCLUSIVE
    elif curve.max_error < 1e-3 and curve.spread > 0.9:
        code = EXIT_OK
    else:
        code = EXIT_VIOLATION
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(curve.to_csv())
        body["csv"] = args.csv
    return _finish(cfg, "counterexample swap-s2", body, code, curve.to_csv())


def cmd_catalog_list(args, cfg):
    listing = catalog.catalog_listing()
    if args.json or args.format == "json":
        return _finish(cfg, "catalog list", listing, EXIT_OK)
    lines = [f"{s['id']:<14} {s['tag']:<16} {s['description']}" for s in listing["spaces"]]
    lines.append("")
    lines += [f"{e['id']:<32} {e['space']:<12} expect {e['expected']}" for e in listing["entries"]]
    Output(cfg).emit("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_suite(args, cfg):
    criteria = None
    if args.criteria:
        try:
            criteria = [int(c) for c in args.criteria.split(",")]
        except ValueError:
            raise InputError("--criteria: expected comma-separated integers") from None
        unknown = set(criteria) - set(acceptance.CRITERIA)
        if unknown:
            raise InputError(f"--criteria: unknown criteria {sorted(unknown)}")
    body = acceptance.run_suite(cfg, criteria)
    for line in body["lines"]:
        print(line, file=sys.stderr)
    if body["passed"]:
        code = EXIT_OK
    elif body["inconclusive"]:
        code = EXIT_INCONCLUSIVE
    else:
        code = EXIT_VIOLATION
    return _finish(cfg, "suite", body, code)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    # accepted before or after the subcommand; SUPPRESS keeps the subparser
    # from overwriting a value given at the top level
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="config file (JSON or key = value lines)")
    common.add_argument("--seed", type=int, help="random seed (fallback: $FINSLER_LAB_SEED)")
    common.add_argument("--format", choices=FORMATS, help="output format")
    common.add_argument("--output", help="write the report here instead of stdout")

    p = argparse.ArgumentParser(prog="finsler-lab", description=__doc__.splitlines()[0],
                                parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    def group(name, help_):
        g = sub.add_parser(name, help=help_)
        return g.add_subparsers(dest="action", required=True)

    norm = group("norm", "Minkowski norm checks")
    c = norm.add_parser("check", parents=[common], help="validate a norm JSON")
    c.add_argument("--norm", required=True, help="norm JSON file or inline JSON")
    c.add_argument("--samples", type=int)
    c.set_defaults(func=cmd_norm_check)

    conn = group("connection", "connection coefficients")
    c = conn.add_parser("show", parents=[common], help="print gamma, N and Gamma")
    c.add_argument("--space", required=True)
    c.add_argument("--x", required=True)
    c.add_argument("--y", required=True)
    c.add_argument("--mode", choices=connection.MODES, default="numeric")
    c.set_defaults(func=cmd_connection_show)

    geo = group("geodesic", "geodesic integration")
    c = geo.add_parser("shoot", parents=[common], help="integrate a geodesic with RK4")
    c.add_argument("--space", required=True)
    c.add_argument("--x0", required=True)
    c.add_argument("--y0", required=True)
    c.add_argument("--t-end", type=float, required=True)
    c.add_argument("--h", type=float)
    c.add_argument("--csv", help="also write the path as CSV (t, x..., v...)")
    c.set_defaults(func=cmd_geodesic_shoot)

    c = sub.add_parser("distance", parents=[common], help="directed distance d(from, to)")
    c.add_argument("--space", required=True)
    c.add_argument("--from", dest="source", required=True)
    c.add_argument("--to", dest="target", required=True)
    c.add_argument("--method", choices=("auto", "closed-form", "shooting", "energy-min"),
                   default="auto")
    c.add_argument("--csv", help="write the certificate path as CSV")
    c.set_defaults(func=cmd_distance, action=None)

    disp = group("displacement", "displacement functions")
    c = disp.add_parser("map", parents=[common], help="sample x -> d(x, rho(x))")
    c.add_argument("--space", required=True)
    c.add_argument("--iso", required=True)
    c.add_argument("--samples", type=int)
    c.add_argument("--method", default="auto",
                   choices=("auto", "closed-form", "shooting", "energy-min"))
    c.set_defaults(func=cmd_displacement_map)

    cl = group("clifford", "Clifford translation tests")
    c = cl.add_parser("verify", parents=[common], help="constant-displacement verdict")
    c.add_argument("--space", required=True)
    c.add_argument("--iso", required=True)
    c.add_argument("--samples", type=int)
    c.add_argument("--tol", type=float)
    c.add_argument("--method", default="auto",
                   choices=("auto", "closed-form", "shooting", "energy-min"))
    c.set_defaults(func=cmd_clifford_verify)

    pr = group("product", "orthogonal products")
    c = pr.add_parser("verify", parents=[common], help="restriction, orthogonality, projection")
    c.add_argument("--space", required=True)
    c.add_argument("--samples", type=int)
    c.set_defaults(func=cmd_product_verify)

    lm = group("lemma", "product lemma sweeps")
    c = lm.add_parser("run", parents=[common], help="norm (3.1) or distance (3.2) inequality")
    c.add_argument("--which", choices=("3.1", "3.2"), required=True)
    c.add_argument("--space", required=True)
    c.add_argument("--samples", type=int)
    c.add_argument("--method", default="shooting",
                   choices=("auto", "closed-form", "shooting", "energy-min"))
    c.set_defaults(func=cmd_lemma_run)

    ce = group("counterexample", "non-constant displacement of a product isometry")
    c = ce.add_parser("swap-s2", parents=[common], help="(x1, x2) -> (A x2, x1) on S2xS2")
    c.add_argument("--points", type=int)
    c.add_argument("--method", default="shooting",
                   choices=("auto", "closed-form", "shooting", "energy-min"))
    c.add_argument("--csv", help="write t, delta_numeric, delta_formula as CSV")
    c.set_defaults(func=cmd_counterexample)

    cat = group("catalog", "catalog of spaces and isometries")
    c = cat.add_parser("list", parents=[common], help="list catalog entries")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_catalog_list)

    c = sub.add_parser("suite", parents=[common], help="run the acceptance battery")
    c.add_argument("--criteria", help="comma-separated subset, e.g. 1,2,8")
    c.set_defaults(func=cmd_suite, action=None)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        for opt in ("config", "seed", "format", "output"):
            if not hasattr(args, opt):
                setattr(args, opt, None)
        cfg = load_config(args.config, args.seed)
        if args.format:
            cfg.output_format = args.format
        if args.output:
            cfg.output = args.output
        return args.func(args, cfg)
    except (InputError, UnsupportedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FinslerLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
