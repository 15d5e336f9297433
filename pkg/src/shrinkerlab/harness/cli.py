"""Command line: ``shrinkerlab <command> ...``.

Exit status is 0 on success, 1 if a strict check fails and 2 for
configuration or usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from ..errors import ConfigError, ShrinkerLabError
from .config import SUITES, RunConfig, load_config

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def parse_model(text):
    """``kind:n[:k]``, e.g. ``gaussian:3``, ``sphere:2`` or ``cylinder:4:2``."""
    from ..models import make_model

    parts = text.split(":")
    try:
        kind, n = parts[0], int(parts[1])
        k = int(parts[2]) if len(parts) > 2 else None
    except (IndexError, ValueError):
        raise ConfigError(f"model {text!r}: expected kind:n[:k]") from None
    if len(parts) > 3:
        raise ConfigError(f"model {text!r}: expected kind:n[:k]")
    try:
        return make_model(kind, n, k)
    except ShrinkerLabError as exc:
        raise ConfigError(f"model {text!r}: {exc}") from exc


def parse_point(model, text):
    """Comma-separated coordinates: sphere angle first (if any), then the flat vector."""
    try:
        vals = [float(v) for v in text.split(",")] if text else []
    except ValueError:
        raise ConfigError(f"point {text!r}: expected comma-separated numbers") from None
    want = int(model.has_sphere) + model.m
    if len(vals) != want:
        raise ConfigError(f"point {text!r}: {model.name} needs {want} coordinate(s) "
                          "(sphere angle, then flat components)")
    theta = vals[0] if model.has_sphere else 0.0
    flat = np.array(vals[int(model.has_sphere):]) if model.has_flat else None
    return model.point(theta, flat)


def _emit(data):
    print(json.dumps(data, indent=2, sort_keys=True, default=float))


def _config(args):
    return load_config(args.config) if args.config else RunConfig()


def cmd_catalog(args):
    cfg = _config(args)
    rows = []
    for m in cfg.build_models():
        rows.append({"name": m.name, "kind": m.kind, "n": m.n, "k": m.k, "mu": m.mu,
                     "scalar_curvature": m.scalar_curvature,
                     "sphere_radius": m.sphere_radius if m.has_sphere else None,
                     "rho_max": m.rho_max if m.has_flat else None})
    if args.json:
        _emit(rows)
    else:
        for r in rows:
            print(f"{r['name']:<20} mu = {r['mu']:+.12f}  R = {r['scalar_curvature']:.6g}")
    return EXIT_OK


def cmd_entropy_profile(args):
    from ..entropy import mu_profile

    model = parse_model(args.model)
    if not 0 < args.tau_min < args.tau_max:
        raise ConfigError("need 0 < --tau-min < --tau-max")
    taus = np.logspace(np.log10(args.tau_min), np.log10(args.tau_max), args.points)
    prof = mu_profile(model, taus)
    if args.csv:
        prof.to_csv(args.csv)
    print(prof.to_json())
    return EXIT_OK


def cmd_heat_kernel(args):
    from ..heat import heat_kernel

    model = parse_model(args.model)
    x, y = parse_point(model, args.x), parse_point(model, args.y)
    sample = heat_kernel(model, x, args.t, y, args.s, method=args.method)
    _emit(sample.to_dict())
    return EXIT_OK


def cmd_reduced_distance(args):
    from ..lgeo import reduced_distance, reduced_distance_exact

    model = parse_model(args.model)
    x, y = parse_point(model, args.x), parse_point(model, args.y)
    out = {"model": model.name, "t": args.t, "s": args.s,
           "closed_form": reduced_distance_exact(model, x, args.t, y, args.s)}
    if not args.exact:
        l, path = reduced_distance(model, x, args.t, y, args.s)
        out["optimized"] = l
        out["intervals"] = len(path.sigma) - 1
        if args.path_csv:
            path.write_csv(model, args.path_csv)
    _emit(out)
    return EXIT_OK


def _run(args, suites):
    from .suites import run_suite

    cfg = _config(args)
    if suites is not None:
        cfg = replace(cfg, suites=tuple(suites))
    report, path = run_suite(cfg, args.out)
    s = report["summary"]
    for c in report["checks"]:
        if not args.quiet or c["status"] == "fail":
            print(f"{c['status']:<9}{c['suite']:<15}{c['model']:<20}{c['id']}")
    print(f"{s['total']} checks: {s['pass']} pass, {s['fail']} fail, {s['recorded']} recorded")
    print(f"report: {path}  digest: {report['digest']}")
    return EXIT_OK if s["ok"] else EXIT_FAIL


def cmd_check(args):
    if args.suite == "all":
        return _run(args, None)
    if args.suite not in SUITES:
        raise ConfigError(f"unknown suite {args.suite!r}; valid suites are "
                          f"{', '.join(SUITES)} or 'all'")
    return _run(args, [args.suite])


def cmd_report(args):
    return _run(args, None)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration (JSON or TOML)")
    parser = argparse.ArgumentParser(prog="shrinkerlab", parents=[common],
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", parents=[common], help="list the configured models")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("entropy-profile", parents=[common], help="mu(g, tau) on a log grid")
    p.add_argument("--model", required=True, help="kind:n[:k]")
    p.add_argument("--tau-min", type=float, default=1e-2)
    p.add_argument("--tau-max", type=float, default=1e2)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--csv", help="also write the profile as CSV")
    p.set_defaults(func=cmd_entropy_profile)

    for name, func, help_ in (("heat-kernel", cmd_heat_kernel, "evaluate H(x, t, y, s)"),
                              ("reduced-distance", cmd_reduced_distance,
                               "reduced distance from (x, t) to (y, s)")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--model", required=True, help="kind:n[:k]")
        p.add_argument("--x", required=True, help="sphere angle, then flat coordinates")
        p.add_argument("--t", type=float, required=True)
        p.add_argument("--y", required=True)
        p.add_argument("--s", type=float, required=True)
        if name == "heat-kernel":
            p.add_argument("--method", choices=("auto", "numerical"), default="auto")
        else:
            p.add_argument("--exact", action="store_true", help="closed form only")
            p.add_argument("--path-csv", help="write the optimized path as CSV")
        p.set_defaults(func=func)

    for name, func, help_ in (("check", cmd_check, "run one suite or all"),
                              ("report", cmd_report, "run the configured suites")):
        p = sub.add_parser(name, parents=[common], help=help_)
        if name == "check":
            p.add_argument("suite", help=f"one of {', '.join(SUITES)}, or all")
        p.add_argument("--out", help="report path (default: the config's output)")
        p.add_argument("--quiet", action="store_true", help="only print failing checks")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"shrinkerlab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ShrinkerLabError as exc:
        print(f"shrinkerlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
