"""Command-line entry point: ``rydcluster run|validate|cross-validate|list-presets``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config, preset_dict, preset_names
from .errors import RydClusterError


def _cmd_run(args) -> int:
    cfg = load_config(args.preset or args.config, args.set)
    from .runner import run_experiment

    out = args.out or cfg.output_dir or f"runs/{cfg.name}"
    result = run_experiment(cfg, out, threads=args.threads)
    m = result.manifest
    print(f"{cfg.name}: {m['status']} in {m['wall_time_s']:.1f} s, norm drift {m['norm_drift_max']:.2e}, outputs in {out}")
    for w in result.fits.get("windows", []):
        if "beta" in w:
            print(f"  beta{w['window']} = {w['beta']:.4f}")
    if "crossing_time" in result.fits:
        print(f"  crossing time = {result.fits['crossing_time']:.3f}")
    if "revival" in result.fits and "t" in result.fits["revival"]:
        r = result.fits["revival"]
        print(f"  revival at t = {r['t']:.3f}, value {r['value']:.4f}")
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config, args.set)
    print(json.dumps(cfg.to_dict(), indent=2))
    return 0


def _cmd_cross_validate(args) -> int:
    from .runner import cross_validate, cross_validation_pair

    full, cluster = cross_validation_pair(
        n_sites=args.n_sites,
        j1=args.j1,
        j2=args.j2,
        omega=args.omega,
        omega0=args.omega0,
        t_end=args.t_end,
        dt=args.dt,
    )
    from .full_model import check_capacity

    check_capacity(args.n_sites)
    report = cross_validate(full, cluster)
    print(json.dumps(report.summary(), indent=2))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2))
    return 0


def _cmd_list(args) -> int:
    for name in preset_names():
        raw = preset_dict(name)
        flag = " (long)" if raw.get("long") else ""
        print(f"{name:16s} model={raw['model']:16s} N={raw['lattice']['n_sites']:<4d} omega={raw['drive']['omega']}{flag}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rydcluster", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a preset or config file")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="preset name, see list-presets")
    src.add_argument("--config", help="JSON config file")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a dotted config key")
    run.add_argument("--out", help="output directory (default runs/<name>)")
    run.add_argument("--threads", type=int, default=None, help="numba thread count")
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="resolve a config and print it")
    val.add_argument("--config", required=True, help="JSON config file or preset name")
    val.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    val.set_defaults(func=_cmd_validate)

    xv = sub.add_parser("cross-validate", help="compare full and cluster models on a small ring")
    xv.add_argument("--n-sites", type=int, default=14)
    xv.add_argument("--j1", type=int, default=6)
    xv.add_argument("--j2", type=int, default=9)
    xv.add_argument("--omega", type=float, default=5.0867)
    xv.add_argument("--omega0", type=float, default=1.0)
    xv.add_argument("--t-end", type=float, default=3.0)
    xv.add_argument("--dt", type=float, default=4e-4)
    xv.add_argument("--out", help="write the full report (with time series) as JSON")
    xv.set_defaults(func=_cmd_cross_validate)

    ls = sub.add_parser("list-presets", help="list preset names")
    ls.set_defaults(func=_cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RydClusterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
