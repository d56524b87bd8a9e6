"""Run presets in sequence and print a one-line summary per run.

    python3 scripts/run_presets.py fig2a fig2d fig4d --out runs
    python3 scripts/run_presets.py --all --out runs    # includes the long N=20 full-model presets
"""

import argparse
from pathlib import Path

from rydcluster.config import PRESETS, load_config
from rydcluster.errors import NumericalAbort
from rydcluster.runner import run_experiment


def summarize(name, result):
    m, fits = result.manifest, result.fits
    parts = [f"{name:16s} {m['status']:8s} {m['wall_time_s']:7.1f} s  drift {m['norm_drift_max']:.1e}"]
    for w in fits.get("windows", []):
        if "beta" in w:
            parts.append(f"beta{w['window']}={w['beta']:.3f}")
    if "crossing_time" in fits:
        parts.append(f"kink t={fits['crossing_time']:.2f}")
    rev = fits.get("revival", {})
    if "t" in rev:
        parts.append(f"revival t={rev['t']:.2f} A={rev['value']:.3f}")
    return "  ".join(parts)


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("presets", nargs="*")
    parser.add_argument("--all", action="store_true", help="run every preset")
    parser.add_argument("--out", default="runs")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = parser.parse_args()
    names = sorted(PRESETS) if args.all else args.presets
    if not names:
        parser.error("name at least one preset or pass --all")
    for name in names:
        cfg = load_config(name, args.set)
        try:
            result = run_experiment(cfg, Path(args.out) / name)
        except NumericalAbort as exc:
            result = exc.result
        print(summarize(name, result), flush=True)


if __name__ == "__main__":
    main()
