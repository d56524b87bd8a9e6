"""Run one preset under both hopping conventions and compare spreading observables.

    python3 scripts/compare_conventions.py fig2a --out runs/conventions
"""

import argparse
from pathlib import Path

import numpy as np

from rydcluster.cluster_model import HoppingConvention
from rydcluster.config import load_config
from rydcluster.errors import NumericalAbort
from rydcluster.runner import run_experiment, scalar_columns


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("preset")
    parser.add_argument("--out", default="runs/conventions")
    args = parser.parse_args()
    for conv in HoppingConvention:
        cfg = load_config(args.preset, [f"hopping_convention={conv.value}"])
        try:
            result = run_experiment(cfg, Path(args.out) / conv.value)
            status = "completed"
        except NumericalAbort as exc:
            result, status = exc.result, f"aborted at t={exc.t:.2f}"
        cols = scalar_columns(cfg, result.series)
        t, total = cols["t"], cols["total_density"]
        betas = ", ".join(f"{w['window']}: {w['beta']:.3f}" for w in result.fits.get("windows", []) if "beta" in w)
        i8 = int(np.argmin(np.abs(t - 8)))
        print(f"{conv.value:18s} {status}; beta {betas or 'n/a'}; "
              f"kink t={result.fits.get('crossing_time', float('nan')):.2f}; "
              f"N(8)/N(0)={total[i8] / total[0]:.4f}; final dsigma={cols['delta_sigma'][-1]:.1f}")


if __name__ == "__main__":
    main()
