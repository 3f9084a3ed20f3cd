#!/usr/bin/env python3
"""Regenerate the plot datasets: first-band sweep and coupling-function
curves for the standard parameter sets.  Axes data only; plot with any
external tool, e.g.

    python scripts/reproduce_figures.py --outdir out/
    python -c "import pandas as pd; d = pd.read_csv('out/fig3_band0.csv', comment='#'); \
               import matplotlib.pyplot as plt; plt.fill_between(d.alpha, d.band0_lo, d.band0_hi); plt.show()"
"""

import argparse
import pathlib
import sys

from ringchain.cli import main as cli


def run(outdir: pathlib.Path) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    jobs = []
    jobs.append(["bands", "--figure", "fig3", "--out", str(outdir / "fig3_band0.csv")])
    for tag in ("fig4i", "fig4ii", "fig4iii"):
        jobs.append(
            ["impurity", "--figure", tag, "--curve", "--cutoff", "12",
             "--out", str(outdir / f"{tag}_f_curve.csv")]
        )
    for tag in ("fig5i", "fig5ii", "fig5iii"):
        jobs.append(
            ["impurity", "--figure", tag, "--curve", "--cutoff", "12",
             "--out", str(outdir / f"{tag}_fpm_curves.csv")]
        )
    for argv in jobs:
        rc = cli(argv)
        if rc != 0:
            print(f"failed ({rc}): {' '.join(argv)}", file=sys.stderr)
            return rc
        print("wrote", argv[-1])
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="figure_data")
    args = ap.parse_args()
    sys.exit(run(pathlib.Path(args.outdir)))
