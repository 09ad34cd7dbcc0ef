#!/usr/bin/env python3
"""Plot throughput against the swept parameter from `lipp sweep` CSV output.

    lipp sweep --data keys.bin --param alpha --values 0.02,0.05,0.1,0.2,0.4 \
        --workload write-heavy > alpha.csv
    python3 docs/plot_sweep.py alpha.csv beta.csv -o sweep.png
"""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def load(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise SystemExit(f"{path}: no rows")
    # the swept column is whichever of alpha/beta varies
    param = max(("alpha", "beta"), key=lambda c: len({r[c] for r in rows}))
    pts = sorted((float(r[param]), float(r["throughput_ops"]) / 1e6) for r in rows)
    return param, pts


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("csv", nargs="+")
    ap.add_argument("-o", "--out", default="sweep.png")
    args = ap.parse_args()

    fig, axes = plt.subplots(1, len(args.csv), figsize=(4.5 * len(args.csv), 3.5), squeeze=False)
    for ax, path in zip(axes[0], args.csv):
        param, pts = load(path)
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker="o")
        ax.set_xlabel(param)
        ax.set_ylabel("throughput (Mops/s)")
        ax.set_ylim(bottom=0)
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(args.out)


if __name__ == "__main__":
    main()
