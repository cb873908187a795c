#!/usr/bin/env python3
"""Plot mean relative suboptimality from one or more <label>_aggregate.csv files.

usage: plot_traces.py out/fig2/*_aggregate.csv [-o fig2.png]
"""
import argparse
import csv
import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_aggregate(path):
    it, mean, lo, hi = [], [], [], []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            m = float(row["mean_rel_subopt"])
            if math.isnan(m):
                continue
            it.append(int(row["iteration"]))
            mean.append(m)
            lo.append(float(row["min_rel_subopt"]))
            hi.append(float(row["max_rel_subopt"]))
    return it, mean, lo, hi


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("files", nargs="+")
    ap.add_argument("-o", "--output", default="traces.png")
    args = ap.parse_args()
    fig, ax = plt.subplots(figsize=(6, 4))
    for path in args.files:
        it, mean, lo, hi = read_aggregate(path)
        label = os.path.basename(path).replace("_aggregate.csv", "")
        ax.semilogy(it, mean, label=label)
        ax.fill_between(it, lo, hi, alpha=0.2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("(C(K) - C*) / C*")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
