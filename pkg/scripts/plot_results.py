#!/usr/bin/env python3
"""Render figures from experiment CSVs without rerunning any experiment.

Reads the aggregate CSVs written by the `eibnb` CLI from a results
directory and writes PNG figures next to them:

  longrun_aggregate.csv -> longrun_<metric>.png   (per-k mean curves)
  direct_aggregate.csv  -> direct_max_ei.png      (bar chart per n0)
  study_aggregate.csv   -> study_proportion.png   (band proportions per k)

Usage: python3 scripts/plot_results.py [results_dir]
"""

import argparse
import csv
import math
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

METHOD_STYLE = {
    "bnb": dict(color="C0", marker="o"),
    "ga": dict(color="C1", marker="s"),
    "static": dict(color="C2", marker="^"),
    "contour_mod": dict(color="C0", marker="o"),
    "contour_full": dict(color="C1", marker="s"),
}


def read_aggregate(path: Path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _group_value(row):
    return float(row["group"].split("=", 1)[1])


def plot_longrun(rows, out_dir: Path) -> list[Path]:
    by_metric = defaultdict(lambda: defaultdict(list))
    for r in rows:
        by_metric[r["metric"]][r["method"]].append(
            (_group_value(r), float(r["mean"]), float(r["stderr"]))
        )
    paths = []
    for metric, methods in by_metric.items():
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for method, pts in sorted(methods.items()):
            pts.sort()
            k = [p[0] for p in pts]
            mean = [p[1] for p in pts]
            err = [0.0 if math.isnan(p[2]) else p[2] for p in pts]
            ax.errorbar(
                k, mean, yerr=err, label=method, markersize=4,
                **METHOD_STYLE.get(method, {}),
            )
        ax.set_xlabel("added points k")
        ax.set_ylabel(metric)
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"longrun_{metric}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths


def plot_direct(rows, out_dir: Path) -> list[Path]:
    groups = sorted({r["group"] for r in rows}, key=lambda g: float(g.split("=")[1]))
    methods = sorted({r["method"] for r in rows})
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.8 / len(methods)
    for j, method in enumerate(methods):
        means, errs = [], []
        for g in groups:
            row = next(r for r in rows if r["method"] == method and r["group"] == g)
            means.append(float(row["mean"]))
            e = float(row["stderr"])
            errs.append(0.0 if math.isnan(e) else e)
        x = [i + j * width for i in range(len(groups))]
        ax.bar(x, means, width, yerr=errs, label=method)
    ax.set_xticks([i + width * (len(methods) - 1) / 2 for i in range(len(groups))])
    ax.set_xticklabels(groups)
    ax.set_ylabel("mean max EI")
    ax.legend()
    fig.tight_layout()
    path = out_dir / "direct_max_ei.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def plot_study(rows, out_dir: Path) -> list[Path]:
    by_method = defaultdict(list)
    for r in rows:
        by_method[r["method"]].append(
            (_group_value(r), float(r["mean"]), float(r["stderr"]))
        )
    fig, ax = plt.subplots(figsize=(6, 4))
    for method, pts in sorted(by_method.items()):
        pts.sort()
        k = [p[0] for p in pts]
        mean = [p[1] for p in pts]
        err = [0.0 if math.isnan(p[2]) else p[2] for p in pts]
        ax.errorbar(
            k, mean, yerr=err, label=method, markersize=4,
            **METHOD_STYLE.get(method, {}),
        )
    ax.set_xlabel("added points k")
    ax.set_ylabel("proportion of points in band")
    ax.set_ylim(0.0, 1.0)
    ax.legend()
    fig.tight_layout()
    path = out_dir / "study_proportion.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("results_dir", nargs="?", default="results")
    args = parser.parse_args(argv)
    out_dir = Path(args.results_dir)
    if not out_dir.is_dir():
        print(f"error: {out_dir} is not a directory", file=sys.stderr)
        return 1

    plotters = {
        "longrun_aggregate.csv": plot_longrun,
        "direct_aggregate.csv": plot_direct,
        "study_aggregate.csv": plot_study,
    }
    written = []
    for name, plotter in plotters.items():
        path = out_dir / name
        if path.exists():
            written.extend(plotter(read_aggregate(path), out_dir))
    if not written:
        print(f"error: no aggregate CSVs found in {out_dir}", file=sys.stderr)
        return 1
    for p in written:
        print(f"wrote {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
