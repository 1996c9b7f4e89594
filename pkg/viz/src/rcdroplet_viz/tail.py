"""Semilog-y survival plot of the scaled largest regeneration gap."""

from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .fits import least_squares_slope
from .io import read_csv_rows


def plot_tail(csv_path):
    rows = read_csv_rows(csv_path)
    by_n: dict = {}
    for r in rows:
        by_n.setdefault(int(float(r["n"])), []).append(
            (float(r["u"]), float(r["survival"]))
        )
    fig, ax = plt.subplots(figsize=(6, 5))
    fits = {}
    for n, pts in sorted(by_n.items()):
        pts.sort()
        xs = [u for u, s in pts if s > 0]
        ys = [s for _, s in pts if s > 0]
        ax.plot(xs, ys, drawstyle="steps-post", label=f"n={n}")
        if len(xs) >= 3:
            slope, _, stderr = least_squares_slope(xs, [math.log(s) for s in ys])
            fits[n] = {"slope": slope, "stderr": stderr}
    ax.set_yscale("log")
    ax.set_xlabel("u (scaled gap)")
    ax.set_ylabel("survival")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig, fits


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Tail plot from regeneration_tail.csv")
    parser.add_argument("--in", dest="csv", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    fig, fits = plot_tail(args.csv)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    for ext in (".png", ".svg"):
        fig.savefig(out.with_suffix(ext), dpi=150)
    print(json.dumps({str(k): v["slope"] for k, v in fits.items()}))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
