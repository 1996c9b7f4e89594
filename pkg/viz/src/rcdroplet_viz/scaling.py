"""Log-log scaling plot of roughness/facet medians with reference slopes."""

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


def plot_scaling(csv_path, report_path=None):
    rows = read_csv_rows(csv_path)
    by_stat: dict = {}
    for r in rows:
        by_stat.setdefault(r["stat"], []).append((float(r["n"]), float(r["median"])))
    fig, ax = plt.subplots(figsize=(6, 5))
    fits = {}
    report_fits = {}
    if report_path:
        report = json.loads(Path(report_path).read_text())
        report_fits = report.get("fits", {})
    for stat, pts in sorted(by_stat.items()):
        if stat not in ("mlr", "mfl"):
            continue
        pts.sort()
        if len(pts) < 3:
            raise ValueError("fewer than 3 n-values: refusing to fit")
        xs = [math.log(n) for n, _ in pts]
        ys = [math.log(max(v, 1e-12)) for _, v in pts]
        slope, intercept, stderr = least_squares_slope(xs, ys)
        # the harness's fit is the single source of truth when available
        shown = report_fits.get(stat, round(slope, 4))
        fits[stat] = {"slope": slope, "stderr": stderr, "shown": shown}
        ax.plot([n for n, _ in pts], [v for _, v in pts], "o-",
                label=f"{stat} (fit {shown:+.4f})")
    for ref, style in ((1 / 3, ":"), (2 / 3, "--")):
        ns = sorted({float(r["n"]) for r in rows})
        base = min(v for _, v in by_stat.get("mlr", [(0, 1)]))
        ax.plot(ns, [base * (n / ns[0]) ** ref for n in ns], style, color="0.5",
                label=f"slope {ref:.3f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("median")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig, fits


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Scaling plot from scaling_stats.csv")
    parser.add_argument("--in", dest="csv", required=True)
    parser.add_argument("--report", default=None, help="scaling_report.json for legend fits")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    fig, fits = plot_scaling(args.csv, args.report)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    for ext in (".png", ".svg"):
        fig.savefig(out.with_suffix(ext), dpi=150)
    print(json.dumps({k: v["shown"] for k, v in fits.items()}))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
