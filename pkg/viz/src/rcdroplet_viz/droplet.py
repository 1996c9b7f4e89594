"""Layered droplet rendering: configuration, circuit, hull, profile, sites."""

from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .io import read_circuit, read_profile, read_regeneration, read_snapshot, snapshot_edges


def convex_hull(points):
    pts = sorted(set(points))
    if len(pts) <= 2:
        return list(pts)

    def half(seq):
        out = []
        for p in seq:
            while len(out) > 1 and (
                (out[-1][0] - out[-2][0]) * (p[1] - out[-2][1])
                - (out[-1][1] - out[-2][1]) * (p[0] - out[-2][0])
            ) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return lower[:-1] + upper[:-1]


def _on_polygon_boundary(p, poly):
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if cross != 0:
            continue
        if min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(
            a[1], b[1]
        ):
            return True
    return False


def plot_droplet(snapshot, circuit_file=None, profile_file=None, regen_file=None,
                 centre=(0, 0), scale=None):
    """Figure with open edges faint, the circuit bold, its hull dashed, the
    dilated profile dotted, and regeneration sites marked."""
    L, flags = read_snapshot(snapshot)
    fig, ax = plt.subplots(figsize=(7, 7))
    for (a, b) in snapshot_edges(L, flags):
        ax.plot([a[0], b[0]], [a[1], b[1]], color="0.8", lw=0.6, zorder=1)
    legend = {"window_L": L, "circuit_vertices": 0}
    circuit = read_circuit(circuit_file) if circuit_file else []
    if circuit:
        closed = circuit + [circuit[0]]
        ax.plot(*zip(*closed), color="black", lw=1.8, zorder=3, label="circuit")
        hull = convex_hull(circuit)
        ax.plot(*zip(*(hull + [hull[0]])), color="tab:blue", lw=1.2, ls="--",
                zorder=4, label="hull")
        legend["circuit_vertices"] = len(circuit)
        legend["hull_matches_circuit"] = all(
            _on_polygon_boundary(v, hull) for v in circuit
        )
    if profile_file:
        prof = read_profile(profile_file)
        n = scale if scale is not None else L / 2
        poly = [(n * x + centre[0], n * y + centre[1]) for x, y in prof["polygon"]]
        ax.plot(*zip(*(poly + [poly[0]])), color="tab:red", lw=1.0, ls=":",
                zorder=5, label="profile")
    if regen_file:
        regen = read_regeneration(regen_file)
        if regen["sites"]:
            xs = [s[0] for s in regen["sites"]]
            ys = [s[1] for s in regen["sites"]]
            ax.scatter(xs, ys, s=18, color="tab:green", zorder=6, marker="o",
                       label="regeneration sites")
    ax.set_aspect("equal")
    ax.set_xlim(-L - 1, L + 1)
    ax.set_ylim(-L - 1, L + 1)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    return fig, legend


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Render a droplet snapshot")
    parser.add_argument("--in", dest="snapshot", required=True,
                        help="rcmsnap v1 snapshot file")
    parser.add_argument("--circuit", default=None, help="circuit JSON file")
    parser.add_argument("--profile", default=None, help="profile JSON file")
    parser.add_argument("--regen", default=None, help="regeneration JSON file")
    parser.add_argument("--scale", type=float, default=None,
                        help="profile dilation factor (defaults to L/2)")
    parser.add_argument("--out", required=True, help="output image path (.png/.svg)")
    args = parser.parse_args(argv)
    fig, legend = plot_droplet(args.snapshot, args.circuit, args.profile,
                               args.regen, scale=args.scale)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150, metadata=_stable_metadata(out.suffix))
    base = out.with_suffix("")
    for ext in (".png", ".svg"):
        if out.suffix != ext:
            fig.savefig(base.with_suffix(ext), dpi=150, metadata=_stable_metadata(ext))
    print(json.dumps(legend))
    return 0


def _stable_metadata(suffix):
    # pin image metadata so golden hashes do not drift with timestamps
    if suffix == ".png":
        return {"Software": "rcdroplet-viz"}
    if suffix == ".svg":
        return {"Date": None, "Creator": "rcdroplet-viz"}
    return None


if __name__ == "__main__":
    raise SystemExit(main())
