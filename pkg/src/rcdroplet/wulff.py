"""Inverse correlation length estimation and the unit-area Wulff shape.

The direction-dependent decay rate of the two-point function is measured by
weighted least squares on -log P(0 <-> floor(k x)) over a fit range of k.
The shape is the intersection of the half-planes {t . u <= xi(u)} over the
measured directions, rescaled to unit area; global distortion places an
integer translate of its n-dilated boundary against a circuit by minimizing
the Hausdorff distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geom
from .circuits import Circuit, mfl
from .dynamics import RcmParams, estimate_connectivity
from .lattice import Window

DENSIFY_POINTS = 512


class InsufficientTrialsError(RuntimeError):
    def __init__(self, k):
        super().__init__(f"no open connection observed at k={k}; increase trials")
        self.k = k


@dataclass
class XiSamples:
    directions: list            # unit vectors
    xi: list                    # decay rate per unit length, by direction
    stderr: list
    fit_range: tuple            # (k_min, k_max)

    def to_dict(self):
        return {
            "directions": [list(d) for d in self.directions],
            "xi": list(self.xi),
            "stderr": list(self.stderr),
            "fit_range": list(self.fit_range),
        }

    @staticmethod
    def from_dict(d):
        return XiSamples(
            [tuple(v) for v in d["directions"]], list(d["xi"]),
            list(d["stderr"]), tuple(d["fit_range"]),
        )


@dataclass
class WulffProfile:
    polygon: list               # dense ccw vertex list of the unit-area boundary
    lam: float                  # dilation factor applied to reach unit area
    xi: XiSamples | None = None
    params: dict = field(default_factory=dict)

    def boundary_points(self, n_points: int = DENSIFY_POINTS):
        return geom.densify_polyline(self.polygon, self.perimeter() / n_points)

    def perimeter(self):
        p = 0.0
        n = len(self.polygon)
        for i in range(n):
            a, b = self.polygon[i], self.polygon[(i + 1) % n]
            p += math.hypot(b[0] - a[0], b[1] - a[1])
        return p

    def boundary_point_at(self, theta: float):
        """Unique boundary point with argument theta (the shape contains 0)."""
        best = None
        for i in range(len(self.polygon)):
            a = self.polygon[i]
            b = self.polygon[(i + 1) % len(self.polygon)]
            t = geom.ray_segment_hit(theta, a, b)
            if t is not None and (best is None or t < best):
                best = t
        if best is None:
            raise ValueError("profile does not surround the origin")
        return (best * math.cos(theta), best * math.sin(theta))

    def to_json(self) -> str:
        return json.dumps(
            {
                "lambda": self.lam,
                "polygon": [[float(x), float(y)] for x, y in self.polygon],
                "xi": self.xi.to_dict() if self.xi else None,
                "params": self.params,
            }
        )

    @staticmethod
    def from_json(text: str) -> "WulffProfile":
        d = json.loads(text)
        return WulffProfile(
            [tuple(v) for v in d["polygon"]],
            d["lambda"],
            XiSamples.from_dict(d["xi"]) if d.get("xi") else None,
            d.get("params", {}),
        )


def estimate_xi(params: RcmParams, direction, fit_range, trials: int, rng, window=None):
    """Weighted LSQ decay rate of -log P(0 <-> floor(k dir)) over the fit range."""
    k_min, k_max = fit_range
    dx, dy = direction
    norm = math.hypot(dx, dy)
    dx, dy = dx / norm, dy / norm
    if window is None:
        window = Window(int(math.ceil(k_max * max(abs(dx), abs(dy)))) + 2)
    ks, ys, ws = [], [], []
    for k in range(k_min, k_max + 1):
        target = (int(math.floor(k * dx)), int(math.floor(k * dy)))
        p_hat, se = estimate_connectivity(params, window, target, trials, rng)
        if p_hat <= 0.0:
            raise InsufficientTrialsError(k)
        var_log = max(se / p_hat, 1e-9) ** 2
        ks.append(float(k))
        ys.append(-math.log(p_hat))
        ws.append(1.0 / var_log)
    return _weighted_fit(ks, ys, ws)


def _weighted_fit(xs, ys, ws):
    x = np.asarray(xs)
    y = np.asarray(ys)
    w = np.asarray(ws)
    xbar = (w * x).sum() / w.sum()
    ybar = (w * y).sum() / w.sum()
    sxx = (w * (x - xbar) ** 2).sum()
    slope = float((w * (x - xbar) * (y - ybar)).sum() / sxx)
    return slope, float(math.sqrt(1.0 / sxx))


def octant_directions(count: int = 9):
    """Unit vectors at `count` evenly spaced angles in [0, pi/4]."""
    return [
        (math.cos(a), math.sin(a))
        for a in np.linspace(0.0, math.pi / 4, count)
    ]


def unfold_octant(directions, values, stderrs):
    """Unfold first-octant measurements through the 8 lattice symmetries."""
    seen = {}
    for (ux, uy), v, s in zip(directions, values, stderrs):
        for sx, sy, swap in (
            (1, 1, False), (-1, 1, False), (1, -1, False), (-1, -1, False),
            (1, 1, True), (-1, 1, True), (1, -1, True), (-1, -1, True),
        ):
            x, y = (uy, ux) if swap else (ux, uy)
            key = (round(sx * x, 12), round(sy * y, 12))
            if key not in seen:
                seen[key] = (v, s)
    dirs = sorted(seen, key=lambda u: geom.arg(u))
    return XiSamples(
        [d for d in dirs],
        [seen[d][0] for d in dirs],
        [seen[d][1] for d in dirs],
        (0, 0),
    )


def build_wulff(xi: XiSamples) -> WulffProfile:
    """Half-plane intersection of {t . u <= xi(u)}, rescaled to unit area."""
    if len(xi.directions) < 16:
        raise ValueError("need at least 16 directions spanning the circle")
    if any(v <= 0 for v in xi.xi):
        raise ValueError("xi values must be positive")
    r = 2.0 * max(xi.xi)
    poly = [(-r, -r), (r, -r), (r, r), (-r, r)]
    for (ux, uy), v in zip(xi.directions, xi.xi):
        # keep the side of the line t . u = v containing the origin
        a = (v * ux, v * uy)
        b = (v * ux - uy, v * uy + ux)
        poly = geom.clip_halfplane(poly, a, b, (0.0, 0.0))
        if len(poly) < 3:
            raise ValueError("half-plane intersection degenerated")
    area0 = geom.polygon_area(poly)
    lam = 1.0 / math.sqrt(area0)
    poly = [(lam * x, lam * y) for x, y in poly]
    return WulffProfile(poly, lam, xi)


def global_distortion(c: Circuit, w: WulffProfile, n: float):
    """Minimal Hausdorff distance to an integer translate of the n-dilated boundary.

    Returns (gd, centre); ties in the minimum go to the lexicographically
    minimal translate.  Coarse stride-4 search inside the circuit's bounding
    box inflated by its maximum facet length, then a stride-1 refinement.
    """
    from scipy.spatial import cKDTree

    boundary = np.asarray(w.boundary_points(), dtype=float) * n
    circuit_pts = np.asarray(geom.densify_polyline(list(c.vertices), 0.5), dtype=float)
    tree_c = cKDTree(circuit_pts)

    xs = [v[0] for v in c.vertices]
    ys = [v[1] for v in c.vertices]
    pad = int(math.ceil(mfl(c)))
    x_lo, x_hi = min(xs) - pad, max(xs) + pad
    y_lo, y_hi = min(ys) - pad, max(ys) + pad

    def dist_at(z):
        shifted = boundary + np.array(z, dtype=float)
        d1 = tree_c.query(shifted)[0].max()
        d2 = cKDTree(shifted).query(circuit_pts)[0].max()
        return max(float(d1), float(d2))

    best_z, best_d = None, math.inf
    for zx in range(x_lo, x_hi + 1, 4):
        for zy in range(y_lo, y_hi + 1, 4):
            d = dist_at((zx, zy))
            if d < best_d - 1e-12:
                best_d, best_z = d, (zx, zy)
    cx, cy = best_z
    best_z = None
    best_d = math.inf
    for zx in range(cx - 4, cx + 5):
        for zy in range(cy - 4, cy + 5):
            d = dist_at((zx, zy))
            if d < best_d - 1e-12 or (abs(d - best_d) <= 1e-12 and (zx, zy) < best_z):
                best_d, best_z = d, (zx, zy)
    return best_d, best_z


def derive_radial_constants(w: WulffProfile, inner_margin=0.8, outer_margin=1.25):
    """(c1, C1) radial sandwich constants from the unit-area boundary radii."""
    radii = [math.hypot(x, y) for x, y in w.polygon]
    c1 = inner_margin * min(radii)
    C1 = outer_margin * max(radii)
    return c1, C1


def isotropic_profile(xi_value: float = 1.0, n_dirs: int = 64) -> WulffProfile:
    """Constant-xi profile; handy as a fixture and a q=1 stand-in."""
    dirs = [
        (math.cos(a), math.sin(a))
        for a in np.linspace(0.0, 2 * math.pi, n_dirs, endpoint=False)
    ]
    xi = XiSamples(dirs, [xi_value] * n_dirs, [0.0] * n_dirs, (0, 0))
    return build_wulff(xi)


def profile_cache_path(cache_dir, params: RcmParams, fit_range, trials) -> Path:
    name = f"wulff_p{params.p:.4f}_q{params.q:.3f}_k{fit_range[0]}-{fit_range[1]}_t{trials}.json"
    return Path(cache_dir) / name


def load_or_build_profile(cache_dir, params: RcmParams, fit_range, trials, rng,
                          n_octant: int = 9) -> WulffProfile:
    """Cache-aware profile construction from octant xi measurements."""
    path = profile_cache_path(cache_dir, params, fit_range, trials)
    if path.exists():
        return WulffProfile.from_json(path.read_text())
    dirs = octant_directions(n_octant)
    vals, errs = [], []
    for d in dirs:
        v, s = estimate_xi(params, d, fit_range, trials, rng)
        vals.append(v)
        errs.append(s)
    xi = unfold_octant(dirs, vals, errs)
    profile = build_wulff(xi)
    profile.params = {"p": params.p, "q": params.q, "fit_range": list(fit_range), "trials": trials}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(profile.to_json())
    return profile
