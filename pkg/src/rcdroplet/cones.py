"""Angular sectors, forward/backward cones, and regeneration sites.

A vertex v of a circuit (or of the open cluster carrying it) is a
regeneration site for cone constants (q, c) when every point of the shape
inside the origin-rooted cone of half-aperture c about v stays within the
union of the forward and backward cones of half-aperture pi/2 - q at v.
Such sites see the radial ray through them cut the shape only at v, which
is what makes sector surgery between a pair of sites clean.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .geom import TWO_PI, angle_between, arg, perp

_ANG_EPS = 1e-12


@dataclass(frozen=True)
class ConeSpec:
    """Cone with a given apex, axis direction and angular half-aperture."""

    apex: tuple
    axis: tuple
    half_aperture: float

    def __post_init__(self):
        if not 0.0 <= self.half_aperture < math.pi:
            raise ValueError("half_aperture must lie in [0, pi)")
        if self.axis == (0, 0):
            raise ValueError("axis must be nonzero")

    def contains(self, w) -> bool:
        d = (w[0] - self.apex[0], w[1] - self.apex[1])
        if d == (0, 0):
            return True
        return angle_between(d, self.axis) <= self.half_aperture + _ANG_EPS


def in_sector(x, y, z) -> bool:
    """Membership of z in the closed angular sector from arg(x) to arg(y), apex 0."""
    if x == (0, 0) or y == (0, 0):
        raise ValueError("sector boundary points must be nonzero")
    if z == (0, 0) or tuple(z) == (0.0, 0.0):
        return True
    a = arg(x)
    b = arg(y)
    if b < a:
        b += TWO_PI
    t = arg(z)
    if t < a - _ANG_EPS:
        t += TWO_PI
    return a - _ANG_EPS <= t <= b + _ANG_EPS


def in_forward_cone(v, q: float, w) -> bool:
    """w within angle pi/2 - q of the counterclockwise perpendicular at v."""
    if v == (0, 0):
        raise ValueError("cone base point must be nonzero")
    if not 0.0 < q < math.pi / 2:
        raise ValueError("q must lie in (0, pi/2)")
    d = (w[0] - v[0], w[1] - v[1])
    if d == (0, 0):
        return True
    return angle_between(d, perp(v)) <= math.pi / 2 - q + _ANG_EPS


def in_backward_cone(v, q: float, w) -> bool:
    """w within angle pi/2 - q of the clockwise perpendicular at v."""
    if v == (0, 0):
        raise ValueError("cone base point must be nonzero")
    if not 0.0 < q < math.pi / 2:
        raise ValueError("q must lie in (0, pi/2)")
    d = (w[0] - v[0], w[1] - v[1])
    if d == (0, 0):
        return True
    px, py = perp(v)
    return angle_between(d, (-px, -py)) <= math.pi / 2 - q + _ANG_EPS


def max_angular_gap(args) -> float:
    """Largest cyclic gap between consecutive argument values; 2*pi when empty."""
    vals = sorted(args)
    if not vals:
        return TWO_PI
    if len(vals) == 1:
        return TWO_PI
    gaps = [vals[i + 1] - vals[i] for i in range(len(vals) - 1)]
    gaps.append(vals[0] + TWO_PI - vals[-1])
    return max(gaps)


@dataclass
class RegenerationReport:
    sites: list          # [(x, y, arg), ...] sorted by argument
    theta_max: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "sites": [[int(x), int(y), a] for (x, y), a in self.sites_pairs],
                "theta_max": self.theta_max,
            }
        )

    @property
    def sites_pairs(self):
        return [((s[0], s[1]), s[2]) for s in self.sites]

    @property
    def site_set(self):
        return {(s[0], s[1]) for s in self.sites}


def shape_edges(shape):
    """Edge list (vertex pairs) of a Circuit or of an iterable of EdgeIds."""
    from .circuits import Circuit

    if isinstance(shape, Circuit):
        v = shape.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]
    return [e.endpoints for e in shape]


def sample_shape(edges, density: int = 8, origin=(0, 0)):
    """Dense sample of a union of closed unit edges, origin-relative coordinates."""
    pts = set()
    for a, b in edges:
        pts.add(a)
        pts.add(b)
    arr = [(x - origin[0], y - origin[1]) for x, y in pts]
    ts = [(j + 1) / (density + 1) for j in range(density)]
    for a, b in edges:
        ax, ay = a[0] - origin[0], a[1] - origin[1]
        bx, by = b[0] - origin[0], b[1] - origin[1]
        for t in ts:
            arr.append((ax + t * (bx - ax), ay + t * (by - ay)))
    return np.array(arr, dtype=float)


def _cone_union_ok(sample: np.ndarray, v, q: float, c: float) -> bool:
    """All sample points inside the c-cone about v lie in the forward/backward cones."""
    vx, vy = v
    varg = math.atan2(vy, vx)
    pts_arg = np.arctan2(sample[:, 1], sample[:, 0])
    delta = np.abs((pts_arg - varg + math.pi) % TWO_PI - math.pi)
    near = delta <= c + _ANG_EPS
    if not near.any():
        return True
    d = sample[near] - np.array([vx, vy])
    nz = (d[:, 0] != 0) | (d[:, 1] != 0)
    d = d[nz]
    if d.size == 0:
        return True
    axis = np.array([-vy, vx], dtype=float)
    dots = d @ axis
    crosses = d[:, 0] * axis[1] - d[:, 1] * axis[0]
    ang = np.arctan2(np.abs(crosses), dots)
    lim = math.pi / 2 - q + _ANG_EPS
    ok = (ang <= lim) | (ang >= math.pi - lim)
    return bool(ok.all())


def is_regeneration_site(shape_sample: np.ndarray, v, q: float, c: float, origin=(0, 0)) -> bool:
    """Definition check for a single vertex against a precomputed shape sample."""
    vv = (v[0] - origin[0], v[1] - origin[1])
    if vv == (0, 0):
        return False
    return _cone_union_ok(shape_sample, vv, q, c)


def regeneration_sites(
    shape, q: float, c: float, origin=(0, 0), density: int = 8
) -> RegenerationReport:
    """All shape vertices satisfying the cone condition, plus the largest gap.

    The shape is treated as the union of its closed unit edges, tested on
    `density` interior samples per edge plus both endpoints.
    """
    from .circuits import Circuit

    if isinstance(shape, Circuit):
        verts2 = [(2 * x, 2 * y) for x, y in shape.vertices]
        ox, oy = origin
        from .geom import strictly_inside

        if not strictly_inside((2 * ox, 2 * oy), verts2):
            raise ValueError("origin must lie strictly inside the circuit")
    edges = shape_edges(shape)
    sample = sample_shape(edges, density=density, origin=origin)
    vertices = set()
    for a, b in edges:
        vertices.add(a)
        vertices.add(b)
    sites = []
    for v in vertices:
        if is_regeneration_site(sample, v, q, c, origin=origin):
            sites.append((v[0], v[1], arg((v[0] - origin[0], v[1] - origin[1]))))
    sites.sort(key=lambda s: s[2])
    return RegenerationReport(sites, max_angular_gap([s[2] for s in sites]))
