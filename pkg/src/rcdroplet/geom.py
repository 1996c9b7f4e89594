"""Exact planar geometry primitives on lattice data.

All inputs that come from the lattice are integer (or half-integer) pairs.
Within the coordinate ranges this package works at (|coord| < 2^20), every
cross product and squared distance below is exactly representable in
float64, so comparisons are tie-free without rational arithmetic.  Square
roots are taken only at the very end of a computation.
"""

from __future__ import annotations

import math

import numpy as np

Point = tuple[float, float]

TWO_PI = 2.0 * math.pi


def cross(o, a, b):
    """Signed area x2 of the triangle (o, a, b); >0 means ccw turn."""
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def polygon_area2(vertices):
    """Twice the signed shoelace area of a closed polygon (last edge implicit)."""
    s = 0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return s


def polygon_area(vertices):
    """Unsigned shoelace area."""
    return abs(polygon_area2(vertices)) / 2.0


def convex_hull(points):
    """Counterclockwise convex hull (monotone chain), collinear points dropped."""
    pts = sorted(set((p[0], p[1]) for p in points))
    if len(pts) <= 2:
        return list(pts)
    lower = []
    for p in pts:
        while len(lower) > 1 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) > 1 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def point_segment_dist2(p, a, b):
    """Squared distance from p to the closed segment [a, b]."""
    px, py = p
    ax, ay = a
    bx, by = b
    vx, vy = bx - ax, by - ay
    wx, wy = px - ax, py - ay
    seg2 = vx * vx + vy * vy
    if seg2 == 0:
        return wx * wx + wy * wy
    t = wx * vx + wy * vy
    if t <= 0:
        return wx * wx + wy * wy
    if t >= seg2:
        dx, dy = px - bx, py - by
        return dx * dx + dy * dy
    c = wx * vy - wy * vx
    return (c * c) / seg2


def dist_to_polygon_boundary(p, vertices):
    """Distance from p to the boundary polyline of a closed polygon."""
    n = len(vertices)
    best = math.inf
    for i in range(n):
        d2 = point_segment_dist2(p, vertices[i], vertices[(i + 1) % n])
        if d2 < best:
            best = d2
    return math.sqrt(best)


def point_in_polygon(p, vertices):
    """Even-odd test; points exactly on the boundary are classified as inside.

    Use `strictly_inside` when boundary points must be excluded.
    """
    if on_polygon_boundary(p, vertices):
        return True
    return _winding_parity(p, vertices)


def strictly_inside(p, vertices):
    """True iff p lies in the open interior of the polygon."""
    if on_polygon_boundary(p, vertices):
        return False
    return _winding_parity(p, vertices)


def on_polygon_boundary(p, vertices):
    n = len(vertices)
    for i in range(n):
        if point_segment_dist2(p, vertices[i], vertices[(i + 1) % n]) == 0:
            return True
    return False


def _winding_parity(p, vertices):
    px, py = p
    inside = False
    n = len(vertices)
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        if (ay > py) != (by > py):
            # x coordinate of the crossing with the horizontal through p
            xc = ax + (py - ay) * (bx - ax) / (by - ay)
            if xc > px:
                inside = not inside
    return inside


def clip_halfplane(poly, a, b, inside_point):
    """Clip a convex polygon by the line through a, b, keeping inside_point's side."""
    side = cross(a, b, inside_point)
    if side == 0:
        raise ValueError("inside_point lies on the clipping line")
    keep_positive = side > 0
    out = []
    n = len(poly)
    for i in range(n):
        p = poly[i]
        q = poly[(i + 1) % n]
        sp = cross(a, b, p)
        sq = cross(a, b, q)
        pin = (sp >= 0) if keep_positive else (sp <= 0)
        qin = (sq >= 0) if keep_positive else (sq <= 0)
        if pin:
            out.append(p)
        if pin != qin:
            t = sp / (sp - sq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def arg(v):
    """Argument of v in [0, 2*pi)."""
    a = math.atan2(v[1], v[0])
    if a < 0:
        a += TWO_PI
    return a


def angle_between(u, v):
    """Unsigned angle in [0, pi] between nonzero vectors u and v."""
    d = u[0] * v[0] + u[1] * v[1]
    c = u[0] * v[1] - u[1] * v[0]
    return math.atan2(abs(c), d)


def perp(v):
    """Counterclockwise quarter turn of v."""
    return (-v[1], v[0])


def ray_segment_hit(theta, a, b):
    """Ray parameter t > 0 where the ray at angle theta from 0 meets [a, b].

    Returns None when there is no intersection.  The returned t is the
    Euclidean distance from the origin to the hit point.
    """
    dx, dy = math.cos(theta), math.sin(theta)
    ax, ay = a
    bx, by = b
    ex, ey = bx - ax, by - ay
    denom = dx * ey - dy * ex  # d x e
    if denom == 0:
        # Parallel: collinear overlap reduces to the nearer endpoint.
        if ax * dy - ay * dx != 0:
            return None
        ts = [ax * dx + ay * dy, bx * dx + by * dy]
        ts = [t for t in ts if t > 0]
        return min(ts) if ts else None
    s = (ax * dy - ay * dx) / denom   # (a x d) / (d x e)
    if s < 0 or s > 1:
        return None
    t = (ax * ey - ay * ex) / denom   # (a x e) / (d x e)
    if t <= 0:
        return None
    return t


def hausdorff_distance(a_pts, b_pts):
    """Hausdorff distance between two nonempty finite point sets."""
    a = np.asarray(a_pts, dtype=float)
    b = np.asarray(b_pts, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("hausdorff_distance requires nonempty point sets")
    a = a.reshape(-1, 2)
    b = b.reshape(-1, 2)
    from scipy.spatial import cKDTree

    d_ab = cKDTree(b).query(a)[0].max()
    d_ba = cKDTree(a).query(b)[0].max()
    return float(max(d_ab, d_ba))


def densify_polyline(vertices, spacing, closed=True):
    """Points along a polyline with at most `spacing` between consecutive samples."""
    pts = []
    n = len(vertices)
    m = n if closed else n - 1
    for i in range(m):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        seg = math.hypot(bx - ax, by - ay)
        k = max(1, int(math.ceil(seg / spacing)))
        for j in range(k):
            t = j / k
            pts.append((ax + t * (bx - ax), ay + t * (by - ay)))
    if not closed:
        pts.append(tuple(vertices[-1]))
    return pts
