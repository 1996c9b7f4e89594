"""Outermost-circuit extraction and scalar circuit geometry.

Extraction is dual flood fill: faces are flooded inward from the window rim,
crossing only non-open edges.  A point is strictly enclosed by an open
circuit iff its four incident faces stay dry, and the outermost such circuit
is the outer boundary of the plain 4-adjacency component of dry faces
containing them.  For a rim-connected flood that boundary can never pinch at
a vertex (two diagonal flooded channels would have to reach the rim on both
sides of a connected dry component), so the traced boundary is always a
simple circuit of open edges.

The southwest-centred variant restricts crossings to edges usable by a
circuit whose lexicographic minimum is the anchor vertex and additionally
floods from the three faces just outside that corner.  Seed water can get
trapped, which may pinch the dry component; pinches are resolved by
enumerating the two non-crossing pairings at each pinch vertex and keeping
the maximal-area admissible cycle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np
from scipy import ndimage

from . import geom
from .lattice import EAST, NORTH, EdgeConfig, EdgeId, Window, edge_grids, _edge_between


@dataclass(frozen=True)
class Circuit:
    """Simple closed lattice polygon, counterclockwise, first vertex not repeated."""

    vertices: tuple

    def __post_init__(self):
        v = self.vertices
        if len(v) < 4:
            raise ValueError("a lattice circuit has at least 4 vertices")
        if len(set(v)) != len(v):
            raise ValueError("circuit revisits a vertex")
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
                raise ValueError("consecutive circuit vertices must be nearest neighbours")
        if geom.polygon_area2(v) <= 0:
            raise ValueError("circuit must be counterclockwise with positive area")

    @staticmethod
    def from_vertex_cycle(cycle) -> "Circuit":
        """Normalize an (either-orientation) vertex cycle: ccw, starting at the SW corner."""
        pts = list(cycle)
        if geom.polygon_area2(pts) < 0:
            pts.reverse()
        start = min(range(len(pts)), key=lambda i: pts[i])
        return Circuit(tuple(pts[start:] + pts[:start]))

    def __len__(self):
        return len(self.vertices)

    @cached_property
    def vertex_set(self):
        return frozenset(self.vertices)

    @cached_property
    def edges(self):
        v = self.vertices
        return frozenset(
            _edge_between(v[i], v[(i + 1) % len(v)]) for i in range(len(v))
        )

    def translated(self, t) -> "Circuit":
        return Circuit.from_vertex_cycle([(x + t[0], y + t[1]) for x, y in self.vertices])


def sw_corner(c: Circuit):
    """Lexicographically minimal vertex: minimal x, ties by minimal y."""
    return min(c.vertices)


def interior_area(c: Circuit) -> float:
    """Lebesgue measure of the region enclosed by the circuit (shoelace)."""
    return geom.polygon_area2(c.vertices) / 2.0


def convex_hull(c: Circuit):
    """Counterclockwise hull of the circuit's vertices, collinear points removed."""
    h = geom.convex_hull(c.vertices)
    if len(h) < 3:
        raise AssertionError("valid circuits cannot have a collinear hull")
    return h


def local_roughness(c: Circuit, v) -> float:
    """Distance from circuit vertex v to the hull boundary."""
    if v not in c.vertex_set:
        raise ValueError(f"{v} is not a vertex of the circuit")
    return geom.dist_to_polygon_boundary(v, convex_hull(c))


def mlr(c: Circuit) -> float:
    """Maximum local roughness: deepest vertex inside the hull."""
    hull = convex_hull(c)
    return max(geom.dist_to_polygon_boundary(v, hull) for v in c.vertices)


def mfl(c: Circuit) -> float:
    """Maximum facet length: longest straight edge of the hull polygon."""
    hull = convex_hull(c)
    best = 0
    n = len(hull)
    for i in range(n):
        ax, ay = hull[i]
        bx, by = hull[(i + 1) % n]
        d2 = (bx - ax) ** 2 + (by - ay) ** 2
        if d2 > best:
            best = d2
    return math.sqrt(best)


hausdorff_distance = geom.hausdorff_distance


def circuit_to_json(c: Circuit) -> str:
    return json.dumps([[int(x), int(y)] for x, y in c.vertices])


def circuit_from_json(text: str) -> Circuit:
    return Circuit(tuple((int(x), int(y)) for x, y in json.loads(text)))


def interior_faces(c: Circuit):
    """Unit faces (by SW corner) strictly inside the circuit."""
    xs = [v[0] for v in c.vertices]
    ys = [v[1] for v in c.vertices]
    verts2 = [(2 * x, 2 * y) for x, y in c.vertices]
    faces = set()
    for fx in range(min(xs), max(xs)):
        for fy in range(min(ys), max(ys)):
            if geom.strictly_inside((2 * fx + 1, 2 * fy + 1), verts2):
                faces.add((fx, fy))
    return faces


# ---------------------------------------------------------------------------
# dual flood machinery
# ---------------------------------------------------------------------------


def _flood_box(window: Window, blk_e: np.ndarray, blk_n: np.ndarray, box, seeds=(),
               ring_sea: bool = True):
    """Flood a padded face box from its rim (plus seeds) across unblocked sides.

    box = (fx0, fx1, fy0, fy1): faces fx in [fx0, fx1), fy in [fy0, fy1),
    clamped by the caller to the window's face range [-L, L-1].  The returned
    sea grid is indexed [fx - fx0 + 1, fy - fy0 + 1].

    With ring_sea (the default) the ring is wet: where the box side
    coincides with the window edge it is the true exterior and crossings
    respect the window-boundary edges; a box side strictly inside the window
    is an exterior proxy whose crossings are free (the caller guarantees no
    enclosed face can touch it).  Without ring_sea the flood must certify
    genuine wetness from the seeds alone, so proxy sides are sealed shut
    (a path may not shortcut through the unknown region outside the box)
    while true window-edge sides stay wet behind their real edges.
    """
    L = window.L
    fx0, fx1, fy0, fy1 = box
    nx, ny = fx1 - fx0, fy1 - fy0
    blk_x = np.zeros((nx + 1, ny + 2), dtype=bool)  # between padded columns
    blk_y = np.zeros((nx + 2, ny + 1), dtype=bool)  # between padded rows
    # interior column crossings (fx, fy) -> (fx+1, fy): north edge at (fx+1, fy)
    blk_x[1:nx, 1 : ny + 1] = blk_n[fx0 + 1 + L : fx0 + nx + L, fy0 + L : fy0 + ny + L]
    # interior row crossings (fx, fy) -> (fx, fy+1): east edge at (fx, fy+1)
    blk_y[1 : nx + 1, 1:ny] = blk_e[fx0 + L : fx0 + nx + L, fy0 + 1 + L : fy0 + ny + L]
    # window-edge sides: ring crossings blocked by the real boundary edges
    if fx0 == -L:
        blk_x[0, 1 : ny + 1] = blk_n[0, fy0 + L : fy0 + ny + L]
    if fx1 == L:
        blk_x[nx, 1 : ny + 1] = blk_n[2 * L, fy0 + L : fy0 + ny + L]
    if fy0 == -L:
        blk_y[1 : nx + 1, 0] = blk_e[fx0 + L : fx0 + nx + L, 0]
    if fy1 == L:
        blk_y[1 : nx + 1, ny] = blk_e[fx0 + L : fx0 + nx + L, 2 * L]
    sea = np.zeros((nx + 2, ny + 2), dtype=bool)
    if ring_sea:
        sea[0, :] = sea[-1, :] = True
        sea[:, 0] = sea[:, -1] = True
    else:
        # genuine-wetness mode: true exterior sides are wet, proxy sides sealed
        if fx0 == -L:
            sea[0, :] = True
        else:
            blk_x[0, :] = True
        if fx1 == L:
            sea[-1, :] = True
        else:
            blk_x[nx, :] = True
        if fy0 == -L:
            sea[:, 0] = True
        else:
            blk_y[:, 0] = True
        if fy1 == L:
            sea[:, -1] = True
        else:
            blk_y[:, ny] = True
    for fx, fy in seeds:
        if fx0 - 1 <= fx <= fx1 and fy0 - 1 <= fy <= fy1:
            sea[fx - fx0 + 1, fy - fy0 + 1] = True
    while True:
        grow = np.zeros_like(sea)
        grow[1:, :] |= sea[:-1, :] & ~blk_x
        grow[:-1, :] |= sea[1:, :] & ~blk_x
        grow[:, 1:] |= sea[:, :-1] & ~blk_y
        grow[:, :-1] |= sea[:, 1:] & ~blk_y
        new = grow & ~sea
        if not new.any():
            return sea
        sea |= new


def _full_box(window: Window):
    L = window.L
    return (-L, L, -L, L)


def _component_boundary_edges(mask: np.ndarray, fx0: int, fy0: int):
    """Boundary edges of a dry-face component mask over faces [fx0.., fy0..)."""
    nx, ny = mask.shape
    mp = np.zeros((nx + 2, ny + 2), dtype=bool)
    mp[1 : nx + 1, 1 : ny + 1] = mask
    edges = []
    # east edge at (x, y): separates faces (x, y) above and (x, y - 1) below
    diff = mp[1 : nx + 1, 1:] ^ mp[1 : nx + 1, :-1]
    for gx, gy in zip(*np.nonzero(diff)):
        edges.append(EdgeId(int(gx) + fx0, int(gy) + fy0, EAST))
    # north edge at (x, y): separates faces (x, y) right and (x - 1, y) left
    diff = mp[1:, 1 : ny + 1] ^ mp[:-1, 1 : ny + 1]
    for gx, gy in zip(*np.nonzero(diff)):
        edges.append(EdgeId(int(gx) + fx0, int(gy) + fy0, NORTH))
    return edges


def _edge_adjacency(edges):
    adj: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for e in edges:
        a, b = e.endpoints
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    return adj


def _walk_degree_two(adj, start):
    """Trace the unique cycle of a degree-2 edge set from `start`."""
    cycle = [start]
    prev, cur = None, start
    while True:
        nbrs = adj[cur]
        nxt = nbrs[0] if nbrs[0] != prev else nbrs[1]
        if nxt == start:
            return cycle
        cycle.append(nxt)
        prev, cur = cur, nxt


def extract_outermost_circuit(config: EdgeConfig, point):
    """Outermost open circuit strictly enclosing `point`, or None.

    The point must be inside the window by a margin of at least 1.
    """
    w = config.window
    px, py = point
    if abs(px) > w.L - 1 or abs(py) > w.L - 1:
        raise ValueError("point must be inside the window by margin >= 1")
    east, north = edge_grids(config)
    box = _full_box(w)
    fx0, _, fy0, _ = box
    sea = _flood_box(w, east, north, box)
    four = [(px, py), (px - 1, py), (px, py - 1), (px - 1, py - 1)]
    if any(sea[fx - fx0 + 1, fy - fy0 + 1] for fx, fy in four):
        return None
    dry = ~sea[1:-1, 1:-1]
    labels, _ = ndimage.label(dry)
    lab = {labels[fx - fx0, fy - fy0] for fx, fy in four}
    assert len(lab) == 1 and 0 not in lab
    mask = labels == lab.pop()
    edges = _component_boundary_edges(mask, fx0, fy0)
    adj = _edge_adjacency(edges)
    degs = {len(v) for v in adj.values()}
    assert degs == {2}, "rim flood boundary cannot pinch"
    cycle = _walk_degree_two(adj, min(adj))
    circuit = Circuit.from_vertex_cycle(cycle)
    assert all(config.is_open(e) for e in circuit.edges)
    return circuit


_SCAN_TABLES: dict = {}


def _scan_tables(window: Window, anchor):
    """Flat per-face crossing tables for the anchored event scan.

    For each in-window face (id = (fx+L)*2L + fy+L) and direction, records
    the neighbouring face id (-1 when it lies outside the window) and the
    state index of the crossing edge when that edge can block (exists, both
    endpoints lex >= anchor), else -1.
    """
    key = (window.L, anchor)
    hit = _SCAN_TABLES.get(key)
    if hit is not None:
        return hit
    from .lattice import _edge_tables

    L = window.L
    t = _edge_tables(L)
    side = 2 * L
    cx, cy = anchor

    def lex_ok(v):
        return v[0] > cx or (v[0] == cx and v[1] >= cy)

    nbr = [0] * (4 * side * side)
    eix = [-1] * (4 * side * side)
    for fx in range(-L, L):
        for fy in range(-L, L):
            f = (fx + L) * side + (fy + L)
            # east, west crossings block on north edges; north, south on east
            spec = (
                (fx + 1, fy, (fx + 1, fy), True),
                (fx - 1, fy, (fx, fy), True),
                (fx, fy + 1, (fx, fy + 1), False),
                (fx, fy - 1, (fx, fy), False),
            )
            for d, (gx, gy, base, is_north) in enumerate(spec):
                k = 4 * f + d
                nbr[k] = (gx + L) * side + (gy + L) if -L <= gx < L and -L <= gy < L else -1
                bx, by = base
                if is_north:
                    exists = -L <= bx <= L and -L <= by <= L - 1
                    idx = int(t.idx_north[bx + L, by + L]) if exists else -1
                    ok = exists and lex_ok((bx, by)) and lex_ok((bx, by + 1))
                else:
                    exists = -L <= bx <= L - 1 and -L <= by <= L
                    idx = int(t.idx_east[bx + L, by + L]) if exists else -1
                    ok = exists and lex_ok((bx, by)) and lex_ok((bx + 1, by))
                eix[k] = idx if ok else -1
    seeds = set()
    for fx, fy in ((cx - 1, cy), (cx - 1, cy - 1), (cx, cy - 1)):
        if -L <= fx < L and -L <= fy < L:
            seeds.add((fx + L) * side + (fy + L))
    start = (cx + L) * side + (cy + L)
    tables = (nbr, eix, seeds, start, side)
    _SCAN_TABLES[key] = tables
    return tables


def anchored_event_scan(config: EdgeConfig, anchor, area_min: float,
                        face_cap: int = 1600):
    """Fast exact pre-check of the anchored-circuit area event.

    Returns 'reject' when no anchored circuit traps area >= area_min
    (certain), 'candidate' when the enclosed dry region already reaches the
    target area, and 'inconclusive' when a scan budget was hit.  The scan
    grows the anchor's NE-face pocket across non-blocking crossings, then
    resolves every wall by probing the far side (merging sealed pockets,
    memoizing escaped ones), which reproduces the dual flood's dry component
    exactly but touches only the droplet-sized neighbourhood.
    """
    nbr, eix, seeds, start, _ = _scan_tables(config.window, anchor)
    st = config.states
    if start in seeds:
        return "reject"

    def pocket(seed_face, sea, budget):
        """(sealed, faces, walls) of the non-crossing pocket of seed_face."""
        faces = {seed_face}
        walls = []
        stack = [seed_face]
        while stack:
            f = stack.pop()
            base = 4 * f
            for d in range(4):
                k = base + d
                i = eix[k]
                g = nbr[k]
                if i >= 0 and st[i]:
                    walls.append(g)
                    continue
                if g < 0 or g in seeds or g in sea:
                    return False, faces, walls
                if g not in faces:
                    if len(faces) >= budget:
                        return None, faces, walls
                    faces.add(g)
                    stack.append(g)
        return True, faces, walls

    sea: set = set()
    sealed, merged, walls = pocket(start, sea, face_cap)
    if sealed is None:
        return "inconclusive"
    if not sealed:
        return "reject"
    budget = face_cap
    queue = [g for g in walls if g >= 0]
    while queue:
        g = queue.pop()
        if g < 0 or g in merged or g in sea or g in seeds:
            continue
        ok, faces, more = pocket(g, sea, budget)
        if ok is None:
            return "inconclusive"
        if ok:
            merged |= faces
            queue.extend(w for w in more if w >= 0)
            budget -= len(faces)
            if budget <= 0 or len(merged) > 4 * area_min + 400:
                return "inconclusive"
        else:
            sea |= faces
    if len(merged) < area_min:
        return "reject"
    return "candidate"


def _lex_ge_mask(window: Window, anchor):
    """Vertex grid mask [x+L, y+L]: lexicographically >= anchor."""
    L = window.L
    cx, cy = anchor
    xs = np.arange(-L, L + 1)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    return (gx > cx) | ((gx == cx) & (gy >= cy))


def extract_sw_circuit(config: EdgeConfig, anchor, min_area: float = 0.0,
                       cluster_cap: int = 4000, box=None, grids=None):
    """Outermost open circuit whose lexicographic minimum vertex is `anchor`.

    Returns None when no such circuit exists.  Any admissible circuit must
    use the east and north edges at the anchor and keep the anchor's NW, SW
    and SE faces outside; the flood encodes exactly those constraints.

    Every admissible circuit lives inside the open cluster of the anchor, so
    when a capped cluster scan completes, the flood is cropped to the
    cluster's bounding box; `min_area` allows an early reject on the box.
    Callers holding a valid face box / up-to-date grids may pass them in to
    skip the scan (the box must contain the anchor cluster's bounding box
    plus one face of margin).
    """
    w = config.window
    cx, cy = anchor
    L = w.L
    if not (-L <= cx <= L - 1 and -L <= cy <= L - 1):
        return None
    if not (config.is_open(EdgeId(cx, cy, EAST)) and config.is_open(EdgeId(cx, cy, NORTH))):
        return None
    if box is None:
        from .lattice import cluster_scan

        box = _full_box(w)
        complete, n_verts, bbox = cluster_scan(config, anchor, cluster_cap)
        if complete:
            if min_area > 0:
                if n_verts < 4.0 * math.sqrt(min_area):
                    return None
                if (bbox[1] - bbox[0]) * (bbox[3] - bbox[2]) < min_area:
                    return None
            # faces possibly enclosed lie in [x_lo, x_hi-1] x [y_lo, y_hi-1];
            # one face of margin keeps the free-crossing proxy ring detached
            box = (
                max(bbox[0] - 1, -L), min(bbox[1] + 1, L),
                max(bbox[2] - 1, -L), min(bbox[3] + 1, L),
            )
    fx0, _, fy0, _ = box
    east, north = grids if grids is not None else edge_grids(config)
    lex = _lex_ge_mask(w, anchor)
    east_ok = east & lex[:-1, :] & lex[1:, :]
    north_ok = north & lex[:, :-1] & lex[:, 1:]
    seeds = [(cx - 1, cy), (cx - 1, cy - 1), (cx, cy - 1)]
    sea = _flood_box(w, east_ok, north_ok, box, seeds=seeds)
    if sea[cx - fx0 + 1, cy - fy0 + 1]:
        return None
    dry = ~sea[1:-1, 1:-1]
    labels, _ = ndimage.label(dry)
    mask = labels == labels[cx - fx0, cy - fy0]
    edges = _component_boundary_edges(mask, fx0, fy0)
    adj = _edge_adjacency(edges)
    best = None
    for cycle in _candidate_cycles(adj, anchor):
        try:
            circuit = Circuit.from_vertex_cycle(cycle)
        except ValueError:
            continue
        if sw_corner(circuit) != anchor:
            continue
        if not all(config.is_open(e) for e in circuit.edges):
            continue
        if not geom.strictly_inside(
            (2 * cx + 1, 2 * cy + 1), [(2 * x, 2 * y) for x, y in circuit.vertices]
        ):
            continue
        if best is None or interior_area(circuit) > interior_area(best):
            best = circuit
    return best


def _candidate_cycles(adj, anchor):
    """Cycles through `anchor` in the boundary edge set, splitting pinch vertices.

    Degree-2 boundaries give one cycle.  Each degree-4 (pinch) vertex admits
    two non-crossing pairings of its incident edges; all combinations are
    expanded (pinches are rare, so the product stays tiny).
    """
    if anchor not in adj:
        return
    pinches = [v for v, nb in adj.items() if len(nb) == 4]
    if not pinches:
        if len(adj[anchor]) == 2:
            yield _walk_degree_two(adj, anchor)
        return
    if len(pinches) > 12:
        raise AssertionError("unreasonable pinch count in boundary trace")

    def pairings(v):
        # neighbours sorted by direction angle around v; non-crossing pairings
        nb = sorted(adj[v], key=lambda u: math.atan2(u[1] - v[1], u[0] - v[0]))
        yield {nb[0]: nb[1], nb[1]: nb[0], nb[2]: nb[3], nb[3]: nb[2]}
        yield {nb[0]: nb[3], nb[3]: nb[0], nb[1]: nb[2], nb[2]: nb[1]}

    for combo in product(*(list(pairings(v)) for v in pinches)):
        rules = dict(zip(pinches, combo))
        cycle = _walk_with_rules(adj, rules, anchor)
        if cycle is not None:
            yield cycle


def _walk_with_rules(adj, rules, start):
    # the anchor always has degree 2 (exactly its east and north edges)
    cycle = [start]
    seen = {start}
    prev, cur = start, adj[start][0]
    while cur != start:
        if cur in seen:
            return None
        cycle.append(cur)
        seen.add(cur)
        nb = adj[cur]
        if len(nb) == 2:
            nxt = nb[0] if nb[0] != prev else nb[1]
        else:
            nxt = rules[cur][prev]
        prev, cur = cur, nxt
    return cycle if len(cycle) >= 4 else None
