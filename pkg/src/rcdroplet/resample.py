"""Sector-resampling chain over southwest-centred area-conditioned droplets.

The circle is cut into sectors of angular width theta_n.  A stage picks two
rays inside a sector, walks them out to the conditioned circuit, and, when
both landing vertices regenerate the carrying cluster, resamples the sector
configuration conditionally on (i) the endpoints reconnecting inside the
sector, (ii) their common cluster staying inside the forward/backward cones
at the endpoints, and (iii) the spliced circuit still trapping the target
area.  The conditional is realized by an inner single-edge heat-bath chain
that rejects event-violating flips; it is reversible for the constrained
conditional law, and since its start state already satisfies the events the
stage leaves the conditioned measure exactly invariant for any budget.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from . import geom
from .circuits import (
    Circuit,
    convex_hull,
    extract_sw_circuit,
    interior_area,
    local_roughness,
    mfl,
    mlr,
)
from .cones import (
    in_backward_cone,
    in_forward_cone,
    is_regeneration_site,
    max_angular_gap,
    regeneration_sites,
    sample_shape,
)
from .dynamics import RcmParams, conditional_open_prob
from .lattice import EdgeConfig, _edge_tables, edge_from_index, open_cluster


@dataclass
class ResampleParams:
    """Constant ledger for the sector chain, with the derived schedule values.

    theta_n = chi n^{-1/3} (ln n)^{1/3}; m_n = floor(2 pi / theta_n) - 1;
    m_n_prime counts the usable sectors (j >= 1) inside the first quadrant;
    s3 = n^{eps1}; s2 = (chi/4) n^{eps1}; u_chi defaults to chi^{2/3}.
    """

    n: int
    chi: float = 0.5
    eps: float = 0.07
    eps0: float = 0.1
    eps1: Optional[float] = None
    q0: Optional[float] = None
    c0: Optional[float] = None
    c1: float = 0.45
    C1: float = 0.80
    u_chi: Optional[float] = None
    c_sw: Optional[tuple] = None
    psi_budget: int = 12

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("sector math requires n >= 8 (so ln n > 2)")
        if not 0 < self.eps < 2 / 3:
            raise ValueError("eps must lie in (0, 2/3)")
        if self.eps1 is None:
            self.eps1 = 2.0 * self.eps / 3.0
        if not 0 < self.eps1 < 2 / 3:
            raise ValueError("eps1 must lie in (0, 2/3)")
        if self.u_chi is None:
            self.u_chi = self.chi ** (2.0 / 3.0)
        if self.q0 is None:
            self.q0 = min(0.1, 0.375 * self.c1 / self.C1)
        if self.c0 is None:
            self.c0 = self.q0 / 4.0
        if not 0 < self.q0 < math.pi / 2:
            raise ValueError("q0 must lie in (0, pi/2)")
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")
        if self.c0 >= self.q0 / 2:
            # the coupling c0 < q0/2 backs the asymptotic success-rate
            # bounds; stage invariance needs only the span condition, so a
            # desk-scale preset may decouple the two (see desk_scale)
            warnings.warn(
                "c0 >= q0/2: asymptotic regime constants decoupled",
                stacklevel=2,
            )

    @classmethod
    def desk_scale(cls, n: int, chi: float = 0.5, **kw) -> "ResampleParams":
        """Constants adjusted so the chain actually acts at small n.

        Two desk-scale effects drive the preset.  The wedge span of a
        selected pair is at most theta_n/2 + 2 n^(eps-1), so the angular
        window c0/2 must exceed that, while the asymptotic default keeps
        c0 below ~0.013.  And the cluster cone parameter q0/2 must stay
        small, else near-critical cluster decorations leave no regeneration
        sites at all.  Exact stage invariance requires only span < c0/2 and
        q0 in (0, pi/2); the paper-level coupling c0 < q0/2 is given up,
        which downstream affects only rate constants, not stationarity.
        """
        eps = kw.get("eps", 0.07)
        theta = chi * n ** (-1.0 / 3.0) * math.log(n) ** (1.0 / 3.0)
        # pairs span at most a full sector (crossing selection) or the
        # jittered search interval gap (site selection), whichever is wider
        span_max = max(theta, theta / 2.0 + 2.0 * n ** (eps - 1.0))
        kw.setdefault("q0", 0.24)
        kw.setdefault("c0", 2.1 * span_max)
        import warnings as _w

        with _w.catch_warnings():
            _w.simplefilter("ignore")
            return cls(n=n, chi=chi, **kw)

    @property
    def theta_n(self) -> float:
        return self.chi * self.n ** (-1.0 / 3.0) * math.log(self.n) ** (1.0 / 3.0)

    @property
    def m_n(self) -> int:
        return int(math.floor(2.0 * math.pi / self.theta_n)) - 1

    @property
    def m_n_prime(self) -> int:
        th = self.theta_n
        m = 0
        for j in range(1, self.m_n):
            if (j + 1) * th <= math.pi / 2:
                m = j
            else:
                break
        return m

    @property
    def s3(self) -> float:
        return self.n ** self.eps1

    @property
    def s2(self) -> float:
        return (self.chi / 4.0) * self.n ** self.eps1

    @property
    def selection_halfwidth(self) -> float:
        return self.n ** (self.eps - 1.0)

    @property
    def roughness_threshold(self) -> float:
        return self.u_chi * self.n ** (1.0 / 3.0) * math.log(self.n) ** (2.0 / 3.0)

    def anchor(self):
        if self.c_sw is None:
            raise ValueError("ResampleParams.c_sw (the SW anchor) is not set")
        return self.c_sw


@dataclass(frozen=True)
class Sector:
    index: int
    lo: float
    hi: float
    in_first_quadrant: bool


def sector_partition(params: ResampleParams):
    """m_n sectors of width theta_n starting at angle 0 (plus a narrow leftover)."""
    th = params.theta_n
    out = []
    for j in range(params.m_n):
        out.append(Sector(j, j * th, (j + 1) * th, (j + 1) * th <= math.pi / 2))
    return out


# ---------------------------------------------------------------------------
# wedge predicates (exact integer cross products)
# ---------------------------------------------------------------------------


def _in_closed_wedge(x, y, z) -> bool:
    """z in the closed sector between arg(x) and arg(y) (aperture < pi)."""
    if z == (0, 0):
        return True
    return geom.cross((0, 0), x, z) >= 0 and geom.cross((0, 0), z, y) >= 0


def _strictly_in_wedge2(x, y, z2) -> bool:
    """Doubled-coordinate point z2 strictly inside the open wedge of (x, y)."""
    return geom.cross((0, 0), x, z2) > 0 and geom.cross((0, 0), z2, y) > 0


def split_circuit_at(circuit: Circuit, x, y):
    """(sector arc x->y, exterior arc y->x) of a circuit through x and y.

    The sector arc is the one whose edge midpoints sit strictly inside the
    open wedge spanned by x and y.
    """
    verts = list(circuit.vertices)
    if x not in circuit.vertex_set or y not in circuit.vertex_set:
        raise ValueError("x and y must be circuit vertices")
    ix = verts.index(x)
    cyc = verts[ix:] + verts[:ix]
    iy = cyc.index(y)
    arc1 = cyc[: iy + 1]          # x -> y along the cycle
    arc2 = cyc[iy:] + [cyc[0]]    # y -> x along the cycle
    if _arc_in_wedge(arc1, x, y):
        return arc1, arc2
    if not _arc_in_wedge(list(reversed(arc2)), x, y):
        raise ValueError("neither arc lies inside the sector wedge")
    return list(reversed(arc2)), list(reversed(arc1))


def _arc_in_wedge(arc, x, y) -> bool:
    for i in range(len(arc) - 1):
        a, b = arc[i], arc[i + 1]
        m2 = (a[0] + b[0], a[1] + b[1])
        if not _strictly_in_wedge2(x, y, m2):
            return False
    return True


# ---------------------------------------------------------------------------
# sector chain: edges, events, outermost path
# ---------------------------------------------------------------------------


class SectorChain:
    """Constrained heat-bath state for one resampling wedge.

    With `require_splice_identity` the chain additionally rejects flips after
    which the configuration's anchored circuit differs from the splice of
    the fixed exterior arc with the current outermost sector path; the
    event-eligibility stage needs that so its endpoint selection stays a
    function of never-resampled data.
    """

    def __init__(self, config: EdgeConfig, x, y, params: ResampleParams,
                 disable_area_event: bool = False, ext_arc=None,
                 require_splice_identity: bool = False,
                 disable_all_events: bool = False):
        self.require_splice_identity = require_splice_identity
        self.disable_all_events = disable_all_events
        self.window = config.window
        self.x = x
        self.y = y
        self.params = params
        self.disable_area_event = disable_area_event
        self.area2_min = 2.0 * params.n**2  # doubled-shoelace area threshold
        t = _edge_tables(self.window.L)
        idxs = []
        pairs = []
        for i in range(self.window.edge_count):
            e = edge_from_index(self.window, i)
            a, b = e.endpoints
            if _in_closed_wedge(x, y, a) and _in_closed_wedge(x, y, b):
                idxs.append(i)
                pairs.append((a, b))
        self.edge_indices = idxs
        self.edge_pairs = pairs
        self.config = config.copy()
        if ext_arc is not None:
            self.ext_arc = list(ext_arc)  # y -> ... -> x, fixed during the chain
        else:
            base = extract_sw_circuit(config, params.anchor())
            if base is None:
                raise ValueError("input configuration has no anchored circuit")
            _, ext = split_circuit_at(base, x, y)
            self.ext_arc = ext
        if self.require_splice_identity:
            self._init_extraction_cache()

    def _init_extraction_cache(self):
        """Lex-filtered open-state grids, maintained incrementally per flip."""
        from .lattice import edge_grids as _grids
        from .circuits import _lex_ge_mask

        w = self.window
        L = w.L
        east, north = _grids(self.config)
        lex = _lex_ge_mask(w, self.params.anchor())
        self._east_ok = east & lex[:-1, :] & lex[1:, :]
        self._north_ok = north & lex[:, :-1] & lex[:, 1:]
        t = _edge_tables(L)
        self._grid_slot = {}
        for i in self.edge_indices:
            gx, gy = int(t.base_x[i]) + L, int(t.base_y[i]) + L
            d = int(t.direction[i])
            grid_lex = (
                lex[gx, gy] and lex[gx + 1, gy]
                if d == 0
                else lex[gx, gy] and lex[gx, gy + 1]
            )
            self._grid_slot[i] = (d, gx, gy, bool(grid_lex))

    def _set_edge(self, i: int, value: bool):
        self.config.states[i] = value
        if self.require_splice_identity:
            d, gx, gy, lex_ok = self._grid_slot[i]
            val = value and lex_ok
            if d == 0:
                self._east_ok[gx, gy] = val
            else:
                self._north_ok[gx, gy] = val

    # -- events -------------------------------------------------------------

    def _open_adjacency(self):
        adj: dict[tuple, list] = {}
        st = self.config.states
        for i, (a, b) in zip(self.edge_indices, self.edge_pairs):
            if st[i]:
                adj.setdefault(a, []).append(b)
                adj.setdefault(b, []).append(a)
        return adj

    def _cluster(self, adj):
        if self.x not in adj:
            return None
        seen = {self.x}
        stack = [self.x]
        while stack:
            u = stack.pop()
            for v in adj.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen if self.y in seen else None

    def _cones_ok(self, cluster) -> bool:
        q = self.params.q0 / 2.0
        for w in cluster:
            if not (in_forward_cone(self.x, q, w) and in_backward_cone(self.y, q, w)):
                return False
        return True

    def events_ok(self):
        """(ok, outermost path or None) for the current sector configuration."""
        adj = self._open_adjacency()
        cluster = self._cluster(adj)
        if cluster is None:
            return False, None
        if not self.require_splice_identity and not self._cones_ok(cluster):
            return False, None
        path = outermost_path(adj, self.x, self.y)
        if path is None:
            return False, None
        if not self.disable_area_event and self.splice_area2(path) < self.area2_min:
            return False, None
        if self.require_splice_identity and not self._splice_identity_ok(path):
            return False, None
        return True, path

    def _splice_identity_ok(self, path) -> bool:
        """Two-flood certificate that the splice is the anchored circuit.

        On a box around the splice, flood once from the anchor's outside
        seeds only (certainly-wet faces) and once with the proxy ring as
        well.  If the ring flood's dry component at the anchor face matches
        the splice area, stays clear of the proxy ring, and every face
        adjacent to it is certainly wet, no merger can enlarge the circuit,
        so the splice is exactly the configuration's anchored circuit.  The
        check is conservative: a certificate failure only shrinks the
        conditioning event (deterministically), never misreports identity.
        """
        from scipy import ndimage as _ndi
        from .circuits import _flood_box

        cycle = path[:-1] + self.ext_arc[:-1]
        if len(set(cycle)) != len(cycle):
            return False  # splice revisits a vertex
        area2 = abs(geom.polygon_area2(cycle))
        if area2 % 2 != 0:
            return False
        faces_expect = area2 // 2
        w = self.window
        L = w.L
        cx, cy = self.params.anchor()
        xs = [v[0] for v in cycle]
        ys = [v[1] for v in cycle]
        # the genuine-wetness flood must wrap around the droplet inside the
        # box; near-critical sprawl blocks narrow corridors, so leave room
        margin = 14
        box = (
            max(min(xs) - margin, -L), min(max(xs) + margin, L),
            max(min(ys) - margin, -L), min(max(ys) + margin, L),
        )
        fx0, fx1, fy0, fy1 = box
        seeds = [(cx - 1, cy), (cx - 1, cy - 1), (cx, cy - 1)]
        sea_a = _flood_box(w, self._east_ok, self._north_ok, box, seeds=seeds,
                           ring_sea=False)
        sea_b = _flood_box(w, self._east_ok, self._north_ok, box, seeds=seeds)
        if sea_b[cx - fx0 + 1, cy - fy0 + 1]:
            return False
        dry = ~sea_b[1:-1, 1:-1]
        labels, _ = _ndi.label(dry)
        comp = labels == labels[cx - fx0, cy - fy0]
        if int(comp.sum()) != faces_expect:
            return False
        # clearance from proxy-ring sides (window-edge sides are genuine)
        if fx0 > -L and comp[0, :].any():
            return False
        if fx1 < L and comp[-1, :].any():
            return False
        if fy0 > -L and comp[:, 0].any():
            return False
        if fy1 < L and comp[:, -1].any():
            return False
        # every face adjacent to the component must be certainly wet
        grow = np.zeros_like(comp)
        grow[1:, :] |= comp[:-1, :]
        grow[:-1, :] |= comp[1:, :]
        grow[:, 1:] |= comp[:, :-1]
        grow[:, :-1] |= comp[:, 1:]
        halo = grow & ~comp
        wet_a = sea_a[1:-1, 1:-1]
        return bool((~halo | wet_a).all())

    def splice_area2(self, path) -> float:
        """Doubled shoelace area of (exterior arc) + (sector path x->y)."""
        cycle = path[:-1] + self.ext_arc[:-1]  # x..y then y..x, closure implicit
        return abs(geom.polygon_area2(cycle))

    def spliced_circuit(self, path) -> Circuit:
        return Circuit.from_vertex_cycle(path[:-1] + self.ext_arc[:-1])

    # -- the inner chain ------------------------------------------------------

    def run(self, rcm: RcmParams, rng, budget: int):
        """`budget` sweeps of event-rejecting single-edge heat bath."""
        if budget < 1:
            raise ValueError("budget must be >= 1")
        if self.disable_all_events:
            # validation control: unconditional sector redraw
            n = len(self.edge_indices)
            u = rng.random(n)
            for k, i in enumerate(self.edge_indices):
                self._set_edge(i, bool(u[k] < rcm.p))
            return n, n
        ok, _ = self.events_ok()
        if not ok:
            raise ValueError("input sector configuration violates the events")
        proposed = accepted = 0
        st = self.config.states
        q_is_one = rcm.q == 1.0
        for _ in range(budget):
            u = rng.random(len(self.edge_indices))
            for k, i in enumerate(self.edge_indices):
                if q_is_one:
                    p_open = rcm.p
                else:
                    p_open = conditional_open_prob(
                        self.config, edge_from_index(self.window, i), rcm
                    )
                new = bool(u[k] < p_open)
                if new == bool(st[i]):
                    continue
                proposed += 1
                self._set_edge(i, new)
                ok, _ = self.events_ok()
                if ok:
                    accepted += 1
                else:
                    self._set_edge(i, not new)
        return proposed, accepted


def outermost_path(adj, x, y):
    """Outermost open path from x to y: the boundary arc enclosing maximal area.

    Walks the outer face of the cluster, splices loops out of both x->y
    boundary arcs, and keeps the arc whose closed region against the origin
    is larger.  Returns a vertex list x..y, or None if no path exists.
    """
    if x not in adj or y not in adj:
        return None
    walk = _outer_face_walk(adj, x)
    if walk is None or y not in walk:
        return None
    occ_x = [i for i, v in enumerate(walk) if v == x]
    occ_y = [i for i, v in enumerate(walk) if v == y]
    best, best_area = None, -1.0
    n = len(walk)
    for ix in occ_x:
        for iy in occ_y:
            fwd = _cyclic_slice(walk, ix, iy)
            rev = list(reversed(_cyclic_slice(walk, iy, ix)))
            for cand in (fwd, rev):
                path = _splice_loops(cand)
                if path[0] != x or path[-1] != y or len(path) < 2:
                    continue
                area = abs(geom.polygon_area2([(0, 0)] + path))
                if area > best_area:
                    best, best_area = path, area
    return best


def _cyclic_slice(walk, i, j):
    if j >= i:
        return walk[i : j + 1]
    return walk[i:] + walk[: j + 1]


def _splice_loops(seq):
    out = []
    pos = {}
    for v in seq:
        if v in pos:
            for w in out[pos[v] + 1 :]:
                del pos[w]
            del out[pos[v] + 1 :]
        else:
            pos[v] = len(out)
            out.append(v)
    return out


def _outer_face_walk(adj, start):
    """Closed outer-boundary walk of the cluster component containing start.

    Standard face traversal: from each vertex continue along the edge that is
    first clockwise from the reversed incoming direction.  Seeded at the
    farthest-from-origin vertex with a radially inward pseudo-incoming edge,
    so the traced face is the unbounded one; the walk terminates when its
    first directed step repeats.
    """
    comp = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj.get(u, ()):
            if v not in comp:
                comp.add(v)
                stack.append(v)
    s = max(comp, key=lambda v: (v[0] * v[0] + v[1] * v[1], v))

    def next_step(cur, prev_dir):
        rev_ang = math.atan2(-prev_dir[1], -prev_dir[0])
        best_v, best_d = None, math.inf
        for w in adj[cur]:
            d = (w[0] - cur[0], w[1] - cur[1])
            delta = (rev_ang - math.atan2(d[1], d[0])) % (2.0 * math.pi)
            if delta < 1e-12:
                delta = 2.0 * math.pi  # immediate backtrack only as a last resort
            if delta < best_d:
                best_d, best_v = delta, w
        return best_v

    first = next_step(s, (-s[0], -s[1]))
    walk = [s]
    prev, cur = s, first
    guard = 4 * sum(len(v) for v in adj.values()) + 16
    while not (prev == s and cur == first and len(walk) > 1):
        walk.append(cur)
        nxt = next_step(cur, (cur[0] - prev[0], cur[1] - prev[1]))
        prev, cur = cur, nxt
        guard -= 1
        if guard <= 0:
            return None
    return walk[:-1]


# ---------------------------------------------------------------------------
# endpoint selection
# ---------------------------------------------------------------------------


@dataclass
class Selection:
    ok: bool                 # anchored circuit exists with 0 in its interior
    success: bool = False    # both endpoints are cluster regeneration sites
    x: Optional[tuple] = None
    y: Optional[tuple] = None
    u_minus: float = 0.0
    u_plus: float = 0.0
    reason: str = ""


def _first_edge_hit(circuit: Circuit, theta: float):
    """First circuit edge met by the ray at angle theta; ties by lex endpoints."""
    verts = circuit.vertices
    n = len(verts)
    best = None
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        t = geom.ray_segment_hit(theta, a, b)
        if t is None:
            continue
        key = (t, tuple(sorted((a, b))))
        if best is None or key < best[0]:
            best = (key, (a, b))
    if best is None:
        raise ValueError("ray does not meet the circuit; interior precondition broken")
    return best[1]


def _unique_ray_crossing(circuit: Circuit, theta: float):
    """The circuit edge crossing the ray at angle theta, if the crossing
    point is unique; None otherwise."""
    verts = circuit.vertices
    n = len(verts)
    hits = []
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        t = geom.ray_segment_hit(theta, a, b)
        if t is not None:
            hits.append((t, tuple(sorted((a, b)))))
    if not hits:
        return None
    hits.sort()
    distinct = 1
    for k in range(1, len(hits)):
        if hits[k][0] - hits[k - 1][0] > 1e-9:
            distinct += 1
    if distinct != 1:
        return None
    return hits[0][1]


def _endpoint_by_arg(edge, greater: bool):
    a, b = edge
    s = geom.cross((0, 0), a, b)  # > 0 iff arg(b) > arg(a) locally
    if s == 0:
        return max(a, b) if greater else min(a, b)
    hi, lo = (b, a) if s > 0 else (a, b)
    return hi if greater else lo


def select_endpoints(config: EdgeConfig, j: int, params: ResampleParams, rng,
                     circuit: Optional[Circuit] = None,
                     cluster_sample=None) -> Selection:
    """Randomized endpoint search of stage j; success = both sites regenerate."""
    th = params.theta_n
    delta = params.selection_halfwidth
    u_minus = rng.uniform(j * th + th / 4.0 - delta, j * th + th / 4.0)
    u_plus = rng.uniform((j + 1) * th - th / 4.0, (j + 1) * th - th / 4.0 + delta)
    if circuit is None:
        circuit = extract_sw_circuit(config, params.anchor())
    if circuit is None or not geom.strictly_inside(
        (0, 0), [(2 * vx, 2 * vy) for vx, vy in circuit.vertices]
    ):
        return Selection(ok=False, reason="no anchored circuit around the origin")
    v_minus = _first_edge_hit(circuit, u_minus)
    v_plus = _first_edge_hit(circuit, u_plus)
    x = _endpoint_by_arg(v_minus, greater=True)
    y = _endpoint_by_arg(v_plus, greater=False)
    sel = Selection(ok=True, x=x, y=y, u_minus=u_minus, u_plus=u_plus)
    if geom.cross((0, 0), x, y) <= 0:
        sel.reason = "endpoints out of angular order"
        return sel
    if cluster_sample is None:
        cluster_edges = open_cluster(config, params.anchor())
        cluster_sample = sample_shape([e.endpoints for e in cluster_edges])
    q, c = params.q0 / 2.0, params.c0 / 2.0
    if is_regeneration_site(cluster_sample, x, q, c) and is_regeneration_site(
        cluster_sample, y, q, c
    ):
        sel.success = True
    else:
        sel.reason = "endpoint is not a cluster regeneration site"
    return sel


# ---------------------------------------------------------------------------
# the resampling operation and its bookkeeping
# ---------------------------------------------------------------------------


@dataclass
class PsiRecord:
    acted: bool
    reason: str = ""
    proposed: int = 0
    accepted: int = 0


def psi_resample(config: EdgeConfig, x, y, params: ResampleParams, rcm: RcmParams,
                 rng, budget: Optional[int] = None,
                 disable_area_event: bool = False,
                 eligibility: str = "sites",
                 disable_all_events: bool = False):
    """Conditional resampling of the wedge between x and y; identity off-event.

    Returns (new config, PsiRecord).  Precondition errors (half-plane, angle
    span, budget) raise; eligibility failures are identity actions.

    eligibility 'sites' is the full construction: both endpoints must be
    cluster regeneration sites, which pins the exterior arc of the anchored
    circuit.  eligibility 'events' acts whenever the input sector
    configuration itself satisfies the conditioning events against the
    exterior-measurable outermost anchored path in the wedge complement; it
    exists because regeneration sites are vanishingly rare on desk-scale
    near-critical clusters, and it is exactly measure-preserving for the
    same resample-your-own-conditional reason.
    """
    if budget is None:
        budget = params.psi_budget
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if x[0] <= 0 or y[0] <= 0:
        raise ValueError("endpoints must lie in the open right half-plane")
    if geom.cross((0, 0), x, y) <= 0:
        raise ValueError("need arg(x) < arg(y)")
    span = geom.angle_between(x, y)
    if span >= params.c0 / 2.0:
        raise ValueError("angular span must stay below c0/2")
    if eligibility == "events":
        return _psi_resample_events(config, x, y, params, rcm, rng, budget,
                                    disable_area_event, disable_all_events)
    circuit = extract_sw_circuit(config, params.anchor())
    if circuit is None:
        return config.copy(), PsiRecord(False, "no anchored circuit")
    if not geom.strictly_inside(
        (0, 0), [(2 * vx, 2 * vy) for vx, vy in circuit.vertices]
    ):
        return config.copy(), PsiRecord(False, "origin not enclosed")
    cluster_edges = open_cluster(config, params.anchor())
    sample = sample_shape([e.endpoints for e in cluster_edges])
    q, c = params.q0 / 2.0, params.c0 / 2.0
    if not (is_regeneration_site(sample, x, q, c) and is_regeneration_site(sample, y, q, c)):
        return config.copy(), PsiRecord(False, "endpoints do not regenerate the cluster")
    if x not in circuit.vertex_set or y not in circuit.vertex_set:
        return config.copy(), PsiRecord(False, "endpoints not on the anchored circuit")
    chain = SectorChain(config, x, y, params, disable_area_event=disable_area_event)
    proposed, accepted = chain.run(rcm, rng, budget)
    return chain.config, PsiRecord(True, "", proposed, accepted)


def _wedge_bridge(x, y):
    """Deterministic lattice path x -> y with every vertex in the closed wedge.

    Breadth-first over the wedge's lattice points inside the pair's bounding
    box (padded); the wedge is convex, so vertex membership makes the whole
    edge admissible.  Returns None if the wedge lattice is too sparse.
    """
    from collections import deque

    pad = 2
    x_lo = min(x[0], y[0]) - pad
    x_hi = max(x[0], y[0]) + pad
    y_lo = min(x[1], y[1]) - pad
    y_hi = max(x[1], y[1]) + pad
    prev = {tuple(x): None}
    q = deque([tuple(x)])
    target = tuple(y)
    while q:
        u = q.popleft()
        if u == target:
            path = [u]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])
            return list(reversed(path))
        for d in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            v = (u[0] + d[0], u[1] + d[1])
            if not (x_lo <= v[0] <= x_hi and y_lo <= v[1] <= y_hi):
                continue
            if v in prev or not _in_closed_wedge(x, y, v):
                continue
            prev[v] = u
            q.append(v)
    return None


def exterior_anchored_path(config: EdgeConfig, x, y, anchor):
    """Outermost anchored open path from y to x outside the wedge of (x, y).

    Exterior-measurable by construction: the wedge interior is replaced by a
    deterministic bridge (all true wedge edges closed), and the anchored
    circuit of that masked configuration is extracted; its non-bridge arc is
    the maximal exterior path.  Returns the vertex list y -> ... -> x, or
    None when no anchored exterior connection exists.
    """
    bridge = _wedge_bridge(x, y)
    if bridge is None or len(bridge) < 2:
        return None
    masked = config.copy()
    w = config.window
    for i in range(w.edge_count):
        e = edge_from_index(w, i)
        a, b = e.endpoints
        if _in_closed_wedge(x, y, a) and _in_closed_wedge(x, y, b):
            masked.states[i] = False
    try:
        bridge_edges = _path_edges(bridge)
    except ValueError:
        return None
    for e in bridge_edges:
        if not w.contains_edge(e):
            return None
        masked.set_edge(e, True)
    circ = extract_sw_circuit(masked, anchor)
    if circ is None or not bridge_edges <= circ.edges:
        return None
    verts = list(circ.vertices)
    if tuple(x) not in circ.vertex_set or tuple(y) not in circ.vertex_set:
        return None
    ix = verts.index(tuple(x))
    cyc = verts[ix:] + verts[:ix]
    iy = cyc.index(tuple(y))
    arc1 = cyc[: iy + 1]              # x -> y along the cycle
    arc2 = cyc[iy:] + [cyc[0]]        # y -> x along the cycle
    if _path_edges(arc1) == bridge_edges:
        arc_ext = arc2
    elif _path_edges(arc2) == bridge_edges:
        arc_ext = list(reversed(arc1))
    else:
        return None
    if min(arc_ext) != anchor:
        return None
    return arc_ext


def _psi_resample_events(config, x, y, params, rcm, rng, budget, disable_area_event,
                         disable_all_events=False):
    anchor = params.anchor()
    if not (anchor[0] < 0 <= min(x[0], y[0])):
        return config.copy(), PsiRecord(False, "anchor must lie west of the wedge")
    ext = exterior_anchored_path(config, x, y, anchor)
    if ext is None:
        return config.copy(), PsiRecord(False, "no anchored exterior path")
    chain = SectorChain(config, x, y, params,
                        disable_area_event=disable_area_event, ext_arc=ext,
                        require_splice_identity=True,
                        disable_all_events=disable_all_events)
    try:
        proposed, accepted = chain.run(rcm, rng, budget)
    except ValueError:
        return config.copy(), PsiRecord(False, "input violates the conditioning events")
    return chain.config, PsiRecord(True, "", proposed, accepted)


def circuit_update_identity(config_before: EdgeConfig, config_after: EdgeConfig,
                            x, y, params: ResampleParams) -> bool:
    """Splice check: the new circuit is (old outside the wedge) + new sector path."""
    before = extract_sw_circuit(config_before, params.anchor())
    after = extract_sw_circuit(config_after, params.anchor())
    if before is None or after is None:
        return False
    try:
        _, ext_before = split_circuit_at(before, x, y)
        arc_after, ext_after = split_circuit_at(after, x, y)
    except ValueError:
        return False
    if _path_edges(ext_before) != _path_edges(ext_after):
        return False
    chain_adj: dict[tuple, list] = {}
    st = config_after.states
    t = _edge_tables(config_after.window.L)
    for i in np.flatnonzero(st):
        e = edge_from_index(config_after.window, int(i))
        a, b = e.endpoints
        if _in_closed_wedge(x, y, a) and _in_closed_wedge(x, y, b):
            chain_adj.setdefault(a, []).append(b)
            chain_adj.setdefault(b, []).append(a)
    gamma = outermost_path(chain_adj, x, y)
    if gamma is None:
        return False
    return _path_edges(gamma) == _path_edges(arc_after)


def _path_edges(path):
    from .lattice import _edge_between

    return frozenset(_edge_between(path[i], path[i + 1]) for i in range(len(path) - 1))


# ---------------------------------------------------------------------------
# sector event predicates over a configuration
# ---------------------------------------------------------------------------


def _sector_adjacency(config: EdgeConfig, x, y):
    adj: dict[tuple, list] = {}
    st = config.states
    t = _edge_tables(config.window.L)
    for i in np.flatnonzero(st):
        e = edge_from_index(config.window, int(i))
        a, b = e.endpoints
        if _in_closed_wedge(x, y, a) and _in_closed_wedge(x, y, b):
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
    return adj


def check_gac(config: EdgeConfig, x, y, delta: float, params: ResampleParams) -> bool:
    """Good area capture: connection, cone containment, diameter, area excess."""
    adj = _sector_adjacency(config, x, y)
    if x not in adj:
        return False
    cluster = {x}
    stack = [x]
    while stack:
        u = stack.pop()
        for v in adj.get(u, ()):
            if v not in cluster:
                cluster.add(v)
                stack.append(v)
    if y not in cluster:
        return False
    q = params.q0 / 2.0
    for w in cluster:
        if not (in_forward_cone(x, q, w) and in_backward_cone(y, q, w)):
            return False
    gamma = outermost_path(adj, x, y)
    if gamma is None:
        return False
    h = math.hypot(y[0] - x[0], y[1] - x[1])
    dmax = 0.0
    for i in range(len(gamma)):
        for k in range(i + 1, len(gamma)):
            d = math.hypot(gamma[k][0] - gamma[i][0], gamma[k][1] - gamma[i][1])
            dmax = max(dmax, d)
    if dmax > 2.0 * h:
        return False
    area_i = abs(geom.polygon_area2([(0, 0)] + gamma)) / 2.0
    area_t = abs(geom.cross((0, 0), x, y)) / 2.0
    need = area_t + delta * h**1.5 * math.sqrt(math.log(h))
    return area_i >= need


def check_sid(config: EdgeConfig, x, y, delta: float, params: ResampleParams) -> bool:
    """Significant inward deviation of the outermost sector path."""
    adj = _sector_adjacency(config, x, y)
    gamma = outermost_path(adj, x, y)
    if gamma is None:
        return False
    h = math.hypot(y[0] - x[0], y[1] - x[1])
    depth_min = h * math.sin(params.q0) / 3.0
    dev_min = delta * math.sqrt(h) * math.sqrt(math.log(h))
    hull_pts = [(0, 0), x, y] + gamma
    hull = geom.convex_hull(hull_pts)
    samples = []
    for i in range(len(gamma)):
        samples.append(gamma[i])
        if i + 1 < len(gamma):
            a, b = gamma[i], gamma[i + 1]
            for tfrac in (0.25, 0.5, 0.75):
                samples.append((a[0] + tfrac * (b[0] - a[0]), a[1] + tfrac * (b[1] - a[1])))
    for z in samples:
        if _dist_to_wedge_complement(x, y, z) < depth_min:
            continue
        if geom.dist_to_polygon_boundary(z, hull) >= dev_min:
            return True
    return False


def _dist_to_ray(p, d):
    t = p[0] * d[0] + p[1] * d[1]
    n2 = d[0] * d[0] + d[1] * d[1]
    if t <= 0:
        return math.hypot(p[0], p[1])
    t /= n2
    return math.hypot(p[0] - t * d[0], p[1] - t * d[1])


def _dist_to_wedge_complement(x, y, z) -> float:
    return min(_dist_to_ray(z, x), _dist_to_ray(z, y))


# ---------------------------------------------------------------------------
# sector classification and the pentagon bound
# ---------------------------------------------------------------------------


def _hull_point_and_tangent(hull, theta: float):
    """Boundary point of the hull at argument theta and its ccw tangent direction.

    At an extremal vertex the outgoing hull edge is taken as the tangent.
    """
    n = len(hull)
    best = None
    for i in range(n):
        a, b = hull[i], hull[(i + 1) % n]
        t = geom.ray_segment_hit(theta, a, b)
        if t is not None and (best is None or t < best[0]):
            best = (t, i, a, b)
    if best is None:
        raise ValueError("hull does not surround the origin")
    t, i, a, b = best
    z = (t * math.cos(theta), t * math.sin(theta))
    # endpoint hit: use the outgoing edge at that vertex
    if math.hypot(z[0] - b[0], z[1] - b[1]) < 1e-9:
        nxt = hull[(i + 2) % n]
        return b, (nxt[0] - b[0], nxt[1] - b[1])
    return z, (b[0] - a[0], b[1] - a[1])


def classify_mbt(c: Circuit, params: ResampleParams):
    """Sector indices whose hull boundary turns and advances moderately."""
    hull = convex_hull(c)
    th = params.theta_n
    m = params.m_n
    len_max = 40.0 * math.pi * params.C1 * params.n / m
    ang_max = 40.0 * math.pi / m
    zs, ws = {}, {}
    for j in range(1, m + 2):
        zs[j], ws[j] = _hull_point_and_tangent(hull, (j * th) % (2.0 * math.pi))
    out = []
    for j in range(1, m + 1):
        zl = math.hypot(zs[j + 1][0] - zs[j][0], zs[j + 1][1] - zs[j][1])
        ang = geom.angle_between(ws[j + 1], ws[j])
        if zl <= len_max and ang <= ang_max:
            out.append(j)
    return out


def classify_unfav(c: Circuit, params: ResampleParams):
    """Sectors with no circuit vertex reaching the local-roughness threshold."""
    th = params.theta_n
    thr = params.roughness_threshold
    hull = convex_hull(c)
    deep = set()
    for v in c.vertices:
        if geom.dist_to_polygon_boundary(v, hull) >= thr:
            a = geom.arg(v)
            j = int(a // th)
            if 1 <= j <= params.m_n:
                deep.add(j)
    return [j for j in range(1, params.m_n + 1) if j not in deep]


class PentagonBoundViolation(AssertionError):
    pass


@dataclass
class PentagonReport:
    area_T: float
    area_E0: float
    area_E1: float
    criterion_rhs: float
    e0_bound: float
    e1_bound: float


def pentagon_bound(c: Circuit, j: int, x_j, y_j, params: ResampleParams,
                   eligible: bool = True) -> PentagonReport:
    """Areas of the triangle and the pentagon halves controlling area capture.

    The pentagon is the region of the wedge between the tangent lines at the
    sector's hull crossings, minus the endpoint triangle; it splits along the
    hull chord into a near part (toward the origin) and a far part.
    """
    hull = convex_hull(c)
    th = params.theta_n
    z0, w0 = _hull_point_and_tangent(hull, j * th)
    z1, w1 = _hull_point_and_tangent(hull, (j + 1) * th)
    n = params.n
    R = 50.0 * max(params.C1 * n, 4.0)
    nx = math.hypot(*x_j)
    ny = math.hypot(*y_j)
    wedge = [(0.0, 0.0), (R * x_j[0] / nx, R * x_j[1] / nx), (R * y_j[0] / ny, R * y_j[1] / ny)]
    B = geom.clip_halfplane(wedge, z0, (z0[0] + w0[0], z0[1] + w0[1]), (0.0, 0.0))
    B = geom.clip_halfplane(B, z1, (z1[0] + w1[0], z1[1] + w1[1]), (0.0, 0.0))
    area_B = geom.polygon_area(B)
    tri = [(0.0, 0.0), tuple(map(float, x_j)), tuple(map(float, y_j))]
    area_T = geom.polygon_area(tri)
    area_E = max(area_B - area_T, 0.0)
    # split along the chord between the hull crossings, near side holds 0
    chord_a, chord_b = z0, z1
    if abs(geom.cross(chord_a, chord_b, (0.0, 0.0))) < 1e-12:
        area_B0 = 0.0
        area_T0 = 0.0
    else:
        B0 = geom.clip_halfplane(B, chord_a, chord_b, (0.0, 0.0))
        area_B0 = geom.polygon_area(B0) if len(B0) >= 3 else 0.0
        T0 = geom.clip_halfplane(tri, chord_a, chord_b, (0.0, 0.0))
        area_T0 = geom.polygon_area(T0) if len(T0) >= 3 else 0.0
    area_E0 = max(area_B0 - area_T0, 0.0)
    area_E1 = max(area_E - area_E0, 0.0)
    nlogn = n * math.log(n)
    e1_bound = 5**3 * 8**2 * params.C1**2 * params.chi**3 * nlogn
    e0_bound = 40.0 * params.C1 * params.u_chi * params.chi * nlogn
    rhs = e1_bound + e0_bound
    if eligible:
        if area_E1 > e1_bound + 1e-9:
            raise PentagonBoundViolation(f"far pentagon part {area_E1} exceeds {e1_bound}")
        if area_E0 > e0_bound + 1e-9:
            raise PentagonBoundViolation(f"near pentagon part {area_E0} exceeds {e0_bound}")
    return PentagonReport(area_T, area_E0, area_E1, rhs, e0_bound, e1_bound)


# ---------------------------------------------------------------------------
# one stage, and the complete chain
# ---------------------------------------------------------------------------


@dataclass
class StageRecord:
    j: int
    coin: bool
    acted: bool = False
    selection_success: bool = False
    x: Optional[tuple] = None
    y: Optional[tuple] = None
    gac: bool = False
    sid: bool = False
    exterior_ok: bool = True
    splice_ok: bool = True
    unfav_before: list = field(default_factory=list)
    unfav_after: list = field(default_factory=list)
    good_events: dict = field(default_factory=dict)
    reason: str = ""

    def to_json(self) -> str:
        d = asdict(self)
        d["x"] = list(self.x) if self.x else None
        d["y"] = list(self.y) if self.y else None
        return json.dumps(d)


@dataclass
class ResLog:
    params: dict
    stages: list = field(default_factory=list)

    def to_jsonl(self) -> str:
        head = json.dumps({"schema": "reslog v1", **self.params})
        return "\n".join([head] + [s.to_json() for s in self.stages]) + "\n"


def good_event_flags(config: EdgeConfig, params: ResampleParams) -> dict:
    """Per-stage good-event flags of the current state."""
    anchor = params.anchor()
    circ = extract_sw_circuit(config, anchor)
    n = params.n
    flags = {"g1": False, "g2": False, "g3": False, "g4": False}
    if circ is None:
        return flags
    flags["g1"] = mfl(circ) <= params.s2 * n ** (2 / 3) * math.log(n) ** (1 / 3)
    flags["g2"] = mlr(circ) <= n ** (2 / 3)
    cluster = open_cluster(config, anchor)
    report = regeneration_sites(cluster, params.q0 / 2.0, params.c0 / 2.0)
    flags["g3"] = report.theta_max <= params.selection_halfwidth / 2.0
    inner = math.inf
    outer = 0.0
    verts = circ.vertices
    for i in range(len(verts)):
        a, b = verts[i], verts[(i + 1) % len(verts)]
        inner = min(inner, math.sqrt(geom.point_segment_dist2((0, 0), a, b)))
        outer = max(outer, math.hypot(*a))
    enclosed = geom.strictly_inside((0, 0), [(2 * vx, 2 * vy) for vx, vy in verts])
    flags["g4"] = enclosed and inner >= params.c1 * n and outer <= params.C1 * n
    return flags


def select_pair_outermost(config: EdgeConfig, j: int, params: ResampleParams, rng):
    """Endpoint pair from the outermost open-edge ray crossings of stage j.

    Used by the event-eligibility stage: both hit edges carry an endpoint
    beyond the resulting wedge, so the pair is a function of frozen data and
    the stage's independent angle draws.  Crossings are searched out to the
    radial sandwich bound so far-window noise cannot capture the selection.
    Returns (x, y) or None.
    """
    th = params.theta_n
    delta = params.selection_halfwidth
    radius = 2.0 * params.C1 * params.n
    u_minus = rng.uniform(j * th + th / 4.0 - delta, j * th + th / 4.0)
    u_plus = rng.uniform((j + 1) * th - th / 4.0, (j + 1) * th - th / 4.0 + delta)
    e_minus = _outermost_open_edge_hit(config, u_minus, radius)
    e_plus = _outermost_open_edge_hit(config, u_plus, radius)
    if e_minus is None or e_plus is None:
        return None
    x = _endpoint_by_arg(e_minus, greater=True)
    y = _endpoint_by_arg(e_plus, greater=False)
    if x[0] <= 0 or y[0] <= 0 or geom.cross((0, 0), x, y) <= 0:
        return None
    if geom.angle_between(x, y) >= params.c0 / 2.0:
        return None
    return x, y


def select_pair_crossings(config: EdgeConfig, j: int, params: ResampleParams,
                          circuit: Optional[Circuit] = None):
    """Endpoint pair for the event-eligibility stage of sector j.

    The anchored circuit must cross each sector boundary ray at a unique
    point; the pair is read off those crossing edges (which straddle the
    rays and are therefore never resampled).  Under the stage's spliced-
    circuit event the crossings are functions of the fixed exterior arc, so
    the selection is determined by data the resampling leaves untouched.
    Returns (x, y) or None.
    """
    th = params.theta_n
    if circuit is None:
        circuit = extract_sw_circuit(config, params.anchor())
    if circuit is None:
        return None
    if not geom.strictly_inside(
        (0, 0), [(2 * vx, 2 * vy) for vx, vy in circuit.vertices]
    ):
        return None
    e_minus = _unique_ray_crossing(circuit, j * th)
    e_plus = _unique_ray_crossing(circuit, (j + 1) * th)
    if e_minus is None or e_plus is None:
        return None
    x = _endpoint_by_arg(e_minus, greater=True)
    y = _endpoint_by_arg(e_plus, greater=False)
    if x[0] <= 0 or y[0] <= 0 or geom.cross((0, 0), x, y) <= 0:
        return None
    if geom.angle_between(x, y) >= params.c0 / 2.0:
        return None
    return x, y


def res_step(config: EdgeConfig, j: int, params: ResampleParams, rcm: RcmParams,
             rng, coin: Optional[bool] = None,
             disable_area_event: bool = False,
             collect_flags: bool = True):
    """Stage j: coin-gated endpoint selection plus conditional sector resampling."""
    rec = StageRecord(j=j, coin=bool(coin))
    if coin is None:
        rec.coin = bool(rng.random() < 1.0 / params.s3)
    if not rec.coin:
        return config.copy(), rec
    circuit = extract_sw_circuit(config, params.anchor())
    sel = select_endpoints(config, j, params, rng, circuit=circuit)
    if not sel.ok:
        rec.reason = sel.reason
        return config.copy(), rec
    rec.x, rec.y = sel.x, sel.y
    rec.selection_success = sel.success
    if not sel.success:
        rec.reason = sel.reason
        return config.copy(), rec
    span = geom.angle_between(sel.x, sel.y)
    if span >= params.c0 / 2.0 or sel.x[0] <= 0 or sel.y[0] <= 0:
        rec.reason = "selected pair outside the resampling wedge bounds"
        return config.copy(), rec
    if collect_flags:
        rec.unfav_before = classify_unfav(circuit, params)
    out, psi = psi_resample(
        config, sel.x, sel.y, params, rcm, rng,
        disable_area_event=disable_area_event,
    )
    rec.acted = psi.acted
    if not psi.acted:
        rec.reason = psi.reason
        return out, rec
    # exterior conservation: only wedge edges may change
    changed = np.flatnonzero(config.states != out.states)
    for i in changed:
        e = edge_from_index(config.window, int(i))
        a, b = e.endpoints
        if not (_in_closed_wedge(sel.x, sel.y, a) and _in_closed_wedge(sel.x, sel.y, b)):
            rec.exterior_ok = False
            break
    rec.splice_ok = circuit_update_identity(config, out, sel.x, sel.y, params)
    rec.gac = check_gac(out, sel.x, sel.y, params.eps0, params)
    rec.sid = check_sid(out, sel.x, sel.y, params.eps0, params)
    if collect_flags:
        after = extract_sw_circuit(out, params.anchor())
        if after is not None:
            rec.unfav_after = classify_unfav(after, params)
    return out, rec


def res_full(config: EdgeConfig, params: ResampleParams, rcm: RcmParams, rng,
             collect_flags: bool = True):
    """The complete chain: stages 1..m_n' with coin probability 1/s3 each."""
    log = ResLog(
        params={
            "n": params.n, "chi": params.chi, "eps": params.eps,
            "eps0": params.eps0, "eps1": params.eps1,
            "q0": params.q0, "c0": params.c0, "c1": params.c1, "C1": params.C1,
            "m_n": params.m_n, "m_n_prime": params.m_n_prime,
            "s2": params.s2, "s3": params.s3,
            "c_sw": list(params.anchor()),
        }
    )
    cur = config.copy()
    for j in range(1, params.m_n_prime + 1):
        cur, rec = res_step(cur, j, params, rcm, rng, coin=None,
                            collect_flags=collect_flags)
        if collect_flags:
            rec.good_events = good_event_flags(cur, params)
        log.stages.append(rec)
    return cur, log
