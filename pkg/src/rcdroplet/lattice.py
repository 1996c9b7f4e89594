"""Finite lattice windows, edge indexing, configurations, connectivity.

A window of half-width L holds the vertices (x, y) with |x|, |y| <= L and
the nearest-neighbour edges between them.  Edges are identified by their
base vertex plus a direction (east or north) and carry a canonical dense
index: bases scanned row-major (y, then x, from -L upward), east before
north at each base.  That order is frozen; snapshots and tests rely on it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple, Optional

import numpy as np

EAST = 0
NORTH = 1

MAX_HALF_WIDTH = 30000  # keeps 32-bit index arithmetic overflow-free


class EdgeId(NamedTuple):
    x: int
    y: int
    d: int  # EAST or NORTH

    @property
    def endpoints(self):
        if self.d == EAST:
            return (self.x, self.y), (self.x + 1, self.y)
        return (self.x, self.y), (self.x, self.y + 1)


@dataclass(frozen=True)
class Window:
    """Square window of vertices with both coordinates in [-L, L]."""

    L: int

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("window half-width must be >= 1")
        if self.L > MAX_HALF_WIDTH:
            raise ValueError(f"window half-width above {MAX_HALF_WIDTH} rejected")

    @property
    def side(self):
        return 2 * self.L + 1

    @property
    def vertex_count(self):
        return self.side * self.side

    @property
    def edge_count(self):
        return 2 * self.side * (2 * self.L)

    def contains_vertex(self, v):
        return abs(v[0]) <= self.L and abs(v[1]) <= self.L

    def contains_edge(self, e: EdgeId):
        a, b = e.endpoints
        return self.contains_vertex(a) and self.contains_vertex(b)

    def vertices(self):
        L = self.L
        for y in range(-L, L + 1):
            for x in range(-L, L + 1):
                yield (x, y)

    def vertex_index(self, v):
        return (v[1] + self.L) * self.side + (v[0] + self.L)

    def is_boundary_vertex(self, v):
        """Interior vertex boundary: endpoints of edges leaving the window."""
        return abs(v[0]) == self.L or abs(v[1]) == self.L


class _EdgeTables(NamedTuple):
    idx_east: np.ndarray   # [x+L, y+L] -> index, -1 where absent
    idx_north: np.ndarray
    base_x: np.ndarray     # index -> base vertex / direction
    base_y: np.ndarray
    direction: np.ndarray
    ends_a: np.ndarray     # index -> vertex_index of both endpoints
    ends_b: np.ndarray


@lru_cache(maxsize=32)
def _edge_tables(L: int) -> _EdgeTables:
    side = 2 * L + 1
    idx_east = -np.ones((side, side), dtype=np.int64)
    idx_north = -np.ones((side, side), dtype=np.int64)
    bx, by, dd, ea, eb = [], [], [], [], []
    w = Window(L)
    i = 0
    for y in range(-L, L + 1):
        for x in range(-L, L + 1):
            if x < L:
                idx_east[x + L, y + L] = i
                bx.append(x); by.append(y); dd.append(EAST)
                ea.append(w.vertex_index((x, y))); eb.append(w.vertex_index((x + 1, y)))
                i += 1
            if y < L:
                idx_north[x + L, y + L] = i
                bx.append(x); by.append(y); dd.append(NORTH)
                ea.append(w.vertex_index((x, y))); eb.append(w.vertex_index((x, y + 1)))
                i += 1
    return _EdgeTables(
        idx_east, idx_north,
        np.array(bx, dtype=np.int64), np.array(by, dtype=np.int64),
        np.array(dd, dtype=np.int8),
        np.array(ea, dtype=np.int64), np.array(eb, dtype=np.int64),
    )


def edge_index(window: Window, e: EdgeId) -> int:
    """Canonical dense index of an edge; raises on out-of-window edges."""
    if not window.contains_edge(e):
        raise ValueError(f"edge {e} not inside window L={window.L}")
    t = _edge_tables(window.L)
    L = window.L
    if e.d == EAST:
        return int(t.idx_east[e.x + L, e.y + L])
    return int(t.idx_north[e.x + L, e.y + L])


def edge_from_index(window: Window, i: int) -> EdgeId:
    t = _edge_tables(window.L)
    if not 0 <= i < window.edge_count:
        raise ValueError(f"edge index {i} out of range")
    return EdgeId(int(t.base_x[i]), int(t.base_y[i]), int(t.direction[i]))


def all_edges(window: Window):
    return [edge_from_index(window, i) for i in range(window.edge_count)]


@dataclass
class EdgeConfig:
    """Open/closed assignment on every edge of a window."""

    window: Window
    states: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.states is None:
            self.states = np.zeros(self.window.edge_count, dtype=bool)
        else:
            self.states = np.asarray(self.states, dtype=bool)
            if self.states.shape != (self.window.edge_count,):
                raise ValueError("states length must equal the window edge count")

    def copy(self) -> "EdgeConfig":
        return EdgeConfig(self.window, self.states.copy())

    def __eq__(self, other):
        return (
            isinstance(other, EdgeConfig)
            and self.window == other.window
            and bool(np.array_equal(self.states, other.states))
        )

    def is_open(self, e: EdgeId) -> bool:
        return bool(self.states[edge_index(self.window, e)])

    def set_edge(self, e: EdgeId, state: bool):
        self.states[edge_index(self.window, e)] = state

    def open_edges(self):
        t = _edge_tables(self.window.L)
        for i in np.flatnonzero(self.states):
            yield EdgeId(int(t.base_x[i]), int(t.base_y[i]), int(t.direction[i]))

    def open_count(self) -> int:
        return int(self.states.sum())

    # -- snapshot format: `rcmsnap v1 L=<L>` + one hex bitmap line ---------

    def to_snapshot(self) -> str:
        n = self.window.edge_count
        digits = []
        for k in range(0, n, 4):
            nib = 0
            for j in range(4):
                if k + j < n and self.states[k + j]:
                    nib |= 1 << (3 - j)
            digits.append(format(nib, "x"))
        return f"rcmsnap v1 L={self.window.L}\n{''.join(digits)}\n"

    @staticmethod
    def from_snapshot(text: str) -> "EdgeConfig":
        lines = text.strip("\n").split("\n")
        if len(lines) != 2 or not lines[0].startswith("rcmsnap v1 L="):
            raise ValueError("not an rcmsnap v1 snapshot")
        L = int(lines[0].split("L=")[1])
        window = Window(L)
        n = window.edge_count
        expect = (n + 3) // 4
        if len(lines[1]) != expect:
            raise ValueError("snapshot bitmap length mismatch")
        states = np.zeros(n, dtype=bool)
        for k, ch in enumerate(lines[1]):
            nib = int(ch, 16)
            for j in range(4):
                i = 4 * k + j
                if i < n:
                    states[i] = bool(nib & (1 << (3 - j)))
        return EdgeConfig(window, states)


def _open_adjacency(config: EdgeConfig, region: Optional[Iterable[EdgeId]] = None):
    """vertex -> list of neighbour vertices over open edges (optionally restricted)."""
    adj: dict[tuple[int, int], list[tuple[int, int]]] = {}
    if region is None:
        edges = config.open_edges()
    else:
        edges = (e for e in region if config.is_open(e))
    for e in edges:
        a, b = e.endpoints
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    return adj


def connected(config: EdgeConfig, a, b, region: Optional[Iterable[EdgeId]] = None) -> bool:
    """True iff an open path inside `region` joins a and b (BFS semantics)."""
    if not (config.window.contains_vertex(a) and config.window.contains_vertex(b)):
        raise ValueError("vertices outside window")
    if a == b:
        return True
    adj = _open_adjacency(config, region)
    if a not in adj:
        return False
    seen = {a}
    q = deque([a])
    while q:
        u = q.popleft()
        for v in adj.get(u, ()):
            if v == b:
                return True
            if v not in seen:
                seen.add(v)
                q.append(v)
    return False


def open_cluster(config: EdgeConfig, a, region: Optional[Iterable[EdgeId]] = None):
    """Edges of all open paths starting at a, as a set of EdgeIds."""
    if not config.window.contains_vertex(a):
        raise ValueError("vertex outside window")
    adj = _open_adjacency(config, region)
    if a not in adj:
        return set()
    seen = {a}
    q = deque([a])
    edges = set()
    while q:
        u = q.popleft()
        for v in adj.get(u, ()):
            edges.add(_edge_between(u, v))
            if v not in seen:
                seen.add(v)
                q.append(v)
    return edges


def cluster_vertices(config: EdgeConfig, a, region=None):
    """Vertex set of the open cluster of a (always contains a)."""
    adj = _open_adjacency(config, region)
    seen = {a}
    q = deque([a])
    while q:
        u = q.popleft()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                q.append(v)
    return seen


def _edge_between(u, v) -> EdgeId:
    if u > v:
        u, v = v, u
    if v == (u[0] + 1, u[1]):
        return EdgeId(u[0], u[1], EAST)
    if v == (u[0], u[1] + 1):
        return EdgeId(u[0], u[1], NORTH)
    raise ValueError(f"{u} and {v} are not nearest neighbours")


def cluster_scan(config: EdgeConfig, start, vertex_cap: int):
    """Capped DFS over the open cluster of `start` with O(1) edge lookups.

    Returns (complete, vertex_count, bbox) where bbox = (x_lo, x_hi, y_lo, y_hi)
    over visited vertices; `complete` is False when the cap was hit.
    """
    w = config.window
    t = _edge_tables(w.L)
    L = w.L
    st = config.states
    seen = {start}
    stack = [start]
    x_lo = x_hi = start[0]
    y_lo = y_hi = start[1]
    while stack:
        x, y = stack.pop()
        for nx, ny, ex, ey, is_east in (
            (x + 1, y, x, y, True),
            (x - 1, y, x - 1, y, True),
            (x, y + 1, x, y, False),
            (x, y - 1, x, y - 1, False),
        ):
            if abs(nx) > L or abs(ny) > L or abs(ex) > L or abs(ey) > L:
                continue
            idx = t.idx_east[ex + L, ey + L] if is_east else t.idx_north[ex + L, ey + L]
            if idx < 0 or not st[idx]:
                continue
            v = (nx, ny)
            if v not in seen:
                if len(seen) >= vertex_cap:
                    return False, len(seen), (x_lo, x_hi, y_lo, y_hi)
                seen.add(v)
                stack.append(v)
                x_lo = min(x_lo, nx); x_hi = max(x_hi, nx)
                y_lo = min(y_lo, ny); y_hi = max(y_hi, ny)
    return True, len(seen), (x_lo, x_hi, y_lo, y_hi)


class UnionFind:
    """Array union-find over window vertices; rebuilt from a config on demand."""

    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)
        self.rank = np.zeros(n, dtype=np.int8)

    def find(self, i: int) -> int:
        p = self.parent
        root = i
        while p[root] != root:
            root = p[root]
        while p[i] != root:
            p[i], i = root, p[i]
        return int(root)

    def union(self, i: int, j: int) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        if self.rank[ri] < self.rank[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        if self.rank[ri] == self.rank[rj]:
            self.rank[ri] += 1
        return True

    @staticmethod
    def from_config(config: EdgeConfig, skip_index: Optional[int] = None) -> "UnionFind":
        w = config.window
        uf = UnionFind(w.vertex_count)
        t = _edge_tables(w.L)
        for i in np.flatnonzero(config.states):
            if skip_index is not None and i == skip_index:
                continue
            uf.union(int(t.ends_a[i]), int(t.ends_b[i]))
        return uf


def edge_grids(config: EdgeConfig):
    """Open-state grids indexed [x+L, y+L]: east shape (2L, 2L+1), north (2L+1, 2L)."""
    t = _edge_tables(config.window.L)
    L = config.window.L
    side = 2 * L + 1
    east = np.zeros((side - 1, side), dtype=bool)
    north = np.zeros((side, side - 1), dtype=bool)
    mask_e = t.direction == EAST
    mask_n = ~mask_e
    east[t.base_x[mask_e] + L, t.base_y[mask_e] + L] = config.states[mask_e]
    north[t.base_x[mask_n] + L, t.base_y[mask_n] + L] = config.states[mask_n]
    return east, north
