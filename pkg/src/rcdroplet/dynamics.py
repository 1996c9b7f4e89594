"""Heat-bath dynamics for the random cluster measure, exact enumeration,
and diagnostics for the standing hypotheses (decay, bounded energy, FKG).

The single-edge conditional has exactly two values: p when the endpoints of
the edge are connected without it, and p / (p + (1-p) q) otherwise.  Wired
counting contracts the interior vertex boundary into one virtual vertex.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lattice import (
    EAST,
    NORTH,
    EdgeConfig,
    EdgeId,
    Window,
    _edge_tables,
    all_edges,
    edge_from_index,
    edge_index,
)

ENUM_EDGE_LIMIT = 24  # hard capacity; practical use stays at <= ~18 edges


@dataclass(frozen=True)
class RcmParams:
    """Random cluster model parameters (p, q, boundary condition)."""

    p: float
    q: float = 1.0
    boundary: str = "free"

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.q < 1.0:
            raise ValueError("q >= 1 required")
        if self.boundary not in ("free", "wired"):
            raise ValueError("boundary must be 'free' or 'wired'")

    @property
    def beta(self) -> float:
        """Inverse temperature solving p = 1 - exp(-2 beta)."""
        return -0.5 * math.log1p(-self.p)

    @property
    def beta_critical(self) -> float:
        return 0.5 * math.log(1.0 + math.sqrt(self.q))

    @property
    def p_critical(self) -> float:
        rq = math.sqrt(self.q)
        return rq / (1.0 + rq)

    @property
    def subcritical(self) -> bool:
        return self.p < self.p_critical

    @property
    def disconnected_open_prob(self) -> float:
        return self.p / (self.p + (1.0 - self.p) * self.q)


def _connected_without(config: EdgeConfig, e: EdgeId, params: RcmParams) -> bool:
    """Endpoints of e joined in config minus e (wired: through the boundary too)."""
    w = config.window
    skip = edge_index(w, e)
    a, b = e.endpoints
    wired = params.boundary == "wired"
    adj = _adjacency_without(config, skip)
    if wired and w.is_boundary_vertex(a) and w.is_boundary_vertex(b):
        return True
    seen = {a}
    q = deque([a])
    a_rim = wired and w.is_boundary_vertex(a)
    while q:
        u = q.popleft()
        for v in adj.get(u, ()):
            if v == b:
                return True
            if v not in seen:
                seen.add(v)
                if wired and w.is_boundary_vertex(v):
                    a_rim = True
                q.append(v)
    if not (wired and a_rim):
        return False
    # a reaches the contracted boundary; ask whether b does as well
    seen = {b}
    q = deque([b])
    if w.is_boundary_vertex(b):
        return True
    while q:
        u = q.popleft()
        for v in adj.get(u, ()):
            if v not in seen:
                if w.is_boundary_vertex(v):
                    return True
                seen.add(v)
                q.append(v)
    return False


def _adjacency_without(config: EdgeConfig, skip_index: int):
    t = _edge_tables(config.window.L)
    adj: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for i in np.flatnonzero(config.states):
        if i == skip_index:
            continue
        e = EdgeId(int(t.base_x[i]), int(t.base_y[i]), int(t.direction[i]))
        a, b = e.endpoints
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    return adj


def conditional_open_prob(config: EdgeConfig, e: EdgeId, params: RcmParams) -> float:
    """Heat-bath probability that e is open given every other edge."""
    if not config.window.contains_edge(e):
        raise ValueError(f"edge {e} not inside window")
    if params.q == 1.0:
        return params.p
    if _connected_without(config, e, params):
        return params.p
    return params.disconnected_open_prob


def heat_bath_sweep(config: EdgeConfig, params: RcmParams, rng) -> EdgeConfig:
    """One sweep: every edge resampled once, in canonical order."""
    out = config.copy()
    n = out.window.edge_count
    u = rng.random(n)
    if params.q == 1.0:
        out.states[:] = u < params.p
        return out
    for i in range(n):
        e = edge_from_index(out.window, i)
        out.states[i] = u[i] < conditional_open_prob(out, e, params)
    return out


def single_edge_updates(config: EdgeConfig, params: RcmParams, rng, count: int) -> EdgeConfig:
    """`count` single-edge heat-bath updates at uniformly random edges (in place copy)."""
    out = config.copy()
    n = out.window.edge_count
    idx = rng.integers(0, n, size=count)
    u = rng.random(count)
    if params.q == 1.0:
        for k in range(count):
            out.states[idx[k]] = u[k] < params.p
        return out
    for k in range(count):
        e = edge_from_index(out.window, int(idx[k]))
        out.states[idx[k]] = u[k] < conditional_open_prob(out, e, params)
    return out


def count_components(config: EdgeConfig, params: RcmParams) -> int:
    """Cluster count k for the configuration under the given boundary convention."""
    return _count_components_bits(
        config.window, int_from_states(config.states), params.boundary == "wired"
    )


def int_from_states(states: np.ndarray) -> int:
    bits = 0
    for i in np.flatnonzero(states):
        bits |= 1 << int(i)
    return bits


def states_from_int(window: Window, bits: int) -> np.ndarray:
    n = window.edge_count
    return np.array([(bits >> i) & 1 for i in range(n)], dtype=bool)


def _count_components_bits(window: Window, bits: int, wired: bool) -> int:
    t = _edge_tables(window.L)
    n_vert = window.vertex_count
    parent = list(range(n_vert + 1))  # extra slot = contracted boundary

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    virtual = n_vert
    if wired:
        L = window.L
        for v in window.vertices():
            if abs(v[0]) == L or abs(v[1]) == L:
                parent[window.vertex_index(v)] = virtual
    m = window.edge_count
    for i in range(m):
        if (bits >> i) & 1:
            a, b = find(int(t.ends_a[i])), find(int(t.ends_b[i]))
            if a != b:
                parent[a] = b
    roots = {find(i) for i in range(n_vert)}
    if wired:
        # contracted boundary counts as a single component
        return len(roots)
    return len(roots)


class EnumerationTable:
    """Exact finite-volume probabilities for every configuration of a support set.

    Keys are canonical edge bitmasks over the window's edge order; edges
    outside `support` are held closed.
    """

    def __init__(self, window: Window, params: RcmParams, probs: dict[int, float], support):
        self.window = window
        self.params = params
        self.probs = probs
        self.support = support

    def prob(self, config: EdgeConfig) -> float:
        return self.probs.get(int_from_states(config.states), 0.0)

    def prob_bits(self, bits: int) -> float:
        return self.probs.get(bits, 0.0)

    def items(self):
        return self.probs.items()

    def config_from_bits(self, bits: int) -> EdgeConfig:
        return EdgeConfig(self.window, states_from_int(self.window, bits))

    def conditional_open(self, bits: int, i: int) -> float:
        """Exact P(edge i open | all other edges), from the table."""
        w_open = self.probs.get(bits | (1 << i), 0.0)
        w_closed = self.probs.get(bits & ~(1 << i), 0.0)
        total = w_open + w_closed
        if total == 0:
            raise ValueError("conditioning event has probability zero")
        return w_open / total


def exact_enumerate(
    window: Window, params: RcmParams, support: Optional[list[int]] = None
) -> EnumerationTable:
    """Enumerate the measure over all configurations of `support` (others closed)."""
    if support is None:
        support = list(range(window.edge_count))
    m = len(support)
    if m > ENUM_EDGE_LIMIT:
        raise ValueError(f"enumeration capacity is {ENUM_EDGE_LIMIT} edges, got {m}")
    wired = params.boundary == "wired"
    p, q = params.p, params.q
    ratio = p / (1.0 - p)
    weights = {}
    total = 0.0
    for sub in range(1 << m):
        bits = 0
        n_open = 0
        for j in range(m):
            if (sub >> j) & 1:
                bits |= 1 << support[j]
                n_open += 1
        k = _count_components_bits(window, bits, wired)
        w = ratio**n_open * q**k
        weights[bits] = w
        total += w
    probs = {bits: w / total for bits, w in weights.items()}
    return EnumerationTable(window, params, probs, list(support))


class SmallWindowSampler:
    """Bitmask-table heat-bath sampler for windows with few edges.

    Precomputes, for every (config, edge) pair, whether the endpoints are
    connected without the edge, which turns a sweep into table lookups.
    """

    def __init__(self, window: Window, params: RcmParams):
        m = window.edge_count
        if m > 16:
            raise ValueError("SmallWindowSampler is for windows with <= 16 edges")
        self.window = window
        self.params = params
        self.m = m
        p_dis = params.disconnected_open_prob
        self.prob_open = np.empty((1 << m, m))
        cfg = EdgeConfig(window)
        for bits in range(1 << m):
            cfg.states = states_from_int(window, bits)
            for i in range(m):
                e = edge_from_index(window, i)
                self.prob_open[bits, i] = (
                    params.p if _connected_without(cfg, e, params) else p_dis
                )

    def run(self, sweeps: int, rng, bits: int = 0, sample_every: Optional[int] = None):
        """Run sweeps from `bits`; yields the state after every `sample_every` sweeps."""
        m = self.m
        out = []
        u = rng.random((sweeps, m))
        for s in range(sweeps):
            for i in range(m):
                if u[s, i] < self.prob_open[bits, i]:
                    bits |= 1 << i
                else:
                    bits &= ~(1 << i)
            if sample_every and (s + 1) % sample_every == 0:
                out.append(bits)
        return out if sample_every else bits


def equilibrated_samples(
    window: Window,
    params: RcmParams,
    count: int,
    rng,
    burn_in_updates: Optional[int] = None,
    spacing_updates: Optional[int] = None,
):
    """Iterator of `count` near-independent configurations.

    q = 1 draws iid product-measure configurations.  Otherwise one chain is
    burnt in for 200*edge_count single-edge updates and sampled every
    10*edge_count updates; spaced samples are treated as independent.
    """
    n = window.edge_count
    if params.q == 1.0:
        for _ in range(count):
            yield EdgeConfig(window, rng.random(n) < params.p)
        return
    if n <= 16:
        # bitmask-table chain: orders of magnitude faster on tiny windows
        sampler = SmallWindowSampler(window, params)
        burn_sweeps = 200 if burn_in_updates is None else max(burn_in_updates // n, 1)
        space_sweeps = 10 if spacing_updates is None else max(spacing_updates // n, 1)
        bits = sampler.run(burn_sweeps, rng, bits=0)
        for _ in range(count):
            bits = sampler.run(space_sweeps, rng, bits=bits)
            yield EdgeConfig(window, states_from_int(window, bits))
        return
    burn = 200 * n if burn_in_updates is None else burn_in_updates
    space = 10 * n if spacing_updates is None else spacing_updates
    config = EdgeConfig(window, rng.random(n) < params.p)
    config = single_edge_updates(config, params, rng, burn)
    for _ in range(count):
        config = single_edge_updates(config, params, rng, space)
        yield config.copy()


def estimate_connectivity(
    params: RcmParams, window: Window, x, trials: int, rng, **equilibration
):
    """Monte Carlo estimate of P(0 <-> x) with binomial standard error."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not window.contains_vertex(x):
        raise ValueError("target vertex outside window")
    if x == (0, 0):
        return 1.0, 0.0
    hits = 0
    from .lattice import connected as _connected

    for config in equilibrated_samples(window, params, trials, rng, **equilibration):
        if _connected(config, (0, 0), tuple(x)):
            hits += 1
    p_hat = hits / trials
    stderr = math.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / trials) / trials)
    return p_hat, stderr


def _reaches_norm(config: EdgeConfig, radius: float) -> bool:
    """Cluster of 0 contains a vertex with Euclidean norm >= radius."""
    from .lattice import cluster_vertices

    r2 = radius * radius
    for (vx, vy) in cluster_vertices(config, (0, 0)):
        if vx * vx + vy * vy >= r2:
            return True
    return False


def check_hypotheses(
    params: RcmParams,
    window: Window,
    rng,
    radii: Optional[list[int]] = None,
    trials: int = 4000,
    energy_samples: int = 200,
    fkg_samples: int = 20000,
) -> dict:
    """Empirical diagnostics: decay slope, bounded-energy range, FKG covariance.

    Returns the JSON-ready record {slope, slope_stderr, slope_tstat,
    energy_min, energy_max, fkg_cov, fkg_sigma, flags...}.
    """
    if radii is None:
        radii = list(range(1, min(window.L, 6) + 1))
    # (a) exponential decay of connectivity: slope of log P(0 <-> dB_k) vs k
    logs, ws, ks = [], [], []
    for k in radii:
        hits = 0
        for config in equilibrated_samples(window, params, trials, rng):
            if _reaches_norm(config, k):
                hits += 1
        p_hat = max(hits, 1) / trials
        var_log = (1.0 - p_hat) / (trials * p_hat)
        logs.append(math.log(p_hat))
        ws.append(1.0 / max(var_log, 1e-12))
        ks.append(float(k))
    slope, slope_se = _weighted_slope(ks, logs, ws)

    # (b) bounded energy: extremes of the single-edge conditional
    lo, hi = math.inf, -math.inf
    n = window.edge_count
    for config in equilibrated_samples(window, params, max(energy_samples // 10, 5), rng):
        for i in rng.integers(0, n, size=10):
            pr = conditional_open_prob(config, edge_from_index(window, int(i)), params)
            lo, hi = min(lo, pr), max(hi, pr)

    # (c) FKG probe: covariance of two increasing indicator events
    e1 = EdgeId(0, 0, EAST)
    e2 = EdgeId(0, 0, NORTH)
    i1, i2 = edge_index(window, e1), edge_index(window, e2)
    a = np.empty(fkg_samples)
    b = np.empty(fkg_samples)
    for t, config in enumerate(
        equilibrated_samples(window, params, fkg_samples, rng)
    ):
        a[t] = config.states[i1]
        b[t] = config.states[i2]
    prod = (a - a.mean()) * (b - b.mean())
    cov = float(prod.mean())
    sigma = float(prod.std(ddof=1) / math.sqrt(fkg_samples))

    return {
        "slope": slope,
        "slope_stderr": slope_se,
        "slope_tstat": slope / slope_se if slope_se > 0 else math.nan,
        "slope_negative": slope < 0,
        "energy_min": lo,
        "energy_max": hi,
        "energy_lower_bound": min(params.p, params.disconnected_open_prob),
        "energy_upper_bound": params.p,
        "energy_ok": lo >= min(params.p, params.disconnected_open_prob) - 1e-12
        and hi <= params.p + 1e-12,
        "fkg_cov": cov,
        "fkg_sigma": sigma,
        "fkg_ok": cov >= -3.0 * sigma,
    }


def _weighted_slope(xs, ys, ws):
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    w = np.asarray(ws, dtype=float)
    wx = (w * x).sum() / w.sum()
    wy = (w * y).sum() / w.sum()
    sxx = (w * (x - wx) ** 2).sum()
    if sxx <= 0:
        return math.nan, math.inf  # a single radius cannot define a slope
    slope = (w * (x - wx) * (y - wy)).sum() / sxx
    return float(slope), float(math.sqrt(1.0 / sxx))
