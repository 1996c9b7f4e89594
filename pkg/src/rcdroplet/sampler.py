"""Samplers for the area-conditioned circuit measures.

Rejection sampling draws equilibrated unconditioned configurations until the
conditioning event holds, giving the exact conditional law.  The constrained
chain starts from a deterministic rectangle witness and runs single-edge heat
bath with flips rejected whenever they would break the event; since the
event-witness can only be destroyed by closing one of its own edges, the
expensive circuit re-extraction is amortized to those flips.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .circuits import (
    Circuit,
    extract_outermost_circuit,
    extract_sw_circuit,
    interior_area,
    sw_corner,
)
from .dynamics import RcmParams, conditional_open_prob, equilibrated_samples
from .lattice import EAST, NORTH, EdgeConfig, EdgeId, Window, edge_from_index, edge_index


class MaxAttemptsError(RuntimeError):
    def __init__(self, attempts: int):
        super().__init__(f"conditioning event not hit within {attempts} attempts")
        self.attempts = attempts


@dataclass
class ConditioningSpec:
    """Which conditioned measure to target.

    mode 'sw_centred': an open circuit with lexicographic minimum c_sw traps
    area >= area_min.  mode 'area_only': the outermost circuit around the
    origin traps area >= area_min.  mode 'origin_centred' additionally pins
    the circuit centre at the origin and needs a Wulff profile; when the
    profile is missing the caller should fall back to area_only.
    """

    mode: str
    area_min: float
    c_sw: Optional[tuple] = None
    profile: object = None
    n_scale: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("sw_centred", "origin_centred", "area_only"):
            raise ValueError(f"unknown conditioning mode {self.mode!r}")
        if self.area_min < 0:
            raise ValueError("area_min must be nonnegative")
        if self.mode == "sw_centred" and self.c_sw is None:
            raise ValueError("sw_centred conditioning needs c_sw")
        if self.mode == "origin_centred" and self.profile is None:
            raise ValueError("origin_centred conditioning needs a Wulff profile")

    def witness(self, config: EdgeConfig) -> Optional[Circuit]:
        """The conditioning circuit of a configuration, or None."""
        if self.mode == "sw_centred":
            c = extract_sw_circuit(config, self.c_sw, min_area=self.area_min)
        else:
            c = extract_outermost_circuit(config, (0, 0))
        if c is None or interior_area(c) < self.area_min:
            return None
        if self.mode == "origin_centred":
            from .wulff import global_distortion

            n = self.n_scale or math.sqrt(max(self.area_min, 1.0))
            _, centre = global_distortion(c, self.profile, n)
            if centre != (0, 0):
                return None
        return c

    def holds(self, config: EdgeConfig) -> bool:
        return self.witness(config) is not None


def _quick_reject(config: EdgeConfig, spec: ConditioningSpec) -> bool:
    """Cheap necessary conditions before running the dual flood."""
    if spec.mode == "sw_centred":
        cx, cy = spec.c_sw
        w = config.window
        if not (-w.L <= cx <= w.L - 1 and -w.L <= cy <= w.L - 1):
            return True
        return not (
            config.is_open(EdgeId(cx, cy, EAST)) and config.is_open(EdgeId(cx, cy, NORTH))
        )
    return False


def _axis_crossing_indices(window: Window):
    """Edge-index groups an origin-enclosing circuit must intersect: vertical
    edges across the positive/negative x half-axes, horizontal across y."""
    from .lattice import edge_index as eidx

    L = window.L
    east = [
        [eidx(window, EdgeId(0, y, EAST)) for y in range(1, L + 1)],
        [eidx(window, EdgeId(0, y, EAST)) for y in range(-L, 0)],
    ]
    north = [
        [eidx(window, EdgeId(x, 0, NORTH)) for x in range(1, L + 1)],
        [eidx(window, EdgeId(x, 0, NORTH)) for x in range(-L, 0)],
    ]
    return [np.array(g) for g in (north[0], north[1], east[0], east[1])]


def sample_rejection(window: Window, params: RcmParams, spec: ConditioningSpec,
                     rng, max_attempts: int = 1_000_000):
    """Exact conditional sample by rejection; raises MaxAttemptsError on budget."""
    n_edges = window.edge_count
    if params.q == 1.0 and spec.mode == "sw_centred":
        return _sw_rejection_blocked(window, params, spec, rng, max_attempts)
    if params.q == 1.0:
        groups = _axis_crossing_indices(window)
        block = 512
        attempt = 0
        while attempt < max_attempts:
            k = min(block, max_attempts - attempt)
            states = rng.random((k, n_edges)) < params.p
            gate = np.ones(k, dtype=bool)
            for g in groups:
                gate &= states[:, g].any(axis=1)
            for row in np.nonzero(gate)[0]:
                config = EdgeConfig(window, states[row])
                if spec.holds(config):
                    config.attempts = attempt + int(row) + 1
                    return config
            attempt += k
        raise MaxAttemptsError(max_attempts)
    attempt = 0
    for config in equilibrated_samples(window, params, max_attempts, rng):
        attempt += 1
        if _quick_reject(config, spec):
            continue
        if spec.holds(config):
            config.attempts = attempt
            return config
    raise MaxAttemptsError(max_attempts)


def _sw_rejection_blocked(window: Window, params: RcmParams, spec: ConditioningSpec,
                          rng, max_attempts: int, block: int = 256):
    """Vectorized iid rejection for the anchored event at q = 1.

    Draws blocks of product-measure configurations, applies cheap vectorized
    gates (anchor edges open), and runs the dual flood only on survivors.
    """
    from .lattice import EAST, NORTH, edge_index as eidx

    from .circuits import anchored_event_scan

    i_e = eidx(window, EdgeId(*spec.c_sw, EAST))
    i_n = eidx(window, EdgeId(*spec.c_sw, NORTH))
    n_edges = window.edge_count
    rest = np.array([i for i in range(n_edges) if i not in (i_e, i_n)])
    attempt = 0
    while attempt < max_attempts:
        k = min(block, max_attempts - attempt)
        # anchor edges first: the full configuration is drawn only when both
        # are open (the draws are independent, so the joint law is unchanged)
        gate = (rng.random((k, 2)) < params.p).all(axis=1)
        rows = np.nonzero(gate)[0]
        if rows.size:
            fill = rng.random((rows.size, n_edges - 2)) < params.p
            for j, row in enumerate(rows):
                states = np.zeros(n_edges, dtype=bool)
                states[rest] = fill[j]
                states[i_e] = states[i_n] = True
                config = EdgeConfig(window, states)
                if anchored_event_scan(config, spec.c_sw, spec.area_min) == "reject":
                    continue
                if spec.holds(config):
                    config.attempts = attempt + int(row) + 1
                    return config
        attempt += k
    raise MaxAttemptsError(max_attempts)


def seed_configuration(window: Window, spec: ConditioningSpec) -> EdgeConfig:
    """Deterministic all-closed configuration plus one rectangle witness circuit."""
    side = max(int(math.ceil(math.sqrt(max(spec.area_min, 1.0)))), 2)
    if spec.mode == "sw_centred":
        x0, y0 = spec.c_sw
    else:
        # the rectangle must strictly enclose the origin
        x0 = y0 = -((side + 1) // 2)
    x1, y1 = x0 + side, y0 + side
    L = window.L
    if not (-L <= x0 and x1 <= L and -L <= y0 and y1 <= L):
        raise ValueError("window too small for the seed rectangle")
    config = EdgeConfig(window)
    for x in range(x0, x1):
        config.set_edge(EdgeId(x, y0, EAST), True)
        config.set_edge(EdgeId(x, y1, EAST), True)
    for y in range(y0, y1):
        config.set_edge(EdgeId(x0, y, NORTH), True)
        config.set_edge(EdgeId(x1, y, NORTH), True)
    if not spec.holds(config):
        raise AssertionError("seed rectangle fails its own conditioning event")
    return config


def sample_constrained_mcmc(window: Window, params: RcmParams, spec: ConditioningSpec,
                            sweeps: int, rng, start: Optional[EdgeConfig] = None):
    """Heat-bath chain with event-violating flips rejected; returns the end state.

    The stationary law on the reachable component is the exact conditional.
    A witness circuit certifies the event: opening an edge can never destroy
    it, and closing an edge forces re-extraction only when the edge belongs
    to the witness (for origin/sw modes the event is monotone in additions).
    """
    config = start.copy() if start is not None else seed_configuration(window, spec)
    witness = spec.witness(config)
    if witness is None:
        raise ValueError("start configuration violates the conditioning event")
    witness_edges = set(witness.edges)
    n_edges = window.edge_count
    q_is_one = params.q == 1.0
    for _ in range(sweeps):
        u = rng.random(n_edges)
        for i in range(n_edges):
            e = edge_from_index(window, i)
            p_open = params.p if q_is_one else conditional_open_prob(config, e, params)
            new = bool(u[i] < p_open)
            old = bool(config.states[i])
            if new == old:
                continue
            config.states[i] = new
            if not new and e in witness_edges:
                w2 = spec.witness(config)
                if w2 is None:
                    config.states[i] = old
                else:
                    witness = w2
                    witness_edges = set(w2.edges)
    config.final_witness = spec.witness(config)
    return config


def estimate_c_sw(window: Window, params: RcmParams, n: float, samples: int, rng,
                  spec: Optional[ConditioningSpec] = None,
                  max_attempts_per_sample: int = 200_000):
    """Empirical mode of the SW corner over conditioned samples, ties lexicographic.

    By default samples come from the area-conditioned circuit around the
    origin; pass an origin_centred spec (with a profile) for the centred law.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if spec is None:
        spec = ConditioningSpec("area_only", area_min=float(n) ** 2)
    counts: dict[tuple, int] = {}
    for _ in range(samples):
        config = sample_rejection(window, params, spec, rng, max_attempts_per_sample)
        c = spec.witness(config)
        sw = sw_corner(c)
        counts[sw] = counts.get(sw, 0) + 1
    top = max(counts.values())
    # ties resolve to the lexicographically minimal vertex
    return min(v for v, k in counts.items() if k == top)


def write_archive(directory, configs, manifest: dict):
    """Persist snapshots plus a JSON manifest describing how they were drawn."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for i, cfg in enumerate(configs):
        name = f"sample_{i:05d}.rcmsnap"
        (out / name).write_text(cfg.to_snapshot())
        names.append(name)
    manifest = dict(manifest)
    manifest["files"] = names
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return out
