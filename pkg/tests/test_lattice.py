import numpy as np
import pytest

from rcdroplet.lattice import (
    EAST,
    NORTH,
    EdgeConfig,
    EdgeId,
    Window,
    all_edges,
    connected,
    edge_from_index,
    edge_index,
    open_cluster,
)
from rcdroplet.rng import make_rng

from oracles import bfs_connected, exhaustive_cluster_edges


def test_window_counts():
    w = Window(1)
    assert w.vertex_count == 9
    assert w.edge_count == 12  # 2 * 3 * 2
    assert Window(2).edge_count == 40
    with pytest.raises(ValueError):
        Window(0)
    with pytest.raises(ValueError):
        Window(30001)


def test_first_edge_in_canonical_order():
    w = Window(1)
    assert edge_index(w, EdgeId(-1, -1, EAST)) == 0
    assert len({edge_index(w, e) for e in all_edges(w)}) == 12


def test_index_roundtrip_exhaustive_L2():
    w = Window(2)
    for i in range(w.edge_count):
        assert edge_index(w, edge_from_index(w, i)) == i


def test_out_of_window_edge_rejected():
    w = Window(1)
    with pytest.raises(ValueError):
        edge_index(w, EdgeId(1, 0, EAST))  # endpoint (2, 0) outside


def test_snapshot_roundtrip_property():
    rng = make_rng(11)
    for L in (1, 2, 3):
        w = Window(L)
        for _ in range(50):
            cfg = EdgeConfig(w, rng.random(w.edge_count) < rng.uniform(0.1, 0.9))
            text = cfg.to_snapshot()
            assert text.startswith(f"rcmsnap v1 L={L}\n")
            assert text.endswith("\n")
            assert EdgeConfig.from_snapshot(text) == cfg


def test_connected_trivial_cases():
    w = Window(2)
    cfg = EdgeConfig(w)
    assert not connected(cfg, (0, 0), (1, 0))  # all closed, a != b
    assert connected(cfg, (1, 1), (1, 1))      # a == b, empty path


def test_connected_agrees_with_bfs_oracle():
    rng = make_rng(5)
    w = Window(2)
    verts = list(w.vertices())
    for _ in range(1000):
        cfg = EdgeConfig(w, rng.random(w.edge_count) < 0.5)
        i, j = rng.integers(0, len(verts), size=2)
        a, b = verts[i], verts[j]
        assert connected(cfg, a, b) == bfs_connected(cfg, a, b)


def test_connected_region_restriction():
    w = Window(2)
    cfg = EdgeConfig(w)
    path = [EdgeId(0, 0, EAST), EdgeId(1, 0, NORTH)]
    for e in path:
        cfg.set_edge(e, True)
    assert connected(cfg, (0, 0), (1, 1))
    assert not connected(cfg, (0, 0), (1, 1), region=[EdgeId(0, 0, EAST)])


def test_connected_is_equivalence_on_samples():
    rng = make_rng(6)
    w = Window(2)
    verts = list(w.vertices())
    for _ in range(60):
        cfg = EdgeConfig(w, rng.random(w.edge_count) < 0.5)
        idx = rng.integers(0, len(verts), size=3)
        a, b, c = (verts[k] for k in idx)
        assert connected(cfg, a, a)
        assert connected(cfg, a, b) == connected(cfg, b, a)
        if connected(cfg, a, b) and connected(cfg, b, c):
            assert connected(cfg, a, c)


def test_open_cluster_trivial():
    w = Window(2)
    cfg = EdgeConfig(w)
    assert open_cluster(cfg, (0, 0)) == set()
    e = EdgeId(0, 0, EAST)
    cfg.set_edge(e, True)
    assert open_cluster(cfg, (0, 0)) == {e}


def test_open_cluster_matches_exhaustive_oracle():
    rng = make_rng(7)
    w = Window(2)
    verts = list(w.vertices())
    for _ in range(300):
        cfg = EdgeConfig(w, rng.random(w.edge_count) < 0.5)
        a = verts[rng.integers(0, len(verts))]
        assert open_cluster(cfg, a) == exhaustive_cluster_edges(cfg, a)


def test_cluster_equality_when_connected():
    rng = make_rng(8)
    w = Window(2)
    verts = list(w.vertices())
    for _ in range(200):
        cfg = EdgeConfig(w, rng.random(w.edge_count) < 0.5)
        i, j = rng.integers(0, len(verts), size=2)
        a, b = verts[i], verts[j]
        if connected(cfg, a, b):
            assert open_cluster(cfg, a) == open_cluster(cfg, b)
