import math

import numpy as np
import pytest

from rcdroplet.circuits import (
    Circuit,
    circuit_from_json,
    circuit_to_json,
    convex_hull,
    extract_outermost_circuit,
    extract_sw_circuit,
    hausdorff_distance,
    interior_area,
    interior_faces,
    local_roughness,
    mfl,
    mlr,
    sw_corner,
)
from rcdroplet.lattice import EdgeConfig, Window, _edge_between
from rcdroplet.rng import make_rng

from oracles import (
    brute_hull,
    brute_outermost,
    brute_sw_outermost,
    cycle_edge_set,
    faces_inside,
)


def ring_config(window, loops):
    cfg = EdgeConfig(window)
    for loop in loops:
        for i in range(len(loop)):
            cfg.set_edge(_edge_between(loop[i], loop[(i + 1) % len(loop)]), True)
    return cfg


def square_loop(x0, y0, side):
    pts = []
    for x in range(x0, x0 + side):
        pts.append((x, y0))
    for y in range(y0, y0 + side):
        pts.append((x0 + side, y))
    for x in range(x0 + side, x0, -1):
        pts.append((x, y0 + side))
    for y in range(y0 + side, y0, -1):
        pts.append((x0, y))
    return pts


UNIT8 = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]


class TestCircuitType:
    def test_validation(self):
        with pytest.raises(ValueError):
            Circuit(((0, 0), (1, 0), (1, 1)))  # not closed back by unit steps
        with pytest.raises(ValueError):
            Circuit(((0, 0), (1, 0), (1, 1), (0, 1))[::-1])  # clockwise
        c = Circuit(((0, 0), (1, 0), (1, 1), (0, 1)))
        assert interior_area(c) == 1.0

    def test_json_roundtrip_starts_at_sw(self):
        c = Circuit.from_vertex_cycle([(1, 1), (0, 1), (0, 0), (1, 0)])
        assert c.vertices[0] == (0, 0)
        assert circuit_from_json(circuit_to_json(c)) == c


class TestExtraction:
    def test_unit_ring_around_origin(self):
        cfg = ring_config(Window(3), [UNIT8])
        c = extract_outermost_circuit(cfg, (0, 0))
        assert c is not None and interior_area(c) == 4.0

    def test_nested_rings_give_outer(self):
        cfg = ring_config(Window(4), [UNIT8, square_loop(-2, -2, 4)])
        c = extract_outermost_circuit(cfg, (0, 0))
        assert interior_area(c) == 16.0

    def test_figure_eight_pinched_at_origin(self):
        loop_a = [(0, 0), (1, 0), (1, 1), (0, 1)]
        loop_b = [(0, 0), (-1, 0), (-1, -1), (0, -1)]
        cfg = ring_config(Window(3), [loop_a, loop_b])
        assert extract_outermost_circuit(cfg, (0, 0)) is None
        assert brute_outermost(cfg, (0, 0)) is None

    def test_rim_point_rejected(self):
        cfg = EdgeConfig(Window(2))
        with pytest.raises(ValueError):
            extract_outermost_circuit(cfg, (2, 0))

    def test_agrees_with_brute_force_random(self):
        rng = make_rng(101)
        w = Window(3)
        found = 0
        for _ in range(1500):
            p = rng.uniform(0.45, 0.62)
            cfg = EdgeConfig(w, rng.random(w.edge_count) < p)
            got = extract_outermost_circuit(cfg, (0, 0))
            want = brute_outermost(cfg, (0, 0))
            if want is None:
                assert got is None
            else:
                found += 1
                assert got is not None
                assert got.edges == cycle_edge_set(want)
        assert found > 80  # the comparison exercised real circuits

    def test_touching_interior_ring_keeps_outer(self):
        # inner square shares the corner (2, 2) with the outer square
        outer = square_loop(-2, -2, 4)
        inner = square_loop(1, 1, 1)
        cfg = ring_config(Window(4), [outer, inner])
        c = extract_outermost_circuit(cfg, (0, 0))
        assert interior_area(c) == 16.0
        want = brute_outermost(cfg, (0, 0))
        assert c.edges == cycle_edge_set(want)


class TestSwExtraction:
    def test_simple_ring(self):
        cfg = ring_config(Window(3), [UNIT8])
        c = extract_sw_circuit(cfg, (-1, -1))
        assert c is not None and sw_corner(c) == (-1, -1)
        assert extract_sw_circuit(cfg, (0, 0)) is None

    def test_agrees_with_brute_force_random(self):
        rng = make_rng(103)
        w = Window(3)
        found = 0
        for _ in range(1500):
            cfg = EdgeConfig(w, rng.random(w.edge_count) < rng.uniform(0.3, 0.55))
            anchor = (int(rng.integers(-2, 1)), int(rng.integers(-2, 1)))
            got = extract_sw_circuit(cfg, anchor)
            want = brute_sw_outermost(cfg, anchor)
            if want is None:
                assert got is None
            else:
                found += 1
                assert got is not None
                assert got.edges == cycle_edge_set(want)
        assert found > 50


class TestGeometry:
    def test_interior_area_trivial(self):
        assert interior_area(Circuit(((0, 0), (1, 0), (1, 1), (0, 1)))) == 1.0
        c3 = Circuit.from_vertex_cycle(square_loop(0, 0, 3))
        assert interior_area(c3) == 9.0

    def test_area_equals_face_count_random(self):
        rng = make_rng(104)
        w = Window(4)
        done = 0
        while done < 60:
            cfg = EdgeConfig(w, rng.random(w.edge_count) < 0.45)
            c = extract_outermost_circuit(cfg, (0, 0))
            if c is None:
                continue
            done += 1
            assert interior_area(c) == len(faces_inside(c.vertices))
            assert interior_faces(c) == faces_inside(c.vertices)

    def test_hull_square(self):
        c = Circuit.from_vertex_cycle(square_loop(0, 0, 2))
        assert set(convex_hull(c)) == {(0, 0), (2, 0), (2, 2), (0, 2)}

    def test_hull_matches_brute_force(self):
        rng = make_rng(105)
        w = Window(4)
        done = 0
        while done < 40:
            cfg = EdgeConfig(w, rng.random(w.edge_count) < 0.45)
            c = extract_outermost_circuit(cfg, (0, 0))
            if c is None:
                continue
            done += 1
            hull = convex_hull(c)
            assert set(hull) == brute_hull(c.vertices)
            # hull contains every circuit vertex
            from rcdroplet import geom

            for v in c.vertices:
                assert geom.point_in_polygon(v, hull)

    def test_mlr_zero_iff_convex(self):
        sq = Circuit.from_vertex_cycle(square_loop(0, 0, 3))
        assert mlr(sq) == 0.0

    def test_notched_square_mlr(self):
        # 4x4 square with a 1-deep, 1-wide inward notch on the top side
        pts = square_loop(0, 0, 4)
        i = pts.index((2, 4))
        pts = pts[:i] + [(2, 4), (2, 3), (1, 3)] + pts[i + 1 :]
        c = Circuit.from_vertex_cycle(pts)
        assert mlr(c) == 1.0
        assert local_roughness(c, (2, 3)) == 1.0
        assert local_roughness(c, (0, 0)) == 0.0
        with pytest.raises(ValueError):
            local_roughness(c, (9, 9))

    def test_mlr_invariant_under_isometries(self):
        pts = square_loop(0, 0, 4)
        i = pts.index((2, 4))
        pts = pts[:i] + [(2, 4), (2, 3), (1, 3)] + pts[i + 1 :]
        c = Circuit.from_vertex_cycle(pts)
        t = c.translated((5, -3))
        assert mlr(t) == mlr(c)
        rot = Circuit.from_vertex_cycle([(-y, x) for x, y in c.vertices])
        assert mlr(rot) == mlr(c)

    def test_mlr_equals_max_local_roughness(self):
        rng = make_rng(106)
        w = Window(4)
        done = 0
        while done < 30:
            cfg = EdgeConfig(w, rng.random(w.edge_count) < 0.45)
            c = extract_outermost_circuit(cfg, (0, 0))
            if c is None:
                continue
            done += 1
            assert mlr(c) == pytest.approx(
                max(local_roughness(c, v) for v in c.vertices), abs=1e-12
            )

    def test_mfl_square_and_cut_corner(self):
        k = 5
        sq = Circuit.from_vertex_cycle(square_loop(0, 0, k))
        assert mfl(sq) == k
        pts = square_loop(0, 0, k)
        pts[pts.index((k, 0))] = (k - 1, 1)  # staircase-cut one corner
        c = Circuit.from_vertex_cycle(pts)
        hull = convex_hull(c)
        assert (k - 1, 0) in hull and (k, 1) in hull  # the 45-degree facet exists
        assert mfl(c) == k  # uncut sides still dominate

    def test_mfl_at_least_mean_hull_edge(self):
        rng = make_rng(107)
        w = Window(4)
        done = 0
        while done < 30:
            cfg = EdgeConfig(w, rng.random(w.edge_count) < 0.45)
            c = extract_outermost_circuit(cfg, (0, 0))
            if c is None:
                continue
            done += 1
            hull = convex_hull(c)
            per = sum(
                math.dist(hull[i], hull[(i + 1) % len(hull)]) for i in range(len(hull))
            )
            assert mfl(c) >= per / len(hull) - 1e-12

    def test_sw_corner_rules(self):
        c = Circuit(((0, 0), (1, 0), (1, 1), (0, 1)))
        assert sw_corner(c) == (0, 0)
        assert sw_corner(c.translated((3, 7))) == (3, 7)
        # two vertices share min x: the lower wins
        pts = square_loop(0, 0, 2)
        assert sw_corner(Circuit.from_vertex_cycle(pts)) == (0, 0)

    def test_plus_shape_hull(self):
        # plus-shaped circuit: 12 corners reduce to the 8 extreme ones
        plus = [
            (1, 0), (2, 0), (2, 1), (3, 1), (3, 2), (2, 2),
            (2, 3), (1, 3), (1, 2), (0, 2), (0, 1), (1, 1),
        ]
        # trace the plus outline as a lattice circuit
        cfg = ring_config(Window(4), [])
        outline = []
        for i in range(len(plus)):
            a, b = plus[i], plus[(i + 1) % len(plus)]
            steps = abs(a[0] - b[0]) + abs(a[1] - b[1])
            dx = (b[0] - a[0]) // max(steps, 1)
            dy = (b[1] - a[1]) // max(steps, 1)
            for s in range(steps):
                outline.append((a[0] + s * dx, a[1] + s * dy))
        c = Circuit.from_vertex_cycle(outline)
        assert set(convex_hull(c)) == brute_hull(outline)
        assert len(convex_hull(c)) == 8


class TestHausdorff:
    def test_identical_sets(self):
        pts = [(0, 0), (1, 2), (3, 1)]
        assert hausdorff_distance(pts, pts) == 0.0

    def test_singletons(self):
        assert hausdorff_distance([(0, 0)], [(3, 4)]) == 5.0

    def test_symmetry_random(self):
        rng = make_rng(108)
        for _ in range(20):
            a = rng.integers(-10, 10, size=(8, 2))
            b = rng.integers(-10, 10, size=(6, 2))
            assert hausdorff_distance(a, b) == hausdorff_distance(b, a)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            hausdorff_distance([], [(0, 0)])
