import math

import numpy as np
import pytest

from floornav.geometry import Point2, Region, extract_walls
from floornav.pathfind import (
    PathfindError,
    build_nav_grid,
    distance_field,
    line_of_sight,
    segment_clearance,
    shortest_path_cost,
    simplify_path,
)

from .conftest import make_plan, square
from .oracles import grid_dijkstra_length


class TestShortestPath:
    def test_obstacle_free_diagonal(self):
        fp = make_plan([Region(square(0, 0, 10, 10), "kitchen", 0)])
        L = shortest_path_cost(fp, Point2(1, 1), Point2(9, 9))
        assert L == pytest.approx(8 * math.sqrt(2), abs=1e-6)

    def test_same_point_zero(self):
        fp = make_plan([Region(square(0, 0, 10, 10), "kitchen", 0)])
        assert shortest_path_cost(fp, Point2(3, 3), Point2(3, 3)) == 0.0

    def test_endpoint_outside_regions_rejected(self):
        fp = make_plan([Region(square(0, 0, 10, 10), "kitchen", 0)])
        with pytest.raises(PathfindError, match="outside regions"):
            shortest_path_cost(fp, Point2(-5, -5), Point2(9, 9))

    def test_l_shaped_detour_matches_dijkstra_oracle(self, corridor_plan):
        # DERIVED: exhaustive Dijkstra at 0.05 m, within 5%.
        from floornav.geometry import pole_of_inaccessibility

        a = pole_of_inaccessibility(corridor_plan.regions[1].polygon)
        b = pole_of_inaccessibility(corridor_plan.regions[2].polygon)
        got = shortest_path_cost(corridor_plan, a, b)
        expected = grid_dijkstra_length(corridor_plan, (a.x, a.y), (b.x, b.y))
        assert got == pytest.approx(expected, rel=0.05)

    def test_symmetry_and_triangle_inequality(self, corridor_plan):
        from floornav.geometry import pole_of_inaccessibility

        pts = [pole_of_inaccessibility(r.polygon) for r in corridor_plan.regions]
        a, b, c = pts[0], pts[1], pts[2]
        ab = shortest_path_cost(corridor_plan, a, b)
        ba = shortest_path_cost(corridor_plan, b, a)
        assert ab == pytest.approx(ba, abs=1e-9)
        ac = shortest_path_cost(corridor_plan, a, c)
        cb = shortest_path_cost(corridor_plan, c, b)
        slack = 2 * 0.1 * math.sqrt(2)
        assert ab <= ac + cb + slack

    def test_disconnected_is_infinite(self):
        fp = make_plan([
            Region(square(0, 0, 2, 2), "kitchen", 0),
            Region(square(5, 5, 7, 7), "bedroom", 1),
        ])
        assert shortest_path_cost(fp, Point2(1, 1), Point2(6, 6)) == math.inf


class TestDistanceField:
    def test_field_descends_to_goal(self, corridor_plan):
        from floornav.geometry import pole_of_inaccessibility

        goal = pole_of_inaccessibility(corridor_plan.regions[2].polygon)
        field = distance_field(corridor_plan, goal)
        grid = build_nav_grid(corridor_plan)
        gi, gj = grid.nearest_free_cell(goal.x, goal.y)
        assert field[gj, gi] == 0.0
        start = pole_of_inaccessibility(corridor_plan.regions[1].polygon)
        si, sj = grid.nearest_free_cell(start.x, start.y)
        assert np.isfinite(field[sj, si])

    def test_field_consistent_with_astar(self, corridor_plan):
        from floornav.geometry import pole_of_inaccessibility

        a = pole_of_inaccessibility(corridor_plan.regions[1].polygon)
        b = pole_of_inaccessibility(corridor_plan.regions[2].polygon)
        field = distance_field(corridor_plan, b)
        grid = build_nav_grid(corridor_plan)
        ai, aj = grid.nearest_free_cell(a.x, a.y)
        from floornav.pathfind import astar_cost

        bi, bj = grid.nearest_free_cell(b.x, b.y)
        assert field[aj, ai] == pytest.approx(astar_cost(grid, (ai, aj), (bi, bj)), abs=1e-9)


class TestLineOfSight:
    def test_clear_segment(self):
        segs = np.array([[0.0, 5.0, 10.0, 5.0]])
        assert line_of_sight(segs, Point2(0, 0), Point2(10, 0), 0.2)

    def test_crossing_segment_blocked(self):
        segs = np.array([[5.0, -1.0, 5.0, 1.0]])
        assert not line_of_sight(segs, Point2(0, 0), Point2(10, 0), 0.2)
        assert segment_clearance(Point2(0, 0), Point2(10, 0), segs) == 0.0

    def test_near_miss_respects_clearance(self):
        segs = np.array([[0.0, 0.15, 10.0, 0.15]])
        assert not line_of_sight(segs, Point2(0, 0), Point2(10, 0), 0.2)
        assert line_of_sight(segs, Point2(0, 0), Point2(10, 0), 0.1)


class TestSimplify:
    def test_collinear_chain_collapses_then_resplits(self):
        pts = [Point2(0, 0.1 * i) for i in range(41)]  # 4 m straight line
        out = simplify_path(pts, np.zeros((0, 4)), clearance=0.2, max_hop=1.0)
        assert out[0] == pts[0] and out[-1] == pts[-1]
        assert len(out) == 5  # 4 hops of 1 m
        hops = [out[i].distance_to(out[i + 1]) for i in range(len(out) - 1)]
        assert all(h <= 1.0 + 1e-9 for h in hops)

    def test_simplified_hops_keep_line_of_sight(self, corridor_plan):
        from floornav.geometry import pole_of_inaccessibility
        from floornav.pathfind import astar_path

        grid = build_nav_grid(corridor_plan)
        a = pole_of_inaccessibility(corridor_plan.regions[1].polygon)
        b = pole_of_inaccessibility(corridor_plan.regions[2].polygon)
        ca = grid.nearest_free_cell(a.x, a.y)
        cb = grid.nearest_free_cell(b.x, b.y)
        cells = astar_path(grid, ca, cb)
        pts = [Point2(*grid.cell_center(i, j)) for i, j in cells]
        segs = extract_walls(corridor_plan).segment_array
        out = simplify_path(pts, segs, clearance=0.15, max_hop=1.0)
        assert out[0] == pts[0] and out[-1] == pts[-1]
        for p, q in zip(out, out[1:]):
            assert p.distance_to(q) <= 1.0 + 1e-9
            # hops the simplifier collapsed must honor its clearance; short
            # residual hops keep whatever the grid path had (door squeezes)
            if p.distance_to(q) > 2 * grid.cell:
                assert segment_clearance(p, q, segs) >= 0.15 - 1e-9
