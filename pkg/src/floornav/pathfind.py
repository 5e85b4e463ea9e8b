"""Free-space grid planning: occupancy grids, Dijkstra/A*, line of sight.

Grid cell centers sit on the lattice (minx + i*cell, miny + j*cell) so metric
coordinates that land exactly on the lattice are preserved by snapping. A cell
is free iff its center lies inside some region and keeps the wall clearance.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import FloorPlan, Point2, extract_walls, locate_region, points_in_polygon_mask
from .simulator import WALL_CLEARANCE_M

PLANNING_CELL_M = 0.1

_SQRT2 = math.sqrt(2.0)
_NEIGHBORS = ((0, 1, 1.0), (0, -1, 1.0), (1, 0, 1.0), (-1, 0, 1.0),
              (1, 1, _SQRT2), (1, -1, _SQRT2), (-1, 1, _SQRT2), (-1, -1, _SQRT2))


class PathfindError(ValueError):
    """Invalid planning endpoint (outside regions or inside a wall)."""


@dataclass(frozen=True)
class NavGrid:
    minx: float
    miny: float
    cell: float
    nx: int
    ny: int
    free: np.ndarray  # (ny, nx) bool

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return (self.minx + i * self.cell, self.miny + j * self.cell)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        i = int(round((x - self.minx) / self.cell))
        j = int(round((y - self.miny) / self.cell))
        return (min(max(i, 0), self.nx - 1), min(max(j, 0), self.ny - 1))

    def nearest_free_cell(self, x: float, y: float,
                          max_radius_cells: int = 12) -> tuple[int, int] | None:
        i0, j0 = self.cell_of(x, y)
        if self.free[j0, i0]:
            return (i0, j0)
        best = None
        best_d = math.inf
        for radius in range(1, max_radius_cells + 1):
            for dj in range(-radius, radius + 1):
                for di in range(-radius, radius + 1):
                    if max(abs(di), abs(dj)) != radius:
                        continue
                    i, j = i0 + di, j0 + dj
                    if 0 <= i < self.nx and 0 <= j < self.ny and self.free[j, i]:
                        cx, cy = self.cell_center(i, j)
                        d = math.hypot(cx - x, cy - y)
                        if d < best_d:
                            best, best_d = (i, j), d
            if best is not None:
                return best
        return None


@lru_cache(maxsize=32)
def build_nav_grid(fp: FloorPlan, cell: float = PLANNING_CELL_M,
                   clearance: float = WALL_CLEARANCE_M) -> NavGrid:
    minx, miny, maxx, maxy = fp.bounds
    nx = int(math.ceil((maxx - minx) / cell)) + 1
    ny = int(math.ceil((maxy - miny) / cell)) + 1
    xs = minx + np.arange(nx) * cell
    ys = miny + np.arange(ny) * cell
    gx, gy = np.meshgrid(xs, ys)
    flat_x, flat_y = gx.ravel(), gy.ravel()

    inside = np.zeros(flat_x.shape, dtype=bool)
    for r in fp.regions:
        inside |= points_in_polygon_mask(flat_x, flat_y, r.polygon)

    segs = extract_walls(fp).segment_array
    if segs.shape[0]:
        dmin = _min_seg_distances(flat_x, flat_y, segs)
        inside &= dmin >= clearance
    free = inside.reshape(ny, nx)
    free.setflags(write=False)
    return NavGrid(minx, miny, cell, nx, ny, free)


def _min_seg_distances(xs: np.ndarray, ys: np.ndarray, segs: np.ndarray) -> np.ndarray:
    dmin = np.full(xs.shape, np.inf)
    for k in range(segs.shape[0]):
        ax, ay, bx, by = segs[k]
        wx, wy = bx - ax, by - ay
        ll = wx * wx + wy * wy or 1.0
        t = np.clip(((xs - ax) * wx + (ys - ay) * wy) / ll, 0.0, 1.0)
        np.minimum(dmin, np.hypot(xs - (ax + t * wx), ys - (ay + t * wy)), out=dmin)
    return dmin


@lru_cache(maxsize=256)
def distance_field(fp: FloorPlan, goal: Point2, cell: float = PLANNING_CELL_M,
                   clearance: float = WALL_CLEARANCE_M) -> np.ndarray:
    """Metric distance-to-goal over the grid (inf where unreachable).

    Replanning a shortest path from an arbitrary pose reduces to greedy
    descent of this field, so one Dijkstra sweep serves a whole episode.
    """
    grid = build_nav_grid(fp, cell, clearance)
    goal_cell = grid.nearest_free_cell(goal.x, goal.y)
    field = np.full((grid.ny, grid.nx), np.inf)
    if goal_cell is None:
        field.setflags(write=False)
        return field
    gi, gj = goal_cell
    field[gj, gi] = 0.0
    heap = [(0.0, gj, gi)]
    free = grid.free
    step = grid.cell
    while heap:
        d, j, i = heapq.heappop(heap)
        if d > field[j, i]:
            continue
        for dj, di, w in _NEIGHBORS:
            jj, ii = j + dj, i + di
            if 0 <= jj < grid.ny and 0 <= ii < grid.nx and free[jj, ii]:
                nd = d + w * step
                if nd < field[jj, ii]:
                    field[jj, ii] = nd
                    heapq.heappush(heap, (nd, jj, ii))
    field.setflags(write=False)
    return field


def astar_cost(grid: NavGrid, start: tuple[int, int], goal: tuple[int, int]) -> float:
    """Optimal 8-connected cost between two free cells (octile heuristic)."""
    if start == goal:
        return 0.0
    step = grid.cell

    def h(i, j):
        dx, dy = abs(i - goal[0]), abs(j - goal[1])
        return step * (max(dx, dy) + (_SQRT2 - 1.0) * min(dx, dy))

    gscore = {start: 0.0}
    heap = [(h(*start), 0.0, start)]
    free = grid.free
    while heap:
        _, g, (i, j) = heapq.heappop(heap)
        if (i, j) == goal:
            return g
        if g > gscore.get((i, j), math.inf):
            continue
        for dj, di, w in _NEIGHBORS:
            ii, jj = i + di, j + dj
            if 0 <= ii < grid.nx and 0 <= jj < grid.ny and free[jj, ii]:
                ng = g + w * step
                if ng < gscore.get((ii, jj), math.inf):
                    gscore[(ii, jj)] = ng
                    heapq.heappush(heap, (ng + h(ii, jj), ng, (ii, jj)))
    return math.inf


def astar_path(grid: NavGrid, start: tuple[int, int], goal: tuple[int, int]) -> list[tuple[int, int]] | None:
    """Optimal cell path including both endpoints; None if disconnected."""
    if start == goal:
        return [start]
    step = grid.cell

    def h(i, j):
        dx, dy = abs(i - goal[0]), abs(j - goal[1])
        return step * (max(dx, dy) + (_SQRT2 - 1.0) * min(dx, dy))

    gscore = {start: 0.0}
    came: dict[tuple[int, int], tuple[int, int]] = {}
    heap = [(h(*start), 0.0, start)]
    free = grid.free
    while heap:
        _, g, cur = heapq.heappop(heap)
        if cur == goal:
            path = [cur]
            while cur in came:
                cur = came[cur]
                path.append(cur)
            return list(reversed(path))
        if g > gscore.get(cur, math.inf):
            continue
        i, j = cur
        for dj, di, w in _NEIGHBORS:
            ii, jj = i + di, j + dj
            if 0 <= ii < grid.nx and 0 <= jj < grid.ny and free[jj, ii]:
                ng = g + w * step
                if ng < gscore.get((ii, jj), math.inf):
                    gscore[(ii, jj)] = ng
                    came[(ii, jj)] = cur
                    heapq.heappush(heap, (ng + h(ii, jj), ng, (ii, jj)))
    return None


@lru_cache(maxsize=8192)
def shortest_path_cost(fp: FloorPlan, a: Point2, b: Point2,
                       cell: float = PLANNING_CELL_M,
                       clearance: float = WALL_CLEARANCE_M) -> float:
    """Free-space shortest path length in meters; inf when disconnected."""
    for name, p in (("a", a), ("b", b)):
        if locate_region(fp, p) is None:
            raise PathfindError(f"endpoint {name}=({p.x}, {p.y}) is in a wall or outside regions")
    if a.distance_to(b) < 1e-12:
        return 0.0
    grid = build_nav_grid(fp, cell, clearance)
    ca = grid.nearest_free_cell(a.x, a.y)
    cb = grid.nearest_free_cell(b.x, b.y)
    if ca is None or cb is None:
        raise PathfindError("endpoint has no free planning cell within range")
    cost = astar_cost(grid, ca, cb)
    if cost == math.inf:
        return math.inf
    ax, ay = grid.cell_center(*ca)
    bx, by = grid.cell_center(*cb)
    return math.hypot(a.x - ax, a.y - ay) + cost + math.hypot(b.x - bx, b.y - by)


# ---------------------------------------------------------------------------
# Segment clearance / line of sight (used for waypoint simplification).
# ---------------------------------------------------------------------------

def segment_clearance(p: Point2, q: Point2, segs: np.ndarray) -> float:
    """Minimum distance from segment pq to any wall segment (0 if crossing)."""
    if segs.shape[0] == 0:
        return math.inf
    px, py, qx, qy = p.x, p.y, q.x, q.y
    ax, ay, bx, by = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]

    d1 = _orient_arr(ax, ay, bx, by, px, py)
    d2 = _orient_arr(ax, ay, bx, by, qx, qy)
    d3 = _orient_arr(px, py, qx, qy, ax, ay)
    d4 = _orient_arr(px, py, qx, qy, bx, by)
    crossing = ((d1 * d2) < 0) & ((d3 * d4) < 0)
    if np.any(crossing):
        return 0.0

    dists = [
        _point_seg_arr(px, py, ax, ay, bx, by),
        _point_seg_arr(qx, qy, ax, ay, bx, by),
        _point_seg_scalarseg(ax, ay, px, py, qx, qy),
        _point_seg_scalarseg(bx, by, px, py, qx, qy),
    ]
    return float(min(d.min() for d in dists))


def _orient_arr(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _point_seg_arr(px, py, ax, ay, bx, by):
    wx, wy = bx - ax, by - ay
    ll = wx * wx + wy * wy
    ll = np.where(ll == 0, 1.0, ll)
    t = np.clip(((px - ax) * wx + (py - ay) * wy) / ll, 0.0, 1.0)
    return np.hypot(px - (ax + t * wx), py - (ay + t * wy))


def _point_seg_scalarseg(px, py, ax, ay, bx, by):
    wx, wy = bx - ax, by - ay
    ll = wx * wx + wy * wy or 1.0
    t = np.clip(((px - ax) * wx + (py - ay) * wy) / ll, 0.0, 1.0)
    return np.hypot(px - (ax + t * wx), py - (ay + t * wy))


def line_of_sight(segs: np.ndarray, a: Point2, b: Point2, clearance: float) -> bool:
    return segment_clearance(a, b, segs) >= clearance


def simplify_path(points: list[Point2], segs: np.ndarray,
                  clearance: float = 0.2, max_hop: float = 1.0) -> list[Point2]:
    """Greedy farthest-visible waypoint reduction, then hop-length capping.

    Capping keeps hops short enough that (a) region traces built from the
    waypoints do not skip regions and (b) the quantized-heading action
    compiler cannot drift far off the straight line between waypoints.
    """
    if len(points) <= 2:
        simplified = list(points)
    else:
        simplified = [points[0]]
        i = 0
        while i < len(points) - 1:
            j = len(points) - 1
            while j > i + 1 and not line_of_sight(segs, points[i], points[j], clearance):
                j -= 1
            simplified.append(points[j])
            i = j
    out: list[Point2] = [simplified[0]]
    for p, q in zip(simplified, simplified[1:]):
        hops = max(1, int(math.ceil(p.distance_to(q) / max_hop)))
        for k in range(1, hops + 1):
            t = k / hops
            out.append(Point2(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)))
    return out
