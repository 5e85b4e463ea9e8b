"""Vectorized floor-plan model: semantic region polygons, containment, walls, adjacency.

Coordinates are meters in a floor-local frame. All types are immutable after
construction and all operations are pure, so everything here is safe to share
across threads/processes.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache

import numpy as np

# Point-on-edge tolerance for containment queries (m).
BOUNDARY_TOL = 1e-9
# Lateral tolerance for two boundary edges to count as geometrically coincident (m).
COINCIDENT_TOL = 1e-6
# Coincident overlap shorter than this stays wall; longer becomes a passable doorway (m).
DOORWAY_MIN_OVERLAP = 0.6


class FloorPlanError(ValueError):
    """Malformed floor-plan document or invalid geometry."""


class Containment(Enum):
    INSIDE = "inside"
    ON_BOUNDARY = "on_boundary"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise FloorPlanError(f"non-finite point ({self.x}, {self.y})")

    def distance_to(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Polygon:
    """Simple polygon given by its boundary vertices; closure is implicit
    (the first vertex is not repeated at the end)."""

    vertices: tuple[Point2, ...]

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise FloorPlanError(f"polygon needs >= 3 vertices, got {len(self.vertices)}")

    @cached_property
    def coords(self) -> np.ndarray:
        """(m, 2) float array of vertices."""
        return np.array([(v.x, v.y) for v in self.vertices], dtype=float)

    @cached_property
    def signed_area(self) -> float:
        """Shoelace area; positive for counter-clockwise winding."""
        c = self.coords
        x, y = c[:, 0], c[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def area(self) -> float:
        return abs(self.signed_area)

    @property
    def is_ccw(self) -> bool:
        return self.signed_area > 0

    def reversed_orientation(self) -> "Polygon":
        """Flip winding while keeping the same first vertex."""
        v = self.vertices
        return Polygon((v[0],) + tuple(reversed(v[1:])))

    @cached_property
    def bounds(self) -> tuple[float, float, float, float]:
        c = self.coords
        return (float(c[:, 0].min()), float(c[:, 1].min()),
                float(c[:, 0].max()), float(c[:, 1].max()))

    @cached_property
    def centroid(self) -> Point2:
        """Area-weighted centroid."""
        c = self.coords
        x, y = c[:, 0], c[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        a = float(np.sum(cross)) / 2.0
        if abs(a) < 1e-12:
            return Point2(float(x.mean()), float(y.mean()))
        cx = float(np.sum((x + xn) * cross)) / (6.0 * a)
        cy = float(np.sum((y + yn) * cross)) / (6.0 * a)
        return Point2(cx, cy)

    def edges(self) -> list[tuple[Point2, Point2]]:
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    @cached_property
    def edge_array(self) -> np.ndarray:
        """(m, 4) array of [ax, ay, bx, by] per boundary edge."""
        c = self.coords
        n = np.roll(c, -1, axis=0)
        return np.hstack([c, n])

    def is_simple(self) -> bool:
        """True iff no two non-adjacent edges intersect and no edge degenerates."""
        v = self.coords
        m = len(v)
        nxt = np.roll(v, -1, axis=0)
        if np.any(np.hypot(*(nxt - v).T) < 1e-12):
            return False
        for i in range(m):
            a, b = v[i], nxt[i]
            for j in range(i + 1, m):
                if j == i or (j + 1) % m == i or (i + 1) % m == j:
                    # Adjacent edges share exactly one endpoint; spikes (a
                    # reversal through the shared vertex) are still invalid.
                    if (i + 1) % m == j:
                        d1, d2 = b - a, nxt[j] - v[j]
                        if abs(d1[0] * d2[1] - d1[1] * d2[0]) < 1e-12 and np.dot(d1, d2) < 0:
                            return False
                    continue
                if _segments_intersect(a, b, v[j], nxt[j]):
                    return False
        return True


def _segments_intersect(p1, p2, p3, p4) -> bool:
    """Proper or improper intersection of segments p1p2 and p3p4."""
    d1 = _orient(p3, p4, p1)
    d2 = _orient(p3, p4, p2)
    d3 = _orient(p1, p2, p3)
    d4 = _orient(p1, p2, p4)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and \
       ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    eps = 1e-12
    if abs(d1) < eps and _on_segment(p3, p4, p1):
        return True
    if abs(d2) < eps and _on_segment(p3, p4, p2):
        return True
    if abs(d3) < eps and _on_segment(p1, p2, p3):
        return True
    if abs(d4) < eps and _on_segment(p1, p2, p4):
        return True
    return False


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, p) -> bool:
    return (min(a[0], b[0]) - 1e-12 <= p[0] <= max(a[0], b[0]) + 1e-12 and
            min(a[1], b[1]) - 1e-12 <= p[1] <= max(a[1], b[1]) + 1e-12)


@dataclass(frozen=True)
class Region:
    polygon: Polygon
    region_type: str
    region_id: int

    def __post_init__(self):
        if not self.region_type:
            raise FloorPlanError(f"region {self.region_id}: empty region_type")
        if self.region_id < 0 or int(self.region_id) != self.region_id:
            raise FloorPlanError(f"region id must be a non-negative integer, got {self.region_id}")
        if self.polygon.area <= 1e-12:
            raise FloorPlanError(f"region {self.region_id}: degenerate polygon (zero area)")


@dataclass(frozen=True)
class FloorPlan:
    scene_id: str
    floor_id: str
    regions: tuple[Region, ...]
    type_catalog: tuple[str, ...]

    def __post_init__(self):
        if len(self.regions) < 1:
            raise FloorPlanError("floor plan needs at least one region")
        ids = [r.region_id for r in self.regions]
        dupes = {i for i in ids if ids.count(i) > 1}
        if dupes:
            raise FloorPlanError(f"duplicate region id(s): {sorted(dupes)}")
        if list(self.type_catalog) != sorted(set(r.region_type for r in self.regions)):
            raise FloorPlanError("type_catalog must be the sorted set of region types")
        minx, miny, maxx, maxy = self.bounds
        if maxx - minx < 1e-9 or maxy - miny < 1e-9:
            raise FloorPlanError("degenerate floor-plan bounding box")

    @classmethod
    def build(cls, scene_id: str, floor_id: str, regions: list[Region]) -> "FloorPlan":
        """Normalize polygons to CCW, check simplicity, and derive the catalog."""
        normed = []
        for r in regions:
            poly = r.polygon
            if not poly.is_simple():
                raise FloorPlanError(f"region {r.region_id}: self-intersecting polygon")
            if not poly.is_ccw:
                poly = poly.reversed_orientation()
            normed.append(Region(poly, r.region_type, r.region_id))
        catalog = tuple(sorted(set(r.region_type for r in normed)))
        return cls(scene_id, floor_id, tuple(normed), catalog)

    @cached_property
    def bounds(self) -> tuple[float, float, float, float]:
        bb = np.array([r.polygon.bounds for r in self.regions])
        return (float(bb[:, 0].min()), float(bb[:, 1].min()),
                float(bb[:, 2].max()), float(bb[:, 3].max()))

    @cached_property
    def regions_by_id(self) -> dict[int, Region]:
        return {r.region_id: r for r in self.regions}


@dataclass(frozen=True)
class WallSet:
    """Impassable boundary sub-segments. region_ids[i] is the region whose
    boundary contributed segments[i] (used for wall coloring)."""

    segments: tuple[tuple[Point2, Point2], ...]
    region_ids: tuple[int, ...]

    def __post_init__(self):
        if len(self.segments) != len(self.region_ids):
            raise FloorPlanError("segments and region_ids must be parallel")

    @cached_property
    def segment_array(self) -> np.ndarray:
        """(n, 4) array of [ax, ay, bx, by]; empty (0, 4) when there are no walls."""
        if not self.segments:
            return np.zeros((0, 4), dtype=float)
        return np.array([(a.x, a.y, b.x, b.y) for a, b in self.segments], dtype=float)


@dataclass(frozen=True)
class Doorway:
    """Passable coincident boundary overlap between two regions."""

    region_a: int
    region_b: int
    segment: tuple[Point2, Point2]

    @property
    def length(self) -> float:
        return self.segment[0].distance_to(self.segment[1])


def point_in_polygon(p: Point2, poly: Polygon) -> Containment:
    """Winding-number containment with explicit on-boundary detection.

    A point within BOUNDARY_TOL of any edge reports ON_BOUNDARY; otherwise
    INSIDE iff the winding number is non-zero.
    """
    e = poly.edge_array
    if _min_edge_distance(p.x, p.y, e) <= BOUNDARY_TOL:
        return Containment.ON_BOUNDARY
    if _winding_nonzero(p.x, p.y, e):
        return Containment.INSIDE
    return Containment.OUTSIDE


def _min_edge_distance(px: float, py: float, edges: np.ndarray) -> float:
    ax, ay, bx, by = edges[:, 0], edges[:, 1], edges[:, 2], edges[:, 3]
    wx, wy = bx - ax, by - ay
    ll = wx * wx + wy * wy
    t = np.clip(((px - ax) * wx + (py - ay) * wy) / np.where(ll < 1e-300, 1.0, ll), 0.0, 1.0)
    cx, cy = ax + t * wx, ay + t * wy
    return float(np.min(np.hypot(px - cx, py - cy)))


def _winding_nonzero(px: float, py: float, edges: np.ndarray) -> bool:
    x0, y0, x1, y1 = edges[:, 0], edges[:, 1], edges[:, 2], edges[:, 3]
    is_left = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)
    up = (y0 <= py) & (y1 > py) & (is_left > 0)
    down = (y0 > py) & (y1 <= py) & (is_left < 0)
    return int(np.count_nonzero(up)) - int(np.count_nonzero(down)) != 0


def points_in_polygon_mask(xs: np.ndarray, ys: np.ndarray, poly: Polygon) -> np.ndarray:
    """Vectorized strict-winding containment for many points (boundary points
    may land either way; callers needing the tie-break use point_in_polygon)."""
    e = poly.edge_array
    x0, y0, x1, y1 = (e[:, 0][None, :], e[:, 1][None, :],
                      e[:, 2][None, :], e[:, 3][None, :])
    px, py = xs[:, None], ys[:, None]
    is_left = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)
    up = (y0 <= py) & (y1 > py) & (is_left > 0)
    down = (y0 > py) & (y1 <= py) & (is_left < 0)
    wn = up.sum(axis=1).astype(int) - down.sum(axis=1).astype(int)
    return wn != 0


def locate_region(fp: FloorPlan, p: Point2) -> Region | None:
    """Containing region, treating on-boundary as inside; ties broken by
    smallest region_id so doorway points resolve deterministically."""
    best = None
    for r in fp.regions:
        if point_in_polygon(p, r.polygon) is not Containment.OUTSIDE:
            if best is None or r.region_id < best.region_id:
                best = r
    return best


def _boundary_partition(fp: FloorPlan) -> tuple[list[tuple[Point2, Point2, int]],
                                                list[Doorway]]:
    """Split every region boundary edge into wall and doorway sub-segments.

    An edge portion is a doorway iff it is coincident (within COINCIDENT_TOL
    laterally) with an edge of another region over at least DOORWAY_MIN_OVERLAP
    of length; everything else is wall.
    """
    walls: list[tuple[Point2, Point2, int]] = []
    doorways: list[Doorway] = []
    for r in fp.regions:
        for a, b in r.polygon.edges():
            length = a.distance_to(b)
            if length < 1e-12:
                continue
            ux, uy = (b.x - a.x) / length, (b.y - a.y) / length
            door_ivals: list[tuple[float, float, int]] = []
            for s in fp.regions:
                if s.region_id == r.region_id:
                    continue
                for c, d in s.polygon.edges():
                    if (_point_line_distance(c, a, ux, uy) > COINCIDENT_TOL or
                            _point_line_distance(d, a, ux, uy) > COINCIDENT_TOL):
                        continue
                    tc = (c.x - a.x) * ux + (c.y - a.y) * uy
                    td = (d.x - a.x) * ux + (d.y - a.y) * uy
                    lo, hi = max(0.0, min(tc, td)), min(length, max(tc, td))
                    if hi - lo >= DOORWAY_MIN_OVERLAP - 1e-9:
                        door_ivals.append((lo, hi, s.region_id))
            merged = _merge_intervals([(lo, hi) for lo, hi, _ in door_ivals])
            cursor = 0.0
            for lo, hi in merged:
                if lo - cursor > 1e-9:
                    walls.append((_along(a, ux, uy, cursor), _along(a, ux, uy, lo), r.region_id))
                cursor = max(cursor, hi)
            if length - cursor > 1e-9:
                walls.append((_along(a, ux, uy, cursor), _along(a, ux, uy, length), r.region_id))
            for lo, hi, other in door_ivals:
                if r.region_id < other:
                    doorways.append(Doorway(r.region_id, other,
                                            (_along(a, ux, uy, lo), _along(a, ux, uy, hi))))
    return walls, doorways


def _point_line_distance(p: Point2, origin: Point2, ux: float, uy: float) -> float:
    return abs((p.x - origin.x) * uy - (p.y - origin.y) * ux)


def _along(a: Point2, ux: float, uy: float, t: float) -> Point2:
    return Point2(a.x + ux * t, a.y + uy * t)


def _merge_intervals(ivals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    out: list[tuple[float, float]] = []
    for lo, hi in sorted(ivals):
        if out and lo <= out[-1][1] + 1e-9:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


@lru_cache(maxsize=64)
def extract_walls(fp: FloorPlan) -> WallSet:
    """All impassable boundary sub-segments of the plan."""
    walls, _ = _boundary_partition(fp)
    return WallSet(tuple((a, b) for a, b, _ in walls),
                   tuple(rid for _, _, rid in walls))


@lru_cache(maxsize=64)
def extract_doorways(fp: FloorPlan) -> tuple[Doorway, ...]:
    _, doorways = _boundary_partition(fp)
    return tuple(doorways)


def region_adjacency(fp: FloorPlan) -> frozenset[tuple[int, int]]:
    """Pairs (i, j) with i < j that share at least one doorway."""
    return frozenset((d.region_a, d.region_b) for d in extract_doorways(fp))


def pole_of_inaccessibility(poly: Polygon, precision: float = 0.05) -> Point2:
    """Interior point farthest from the boundary (quadtree refinement).

    Preferred over the centroid for label/goal placement because centroids of
    concave regions can fall outside the polygon.
    """
    minx, miny, maxx, maxy = poly.bounds
    size = min(maxx - minx, maxy - miny)
    half = size / 2.0
    if half <= 0:
        return poly.centroid

    def cell_dist(cx: float, cy: float) -> float:
        d = _min_edge_distance(cx, cy, poly.edge_array)
        inside = _winding_nonzero(cx, cy, poly.edge_array)
        return d if inside else -d

    # Max-heap on the cell's best possible distance.
    heap: list[tuple[float, float, float, float]] = []
    x = minx
    while x < maxx:
        y = miny
        while y < maxy:
            d = cell_dist(x + half, y + half)
            heapq.heappush(heap, (-(d + half * math.sqrt(2)), x + half, y + half, half))
            y += size
        x += size

    c = poly.centroid
    best_d = cell_dist(c.x, c.y)
    best = (c.x, c.y)
    bb_cx, bb_cy = (minx + maxx) / 2, (miny + maxy) / 2
    d = cell_dist(bb_cx, bb_cy)
    if d > best_d:
        best_d, best = d, (bb_cx, bb_cy)

    while heap:
        neg_pot, cx, cy, h = heapq.heappop(heap)
        if -neg_pot - best_d <= precision:
            break
        d = cell_dist(cx, cy)
        if d > best_d:
            best_d, best = d, (cx, cy)
        h2 = h / 2.0
        for dx in (-h2, h2):
            for dy in (-h2, h2):
                nd = cell_dist(cx + dx, cy + dy)
                heapq.heappush(heap, (-(nd + h2 * math.sqrt(2)), cx + dx, cy + dy, h2))
    return Point2(best[0], best[1])


# ---------------------------------------------------------------------------
# Document (de)serialization.
#
# Wire format: UTF-8 JSON object
#   { "scene_id": str, "floor_id": str,
#     "regions": [ { "id": int, "type": str, "polygon": [[x, y], ...] } ] }
# Coordinates in meters; polygons implicitly closed.
# ---------------------------------------------------------------------------

def parse_floorplan(text: str) -> FloorPlan:
    """Parse and validate a floor-plan document.

    Polygons are normalized to CCW and the type catalog is sorted, so
    serialize(parse(text)) is the canonical form of the document.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FloorPlanError(f"syntax error at line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise FloorPlanError("document root must be a JSON object")
    for key in ("scene_id", "floor_id", "regions"):
        if key not in doc:
            raise FloorPlanError(f"missing field '{key}'")
    if not isinstance(doc["scene_id"], str) or not isinstance(doc["floor_id"], str):
        raise FloorPlanError("scene_id and floor_id must be strings")
    raw_regions = doc["regions"]
    if not isinstance(raw_regions, list) or not raw_regions:
        raise FloorPlanError("'regions' must be a non-empty list")

    seen_ids: set[int] = set()
    regions: list[Region] = []
    for idx, raw in enumerate(raw_regions):
        if not isinstance(raw, dict):
            raise FloorPlanError(f"region #{idx} is not an object")
        for key in ("id", "type", "polygon"):
            if key not in raw:
                raise FloorPlanError(f"region #{idx}: missing field '{key}'")
        rid = raw["id"]
        if not isinstance(rid, int) or isinstance(rid, bool) or rid < 0:
            raise FloorPlanError(f"region #{idx}: id must be a non-negative integer")
        if rid in seen_ids:
            raise FloorPlanError(f"duplicate region id {rid}")
        seen_ids.add(rid)
        rtype = raw["type"]
        if not isinstance(rtype, str) or not rtype:
            raise FloorPlanError(f"region {rid}: type must be a non-empty string")
        pts = raw["polygon"]
        if not isinstance(pts, list) or len(pts) < 3:
            raise FloorPlanError(f"region {rid}: polygon needs >= 3 vertices")
        verts = []
        for p in pts:
            if (not isinstance(p, list) or len(p) != 2 or
                    not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)):
                raise FloorPlanError(f"region {rid}: polygon vertices must be [x, y] numbers")
            verts.append(Point2(float(p[0]), float(p[1])))
        if len(verts) > 1 and verts[0].distance_to(verts[-1]) < 1e-12:
            verts = verts[:-1]  # tolerate explicitly closed rings
        try:
            poly = Polygon(tuple(verts))
            if poly.area <= 1e-12:
                raise FloorPlanError(f"region {rid}: degenerate polygon (zero area)")
            if not poly.is_simple():
                raise FloorPlanError(f"region {rid}: self-intersecting polygon")
            regions.append(Region(poly, rtype, rid))
        except FloorPlanError:
            raise
    return FloorPlan.build(str(doc["scene_id"]), str(doc["floor_id"]), regions)


def serialize_floorplan(fp: FloorPlan) -> str:
    """Canonical serialization: regions sorted by id, CCW vertex order."""
    doc = {
        "scene_id": fp.scene_id,
        "floor_id": fp.floor_id,
        "regions": [
            {
                "id": r.region_id,
                "type": r.region_type,
                "polygon": [[v.x, v.y] for v in r.polygon.vertices],
            }
            for r in sorted(fp.regions, key=lambda r: r.region_id)
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def validate_floorplan(fp: FloorPlan) -> None:
    """Re-check every floor-plan invariant; raises FloorPlanError on failure."""
    ids = set()
    for r in fp.regions:
        if r.region_id in ids:
            raise FloorPlanError(f"duplicate region id {r.region_id}")
        ids.add(r.region_id)
        if not r.polygon.is_simple():
            raise FloorPlanError(f"region {r.region_id}: self-intersecting polygon")
        if not r.polygon.is_ccw:
            raise FloorPlanError(f"region {r.region_id}: polygon not counter-clockwise")
        if r.polygon.area <= 1e-12:
            raise FloorPlanError(f"region {r.region_id}: zero area")
    if list(fp.type_catalog) != sorted(set(r.region_type for r in fp.regions)):
        raise FloorPlanError("type_catalog out of sync with regions")
    minx, miny, maxx, maxy = fp.bounds
    if maxx - minx < 1e-9 or maxy - miny < 1e-9:
        raise FloorPlanError("degenerate bounding box")
