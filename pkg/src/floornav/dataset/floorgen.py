"""Procedural single-floor plans: axis-aligned rooms on a corridor spine.

Rooms alternate above/below the corridor, separated by 0.2 m of dead space
(wall thickness), and each connects to the corridor through a door notch whose
sill edge lies exactly on the corridor boundary, so doorway detection sees a
coincident overlap of the door's width.
"""

from __future__ import annotations

import numpy as np

from ..geometry import FloorPlan, Point2, Polygon, Region
from .vocab import CORRIDOR_TYPE, REGION_TYPES

WALL_GAP = 0.1       # offset of a room's solid wall from the corridor edge (m)
ROOM_SPACING = 0.2   # dead space between neighboring rooms (m)
DOOR_INSET = 0.3     # minimum distance from a door to a room corner (m)


def gen_synthetic_floorplan(room_count: int, seed: int,
                            room_size: tuple[float, float] = (3.0, 6.0),
                            corridor_width: float = 2.0) -> FloorPlan:
    """Corridor (region id 0) plus `room_count` doored rooms (ids 1..N)."""
    if room_count < 1:
        raise ValueError("room_count must be >= 1")
    lo, hi = room_size
    if lo > hi or lo < 2 * DOOR_INSET + 0.9:
        raise ValueError(f"infeasible room size bounds {room_size}: "
                         f"rooms cannot fit a door with {DOOR_INSET} m corner insets")
    if corridor_width < 1.0:
        raise ValueError(f"infeasible corridor width {corridor_width}")

    rng = np.random.default_rng(seed)
    room_types = [t for t in REGION_TYPES if t != CORRIDOR_TYPE]

    regions: list[Region] = []
    cursors = {True: 0.0, False: 0.0}  # above / below packing cursors
    ends = {True: 0.0, False: 0.0}
    specs = []
    for k in range(room_count):
        above = (k % 2 == 0)
        width = float(rng.uniform(lo, hi))
        depth = float(rng.uniform(lo, hi))
        door_w = float(rng.uniform(0.9, min(1.3, width - 2 * DOOR_INSET)))
        x0 = cursors[above]
        door_c = float(rng.uniform(x0 + DOOR_INSET + door_w / 2,
                                   x0 + width - DOOR_INSET - door_w / 2))
        rtype = str(rng.choice(room_types))
        specs.append((above, x0, width, depth, door_c, door_w, rtype))
        cursors[above] = x0 + width + ROOM_SPACING
        ends[above] = x0 + width

    length = max(ends[True], ends[False], corridor_width + 1.0)
    corridor = Polygon((Point2(0, 0), Point2(length, 0),
                        Point2(length, corridor_width), Point2(0, corridor_width)))
    regions.append(Region(corridor, CORRIDOR_TYPE, 0))

    for rid, (above, x0, width, depth, door_c, door_w, rtype) in enumerate(specs, start=1):
        x1 = x0 + width
        d0, d1 = door_c - door_w / 2, door_c + door_w / 2
        if above:
            yb = corridor_width           # corridor edge (door sill)
            yw = yb + WALL_GAP            # solid wall line
            yt = yw + depth
            verts = (Point2(x0, yw), Point2(d0, yw), Point2(d0, yb), Point2(d1, yb),
                     Point2(d1, yw), Point2(x1, yw), Point2(x1, yt), Point2(x0, yt))
        else:
            yb = 0.0
            yw = yb - WALL_GAP
            yt = yw - depth
            verts = (Point2(x0, yw), Point2(d0, yw), Point2(d0, yb), Point2(d1, yb),
                     Point2(d1, yw), Point2(x1, yw), Point2(x1, yt), Point2(x0, yt))
        regions.append(Region(Polygon(verts), rtype, rid))

    return FloorPlan.build(f"synthetic-{seed}", "0", regions)
