import json

import pytest

from floornav.geometry import FloorPlan, Point2, Polygon, Region, parse_floorplan


def square(x0, y0, x1, y1):
    return Polygon((Point2(x0, y0), Point2(x1, y0), Point2(x1, y1), Point2(x0, y1)))


def make_plan(regions, scene="scene", floor="0"):
    return FloorPlan.build(scene, floor, regions)


@pytest.fixture
def unit_square_plan():
    return make_plan([Region(square(0, 0, 1, 1), "kitchen", 0)])


@pytest.fixture
def two_room_plan():
    """Two unit squares sharing the full 1 m edge x=1 (a doorway)."""
    return make_plan([
        Region(square(0, 0, 1, 1), "kitchen", 0),
        Region(square(1, 0, 2, 1), "bedroom", 1),
    ])


@pytest.fixture
def open_arena_plan():
    """One large empty room; far walls so kinematics tests never collide."""
    return make_plan([Region(square(-500, -500, 500, 500), "hallway", 0)])


def plan_document(scene="scene", floor="0", regions=None):
    if regions is None:
        regions = [{"id": 0, "type": "kitchen",
                    "polygon": [[0, 0], [1, 0], [1, 1], [0, 1]]}]
    return json.dumps({"scene_id": scene, "floor_id": floor, "regions": regions})


@pytest.fixture(scope="session")
def corridor_plan():
    """Corridor (id 0) with two proper-doored rooms above it, generated once."""
    from floornav.dataset.floorgen import gen_synthetic_floorplan

    return gen_synthetic_floorplan(room_count=2, seed=7)


@pytest.fixture(scope="session")
def corridor_episodes(corridor_plan):
    from floornav.dataset.episodes import gen_episodes

    return gen_episodes(corridor_plan, count=4, seed=19)
