"""Floor-plan-guided navigation: simulator, dataset toolkit, evaluation harness."""

__version__ = "0.1.0"

from .geometry import (
    Containment,
    FloorPlan,
    FloorPlanError,
    Point2,
    Polygon,
    Region,
    WallSet,
    extract_walls,
    locate_region,
    parse_floorplan,
    point_in_polygon,
    region_adjacency,
    serialize_floorplan,
)
from .simulator import (
    Action,
    ActionKind,
    AgentPose,
    EpisodeResult,
    EpisodeState,
    NoiseConfig,
    check_success,
    jitter_floorplan,
    project_to_plan,
    reset,
    step,
)

__all__ = [
    "Action",
    "ActionKind",
    "AgentPose",
    "Containment",
    "EpisodeResult",
    "EpisodeState",
    "FloorPlan",
    "FloorPlanError",
    "NoiseConfig",
    "Point2",
    "Polygon",
    "Region",
    "WallSet",
    "check_success",
    "extract_walls",
    "jitter_floorplan",
    "locate_region",
    "parse_floorplan",
    "point_in_polygon",
    "project_to_plan",
    "region_adjacency",
    "reset",
    "serialize_floorplan",
    "step",
]
