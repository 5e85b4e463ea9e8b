"""Episode construction: waypoint annotation, trajectory filtering, the
path-to-action compiler, procedural episode generation, and episode files.

Episode file schema (JSON):
  { "episode_id": str, "floorplan": path, "start_pose": [x, y, theta],
    "goal": [x, y], "instruction": {...}, "gt_path": [[x, y], ...] }
gt_actions are not persisted; they are recompiled deterministically from
gt_path on load.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..geometry import FloorPlan, Point2, extract_walls, locate_region, parse_floorplan, pole_of_inaccessibility
from ..pathfind import astar_path, build_nav_grid, simplify_path
from ..simulator import (
    Action,
    AgentPose,
    EpisodeState,
    NoiseConfig,
    PRIMITIVE_TURN_RAD,
    check_success,
    reset,
    step,
    wrap_pi,
)
from .instructions import Instruction, gen_instruction
from .vocab import stop_phrases_for

WAYPOINT_TOL_M = 0.125  # compiler advances to the next waypoint inside this radius


class EpisodeGenError(RuntimeError):
    pass


@dataclass(frozen=True)
class RegionTrace:
    """Per-waypoint region labels plus the deduplicated traversal order."""

    per_waypoint: tuple[tuple[int, int | None, str | None], ...]
    compressed: tuple[tuple[int, str], ...]


@dataclass
class Episode:
    episode_id: str
    floorplan_ref: str
    start_pose: AgentPose
    goal: Point2
    instruction: Instruction
    gt_path: tuple[Point2, ...]
    gt_actions: tuple[Action, ...]
    noise: NoiseConfig | None = None  # optional per-episode noise override
    floorplan: FloorPlan | None = field(default=None, repr=False, compare=False)
    _poses_cache: list | None = field(default=None, repr=False, compare=False)


def annotate_trajectory(fp: FloorPlan, waypoints: list[Point2]) -> RegionTrace:
    """Label each waypoint with its containing region (None when off-plan)
    and compress consecutive repeats."""
    per = []
    compressed: list[tuple[int, str]] = []
    for i, p in enumerate(waypoints):
        r = locate_region(fp, p)
        if r is None:
            per.append((i, None, None))
        else:
            per.append((i, r.region_id, r.region_type))
            entry = (r.region_id, r.region_type)
            if not compressed or compressed[-1] != entry:
                compressed.append(entry)
    return RegionTrace(tuple(per), tuple(compressed))


def filter_episodes(episodes: list[Episode], fp: FloorPlan):
    """Drop off-plan episodes (a waypoint outside every region) and redundant
    ones (the compressed trace revisits a region id)."""
    kept: list[Episode] = []
    report = {"kept": 0, "off_plan": 0, "revisit": 0}
    for ep in episodes:
        trace = annotate_trajectory(fp, list(ep.gt_path))
        if any(rid is None for _, rid, _ in trace.per_waypoint):
            report["off_plan"] += 1
            continue
        ids = [rid for rid, _ in trace.compressed]
        if len(ids) != len(set(ids)):
            report["revisit"] += 1
            continue
        kept.append(ep)
        report["kept"] += 1
    return kept, report


def compile_path_to_actions(fp: FloorPlan, path: list[Point2],
                            start_theta: float = 0.0) -> list[Action]:
    """Greedy turn-then-move compiler.

    At each waypoint: rotate in 15-degree primitives until the heading error
    is at most half a turn primitive, then move in 0.25 m primitives until the
    waypoint is within 0.125 m, re-aiming whenever the bearing drifts. The
    compiled sequence is produced by actually stepping a noise-free simulator,
    so replaying it reproduces the exact same poses, collisions included.
    """
    if len(path) < 1:
        raise ValueError("path must contain at least the start point")
    state = reset(fp, AgentPose(path[0].x, path[0].y, start_theta), path[-1], NoiseConfig())
    actions: list[Action] = []

    def emit(a: Action):
        actions.append(a)
        step(state, a)

    for k, wp in enumerate(path[1:], start=1):
        budget = int(path[k - 1].distance_to(wp) / 0.25 * 8) + 80
        while state.true_pose.position.distance_to(wp) > WAYPOINT_TOL_M:
            if budget <= 0:
                raise EpisodeGenError(f"unreachable waypoint {k} at ({wp.x:.2f}, {wp.y:.2f})")
            budget -= 1
            p = state.true_pose
            bearing = math.atan2(wp.x - p.x, wp.y - p.y)
            err = wrap_pi(bearing - p.theta)
            if abs(err) > PRIMITIVE_TURN_RAD / 2 + 1e-12:
                emit(Action.turn_right() if err > 0 else Action.turn_left())
            else:
                before = p.position.distance_to(wp)
                emit(Action.move_forward())
                if state.true_pose.position.distance_to(wp) >= before - 1e-9:
                    # blocked or overshooting without progress: force re-aim
                    if state.true_pose.position.distance_to(wp) > WAYPOINT_TOL_M:
                        p2 = state.true_pose
                        bearing2 = math.atan2(wp.x - p2.x, wp.y - p2.y)
                        err2 = wrap_pi(bearing2 - p2.theta)
                        if abs(err2) <= PRIMITIVE_TURN_RAD / 2:
                            raise EpisodeGenError(
                                f"unreachable waypoint {k} at ({wp.x:.2f}, {wp.y:.2f})")
    emit(Action.stop())
    return actions


def replay_actions(fp: FloorPlan, start_pose: AgentPose, actions,
                   noise: NoiseConfig | None = None, goal: Point2 | None = None) -> EpisodeState:
    """Step a whole action sequence; zero-noise by default."""
    state = reset(fp, start_pose, goal if goal is not None else start_pose.position,
                  noise if noise is not None else NoiseConfig())
    for a in actions:
        step(state, a)
    return state


def episode_poses(ep: Episode) -> list[AgentPose]:
    """True poses of the noise-free replay, one per primitive step (index 0 is
    the start pose). Cached on the episode; the replay is deterministic."""
    if ep._poses_cache is None:
        fp = require_floorplan(ep)
        st = replay_actions(fp, ep.start_pose, ep.gt_actions, goal=ep.goal)
        ep._poses_cache = st.trajectory
    return ep._poses_cache


def require_floorplan(ep: Episode) -> FloorPlan:
    if ep.floorplan is None:
        raise ValueError(f"episode {ep.episode_id} has no floor plan attached")
    return ep.floorplan


def gen_episodes(fp: FloorPlan, count: int, seed: int, floorplan_ref: str = "floorplan.json",
                 min_regions: int = 3, max_attempts: int = 60) -> list[Episode]:
    """Procedural episodes: distinct start/goal rooms, a free-space waypoint
    path between them, compiled ground-truth actions, and a templated
    instruction. Every returned episode passes the redundancy filters and
    replays to success under zero noise."""
    grid = build_nav_grid(fp)
    walls = extract_walls(fp).segment_array
    rooms = [r for r in fp.regions if len(fp.regions) < 3 or r.region_id != 0]
    if len(rooms) < 2:
        rooms = list(fp.regions)
    ss = np.random.SeedSequence(seed)
    episodes: list[Episode] = []
    for k, child in enumerate(ss.spawn(count)):
        rng = np.random.default_rng(child)
        ep = None
        for _ in range(max_attempts):
            ep = _try_gen_episode(fp, grid, walls, rooms, rng, k, seed,
                                  floorplan_ref, min_regions)
            if ep is not None:
                break
        if ep is None:
            raise EpisodeGenError(f"could not generate episode {k} after {max_attempts} attempts")
        episodes.append(ep)
    return episodes


def _try_gen_episode(fp, grid, walls, rooms, rng, index, seed, floorplan_ref, min_regions):
    if len(rooms) < 2:
        return None
    i, j = rng.choice(len(rooms), size=2, replace=False)
    start_region, goal_region = rooms[int(i)], rooms[int(j)]

    start_pt = _sample_interior_point(start_region, walls, rng)
    theta = float(rng.uniform(0, 2 * math.pi))
    goal_pt = pole_of_inaccessibility(goal_region.polygon)

    ca = grid.nearest_free_cell(start_pt.x, start_pt.y)
    cb = grid.nearest_free_cell(goal_pt.x, goal_pt.y)
    if ca is None or cb is None:
        return None
    cells = astar_path(grid, ca, cb)
    if cells is None:
        return None
    pts = [start_pt] + [Point2(*grid.cell_center(ii, jj)) for ii, jj in cells] + [goal_pt]
    waypoints = simplify_path(pts, walls, clearance=0.15, max_hop=1.0)

    trace = annotate_trajectory(fp, waypoints)
    if any(rid is None for _, rid, _ in trace.per_waypoint):
        return None
    ids = [rid for rid, _ in trace.compressed]
    if len(ids) != len(set(ids)) or len(ids) < min_regions:
        return None
    if ids[0] != start_region.region_id or ids[-1] != goal_region.region_id:
        return None

    try:
        actions = compile_path_to_actions(fp, waypoints, start_theta=theta)
    except EpisodeGenError:
        return None

    start_pose = AgentPose(start_pt.x, start_pt.y, theta)
    st = replay_actions(fp, start_pose, actions, goal=goal_pt)
    if not check_success(st):
        return None

    phrases = stop_phrases_for(goal_region.region_type)
    stop = str(phrases[int(rng.integers(0, len(phrases)))])
    template_id = int(rng.integers(0, 10))
    instruction = gen_instruction(trace, stop, template_id,
                                  goal_region.region_id, goal_region.region_type)
    return Episode(
        episode_id=f"{fp.scene_id}-s{seed}-e{index:04d}",
        floorplan_ref=floorplan_ref,
        start_pose=start_pose,
        goal=goal_pt,
        instruction=instruction,
        gt_path=tuple(waypoints),
        gt_actions=tuple(actions),
        floorplan=fp,
    )


def _sample_interior_point(region, walls, rng, clearance: float = 0.3,
                           tries: int = 100) -> Point2:
    from ..geometry import Containment, point_in_polygon

    minx, miny, maxx, maxy = region.polygon.bounds
    for _ in range(tries):
        p = Point2(float(rng.uniform(minx, maxx)), float(rng.uniform(miny, maxy)))
        if point_in_polygon(p, region.polygon) is not Containment.INSIDE:
            continue
        if walls.shape[0]:
            ax, ay, bx, by = walls[:, 0], walls[:, 1], walls[:, 2], walls[:, 3]
            wx, wy = bx - ax, by - ay
            ll = wx * wx + wy * wy
            t = np.clip(((p.x - ax) * wx + (p.y - ay) * wy) /
                        np.where(ll == 0, 1, ll), 0, 1)
            d = float(np.min(np.hypot(p.x - (ax + t * wx), p.y - (ay + t * wy))))
            if d < clearance:
                continue
        return p
    return pole_of_inaccessibility(region.polygon)


# ---------------------------------------------------------------------------
# Episode files.
# ---------------------------------------------------------------------------

def episode_to_dict(ep: Episode) -> dict:
    doc = {
        "episode_id": ep.episode_id,
        "floorplan": ep.floorplan_ref,
        "start_pose": ep.start_pose.as_list(),
        "goal": [ep.goal.x, ep.goal.y],
        "instruction": ep.instruction.to_dict(),
        "gt_path": [[p.x, p.y] for p in ep.gt_path],
    }
    if ep.noise is not None:
        doc["noise"] = ep.noise.to_dict()
    return doc


def serialize_episode(ep: Episode) -> str:
    return json.dumps(episode_to_dict(ep), indent=2) + "\n"


def save_episode(ep: Episode, path) -> None:
    Path(path).write_text(serialize_episode(ep), encoding="utf-8")


def episode_from_dict(doc: dict, floorplan: FloorPlan | None = None,
                      base_dir: Path | None = None) -> Episode:
    for key in ("episode_id", "floorplan", "start_pose", "goal", "instruction", "gt_path"):
        if key not in doc:
            raise ValueError(f"episode document missing field '{key}'")
    fp = floorplan
    if fp is None and base_dir is not None:
        fp_path = (Path(base_dir) / doc["floorplan"]).resolve()
        fp = parse_floorplan(fp_path.read_text(encoding="utf-8"))
    start = AgentPose(*[float(v) for v in doc["start_pose"]])
    goal = Point2(float(doc["goal"][0]), float(doc["goal"][1]))
    gt_path = tuple(Point2(float(x), float(y)) for x, y in doc["gt_path"])
    actions: tuple[Action, ...] = ()
    if fp is not None:
        actions = tuple(compile_path_to_actions(fp, list(gt_path), start_theta=start.theta))
    return Episode(
        episode_id=str(doc["episode_id"]),
        floorplan_ref=str(doc["floorplan"]),
        start_pose=start,
        goal=goal,
        instruction=Instruction.from_dict(doc["instruction"]),
        gt_path=gt_path,
        gt_actions=actions,
        noise=NoiseConfig.from_dict(doc["noise"]) if "noise" in doc else None,
        floorplan=fp,
    )


def load_episode(path, floorplan: FloorPlan | None = None) -> Episode:
    p = Path(path)
    doc = json.loads(p.read_text(encoding="utf-8"))
    return episode_from_dict(doc, floorplan=floorplan, base_dir=p.parent)
