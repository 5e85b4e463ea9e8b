"""Stand-in navigation policies: oracle closed-loop, dead reckoning, random,
and an external subprocess policy speaking line-delimited JSON."""

from __future__ import annotations

import json
import logging
import math
import subprocess
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..geometry import FloorPlan, Point2, serialize_floorplan
from ..pathfind import _NEIGHBORS, build_nav_grid, distance_field
from ..simulator import (
    Action,
    AgentPose,
    EpisodeState,
    PRIMITIVE_TURN_RAD,
    SUCCESS_RADIUS_M,
    wrap_pi,
)

log = logging.getLogger(__name__)

POLICY_KINDS = ("oracle_closed_loop", "dead_reckoning", "random", "external")


class PolicyError(RuntimeError):
    """Malformed action from a policy, or an unusable policy spec."""


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    max_steps: int = 500
    seed: int = 0
    replan_period: int = 1       # planner policies replan every step
    lookahead_m: float = 0.35    # how far down the descent chain to aim
    external_cmd: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise PolicyError(f"unknown policy kind '{self.kind}'")
        if self.max_steps <= 0:
            raise PolicyError("max_steps must be > 0")


@lru_cache(maxsize=256)
def _masked_distance_field(fp: FloorPlan, goal: Point2,
                           rect: tuple[float, float, float, float] | None,
                           clearance: float) -> np.ndarray:
    """Distance field where cells inside `rect` count as unknown-free-space."""
    if rect is None:
        return distance_field(fp, goal, clearance=clearance)
    import heapq

    grid = build_nav_grid(fp, clearance=clearance)
    x0, y0, x1, y1 = rect
    xs = grid.minx + np.arange(grid.nx) * grid.cell
    ys = grid.miny + np.arange(grid.ny) * grid.cell
    in_rect = ((xs[None, :] >= x0) & (xs[None, :] <= x1) &
               (ys[:, None] >= y0) & (ys[:, None] <= y1))
    free = grid.free | in_rect
    goal_cell = grid.nearest_free_cell(goal.x, goal.y)
    field = np.full((grid.ny, grid.nx), np.inf)
    if goal_cell is None:
        return field
    gi, gj = goal_cell
    field[gj, gi] = 0.0
    heap = [(0.0, gj, gi)]
    while heap:
        d, j, i = heapq.heappop(heap)
        if d > field[j, i]:
            continue
        for dj, di, w in _NEIGHBORS:
            jj, ii = j + dj, i + di
            if 0 <= jj < grid.ny and 0 <= ii < grid.nx and free[jj, ii]:
                nd = d + w * grid.cell
                if nd < field[jj, ii]:
                    field[jj, ii] = nd
                    heapq.heappush(heap, (nd, jj, ii))
    return field


PLANNER_GRID_CLEARANCE_M = 0.12  # wider than the collision clearance: keeps
#                                  waypoints off door stubs and wall corners
_AIM_CLEARANCE_M = 0.09          # aim-line tube width; forward steps deviate
#                                  at most 0.25*sin(7.5 deg) ~ 0.033 m from it
_MIN_AIM_DIST_M = 0.30           # aim beyond one forward step so overshoot
#                                  cannot pass the waypoint


class PlannerPolicy:
    """Shortest-path follower, replanned from the current pose each step.

    Replanning reduces to greedy descent of one distance field per goal. The
    emitted action is always primitive: turn toward the next grid waypoint
    when the heading error exceeds half a turn primitive (ties at 180 degrees
    break Right), otherwise move forward. Stops within half the success
    radius, or immediately (with a diagnostic) when the goal is unreachable.

    Waypoints are taken from the descent chain with a line-of-sight margin so
    quantized-heading motion stays clear of walls; if a forward step produced
    no displacement anyway (pose pinned against an unmapped or grazed wall),
    the policy sweeps clockwise until a probe step is unobstructed.
    """

    use_believed_pose = False

    def __init__(self, plan_fp: FloorPlan, goal: Point2,
                 lookahead_m: float = 0.6,
                 mask_rect: tuple[float, float, float, float] | None = None):
        from ..geometry import extract_walls

        self.plan_fp = plan_fp
        self.goal = goal
        self.lookahead_m = max(lookahead_m, _MIN_AIM_DIST_M)
        self.grid = build_nav_grid(plan_fp, clearance=PLANNER_GRID_CLEARANCE_M)
        self.field = _masked_distance_field(plan_fp, goal, mask_rect,
                                            clearance=PLANNER_GRID_CLEARANCE_M)
        self.walls = extract_walls(plan_fp).segment_array

    def pose_of(self, state: EpisodeState) -> AgentPose:
        return state.believed_pose if self.use_believed_pose else state.true_pose

    def trajectory_of(self, state: EpisodeState) -> list[AgentPose]:
        return state.believed_trajectory if self.use_believed_pose else state.trajectory

    def __call__(self, state: EpisodeState) -> Action:
        pose = self.pose_of(state)
        p = pose.position
        if p.distance_to(self.goal) < 0.5 * SUCCESS_RADIUS_M:
            return Action.stop()
        cell = self.grid.nearest_free_cell(p.x, p.y)
        if cell is None or not np.isfinite(self.field[cell[1], cell[0]]):
            log.warning("goal unreachable from (%.2f, %.2f); stopping", p.x, p.y)
            return Action.stop()
        if self._pinned(state):
            return self._escape(pose)
        wx, wy = self._waypoint(cell, p)
        bearing = math.atan2(wx - p.x, wy - p.y)
        err = wrap_pi(bearing - pose.theta)
        if abs(err) > PRIMITIVE_TURN_RAD / 2 + 1e-12:
            return Action.turn_right() if err > 0 else Action.turn_left()
        return Action.move_forward()

    def _pinned(self, state: EpisodeState) -> bool:
        """Did the last commanded forward move us nowhere (by our own pose)?"""
        from ..simulator import ActionKind

        if not state.actions or state.actions[-1].kind is not ActionKind.MOVE_FORWARD:
            return False
        traj = self.trajectory_of(state)
        return traj[-1].position.distance_to(traj[-2].position) < 1e-6

    def _escape(self, pose: AgentPose) -> Action:
        """Clockwise sweep: forward if the current heading is unobstructed for
        a full step, else keep turning right. Cannot oscillate."""
        from ..simulator import max_free_travel

        ux, uy = math.sin(pose.theta), math.cos(pose.theta)
        travel = max_free_travel(pose.x, pose.y, ux, uy, 0.25, self.walls,
                                 clearance=0.06)
        if travel >= 0.25 - 1e-9:
            return Action.move_forward()
        return Action.turn_right()

    def _chain(self, cell: tuple[int, int]) -> list[tuple[int, int]]:
        """Descent cells from `cell` (exclusive) to the lookahead horizon."""
        i, j = cell
        field, grid = self.field, self.grid
        out = []
        x0, y0 = grid.cell_center(i, j)
        for _ in range(64):
            if field[j, i] == 0.0:
                break
            best, best_v = None, field[j, i]
            for dj, di, w in _NEIGHBORS:
                jj, ii = j + dj, i + di
                if 0 <= jj < grid.ny and 0 <= ii < grid.nx and field[jj, ii] < best_v:
                    best, best_v = (ii, jj), field[jj, ii]
            if best is None:
                break
            i, j = best
            out.append((i, j))
            x, y = grid.cell_center(i, j)
            if math.hypot(x - x0, y - y0) >= self.lookahead_m:
                break
        return out

    def _waypoint(self, cell: tuple[int, int], p: Point2) -> tuple[float, float]:
        """Farthest chain cell with a clear aim-line beyond one step's reach;
        falls back to the clearest nearby chain cell."""
        from ..pathfind import segment_clearance

        chain = self._chain(cell)
        if not chain:
            return (self.goal.x, self.goal.y)
        centers = [self.grid.cell_center(i, j) for i, j in chain]
        best_fallback = centers[min(2, len(centers) - 1)]
        for x, y in reversed(centers):
            if math.hypot(x - p.x, y - p.y) < _MIN_AIM_DIST_M:
                break
            if segment_clearance(p, Point2(x, y), self.walls) >= _AIM_CLEARANCE_M:
                return (x, y)
        # no far cell has a clear line: aim at the clearest near cell
        best, best_c = best_fallback, -1.0
        for x, y in centers[:4]:
            c = segment_clearance(p, Point2(x, y), self.walls)
            if c > best_c:
                best, best_c = (x, y), c
        return best


class OracleClosedLoopPolicy(PlannerPolicy):
    """Plans from the true pose on the provided plan."""

    use_believed_pose = False


class DeadReckoningPolicy(PlannerPolicy):
    """Identical planner, but it only sees the dead-reckoned believed pose."""

    use_believed_pose = True


class RandomPolicy:
    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)

    def __call__(self, state: EpisodeState) -> Action:
        k = int(self.rng.integers(0, 4))
        return (Action.move_forward(), Action.turn_left(),
                Action.turn_right(), Action.stop())[k]


class ExternalPolicy:
    """Bridge to a subprocess exchanging one JSON object per line.

    On construction the child receives a reset message with the plan document,
    start pose, goal, and instruction; each step sends the observable state and
    expects {"action": <kind>, "magnitude": <num|null>} back.
    """

    def __init__(self, cmd: tuple[str, ...], plan_fp: FloorPlan, goal: Point2,
                 start_pose: AgentPose, instruction: str = ""):
        if not cmd:
            raise PolicyError("external policy needs a command")
        self.proc = subprocess.Popen(cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                     text=True, bufsize=1)
        self._send({
            "type": "reset",
            "floorplan": json.loads(serialize_floorplan(plan_fp)),
            "start_pose": start_pose.as_list(),
            "goal": [goal.x, goal.y],
            "instruction": instruction,
        })

    def _send(self, obj: dict):
        assert self.proc.stdin is not None
        self.proc.stdin.write(json.dumps(obj) + "\n")
        self.proc.stdin.flush()

    def __call__(self, state: EpisodeState) -> Action:
        self._send({
            "type": "step",
            "t": state.step_count,
            "believed_pose": state.believed_pose.as_list(),
            "goal": [state.goal.x, state.goal.y],
        })
        assert self.proc.stdout is not None
        line = self.proc.stdout.readline()
        if not line:
            raise PolicyError("external policy closed its stdout")
        try:
            return parse_action_json(json.loads(line))
        except (json.JSONDecodeError, KeyError, ValueError) as e:
            raise PolicyError(f"policy emitted malformed action: {line.strip()!r}") from e

    def close(self):
        if self.proc.stdin:
            self.proc.stdin.close()
        self.proc.terminate()


def parse_action_json(doc: dict) -> Action:
    from ..simulator import ActionKind

    kind = {a.value: a for a in ActionKind}[doc["action"]]
    mag = doc.get("magnitude")
    if kind is ActionKind.STOP:
        return Action.stop()
    if mag is None:
        from ..simulator import PRIMITIVE_FORWARD_M

        mag = PRIMITIVE_FORWARD_M if kind is ActionKind.MOVE_FORWARD else PRIMITIVE_TURN_RAD
    return Action(kind, float(mag))


def make_policy(spec: PolicySpec, plan_fp: FloorPlan, goal: Point2,
                start_pose: AgentPose, instruction: str = "",
                episode_seed: int = 0,
                mask_rect: tuple[float, float, float, float] | None = None):
    if spec.kind == "oracle_closed_loop":
        return OracleClosedLoopPolicy(plan_fp, goal, spec.lookahead_m, mask_rect)
    if spec.kind == "dead_reckoning":
        return DeadReckoningPolicy(plan_fp, goal, spec.lookahead_m, mask_rect)
    if spec.kind == "random":
        return RandomPolicy(episode_seed)
    return ExternalPolicy(spec.external_cmd, plan_fp, goal, start_pose, instruction)
