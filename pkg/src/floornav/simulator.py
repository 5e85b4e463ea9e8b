"""Episode state machine: discrete actions over continuous 2D state with
actuation noise, map noise, and wall collision.

Heading convention: theta = 0 faces +y and increases clockwise, so a forward
step of length d moves (x + d*sin(theta), y + d*cos(theta)). TurnRight adds to
theta, TurnLeft subtracts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import (
    FloorPlan,
    Point2,
    Polygon,
    Region,
    WallSet,
    extract_walls,
    locate_region,
)

PRIMITIVE_FORWARD_M = 0.25
PRIMITIVE_TURN_RAD = math.radians(15.0)
SUCCESS_RADIUS_M = 3.0
WALL_CLEARANCE_M = 0.05

_TWO_PI = 2.0 * math.pi

# Draw slots for the counter-based noise stream. Keyed by
# (seed, step_index, extra, slot) so adding a draw never perturbs others.
_SLOT_ALPHA = 0
_SLOT_ROT = 1
_SLOT_MOVE = 2
_SLOT_DRIFT = 3
_SLOT_JITTER = 4


class SimulationError(RuntimeError):
    """Stepping a terminated episode, querying success too early, etc."""


class ActionKind(Enum):
    MOVE_FORWARD = "MoveForward"
    TURN_LEFT = "TurnLeft"
    TURN_RIGHT = "TurnRight"
    STOP = "Stop"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    magnitude: float | None = None

    def __post_init__(self):
        if self.kind is ActionKind.STOP:
            if self.magnitude is not None:
                raise ValueError("Stop takes no magnitude")
        else:
            if self.magnitude is None or self.magnitude <= 0:
                raise ValueError(f"{self.kind.value} needs a positive magnitude")

    @staticmethod
    def move_forward(meters: float = PRIMITIVE_FORWARD_M) -> "Action":
        return Action(ActionKind.MOVE_FORWARD, meters)

    @staticmethod
    def turn_left(radians: float = PRIMITIVE_TURN_RAD) -> "Action":
        return Action(ActionKind.TURN_LEFT, radians)

    @staticmethod
    def turn_right(radians: float = PRIMITIVE_TURN_RAD) -> "Action":
        return Action(ActionKind.TURN_RIGHT, radians)

    @staticmethod
    def stop() -> "Action":
        return Action(ActionKind.STOP, None)

    @property
    def is_primitive(self) -> bool:
        if self.kind is ActionKind.STOP:
            return True
        unit = PRIMITIVE_FORWARD_M if self.kind is ActionKind.MOVE_FORWARD else PRIMITIVE_TURN_RAD
        return abs(self.magnitude - unit) <= 1e-9


def normalize_angle(theta: float) -> float:
    """Wrap to [0, 2*pi)."""
    t = math.fmod(theta, _TWO_PI)
    return t + _TWO_PI if t < 0 else t


def wrap_pi(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    t = math.fmod(theta + math.pi, _TWO_PI)
    if t <= 0:
        t += _TWO_PI
    return t - math.pi


@dataclass(frozen=True)
class AgentPose:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError(f"non-finite pose ({self.x}, {self.y}, {self.theta})")
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))

    @property
    def position(self) -> Point2:
        return Point2(self.x, self.y)

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.theta]


@dataclass(frozen=True)
class NoiseConfig:
    """Five sigma parameters plus a seed; fully determines all stochasticity.

    sigma_move is a unitless relative std of forward distance, sigma_rot and
    sigma_drift are radians, sigma_scale is the std of the per-episode plan
    scale multiplier about 1, sigma_jitter is meters of vertex displacement.
    sigma_drift defaults to 0.1 * sigma_move (numeric coupling, in radians).
    """

    sigma_move: float = 0.0
    sigma_rot: float = 0.0
    sigma_drift: float | None = None
    sigma_scale: float = 0.0
    sigma_jitter: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_drift is None:
            object.__setattr__(self, "sigma_drift", 0.1 * self.sigma_move)
        for name in ("sigma_move", "sigma_rot", "sigma_drift", "sigma_scale", "sigma_jitter"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def to_dict(self) -> dict:
        return {
            "sigma_move": self.sigma_move,
            "sigma_rot": self.sigma_rot,
            "sigma_drift": self.sigma_drift,
            "sigma_scale": self.sigma_scale,
            "sigma_jitter": self.sigma_jitter,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseConfig":
        return cls(
            sigma_move=float(d.get("sigma_move", 0.0)),
            sigma_rot=float(d.get("sigma_rot", 0.0)),
            sigma_drift=None if d.get("sigma_drift") is None else float(d["sigma_drift"]),
            sigma_scale=float(d.get("sigma_scale", 0.0)),
            sigma_jitter=float(d.get("sigma_jitter", 0.0)),
            seed=int(d.get("seed", 0)),
        )


def _normal_draws(seed: int, c0: int, c1: int, c2: int, slot: int, n: int = 1) -> np.ndarray:
    """Standard normals from a counter-based stream: independent per
    (seed, c0, c1, c2, slot), so draws never shift under refactoring."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, 0], dtype=np.uint64)
    counter = np.array([c0 & 0xFFFFFFFFFFFFFFFF, c1 & 0xFFFFFFFFFFFFFFFF,
                        c2 & 0xFFFFFFFFFFFFFFFF, slot], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key, counter=counter))
    return gen.standard_normal(n)


@dataclass
class EpisodeState:
    """Single-owner mutable episode state; never step one concurrently."""

    floorplan: FloorPlan
    true_pose: AgentPose
    believed_pose: AgentPose
    goal: Point2
    noise: NoiseConfig
    scale_alpha: float
    trajectory: list[AgentPose]
    believed_trajectory: list[AgentPose]
    actions: list[Action]
    step_count: int = 0
    terminated: bool = False
    walls: WallSet = field(repr=False, default=None)

    @property
    def wall_segments(self) -> np.ndarray:
        return self.walls.segment_array


def reset(fp: FloorPlan, start: AgentPose, goal: Point2, noise: NoiseConfig) -> EpisodeState:
    """Initialize an episode; draws the per-episode scale multiplier."""
    if locate_region(fp, start.position) is None:
        raise ValueError(f"start position ({start.x}, {start.y}) is outside all regions")
    if locate_region(fp, goal) is None:
        raise ValueError(f"goal position ({goal.x}, {goal.y}) is outside all regions")
    if noise.sigma_scale == 0:
        alpha = 1.0
    else:
        alpha = 1.0 + noise.sigma_scale * float(_normal_draws(noise.seed, 0, 0, 0, _SLOT_ALPHA)[0])
    return EpisodeState(
        floorplan=fp,
        true_pose=start,
        believed_pose=start,
        goal=goal,
        noise=noise,
        scale_alpha=alpha,
        trajectory=[start],
        believed_trajectory=[start],
        actions=[],
        walls=extract_walls(fp),
    )


def max_free_travel(px: float, py: float, ux: float, uy: float, dist: float,
                    segments: np.ndarray, clearance: float = WALL_CLEARANCE_M) -> float:
    """Largest travel t <= dist along unit (ux, uy) from (px, py) keeping at
    least `clearance` from every wall segment.

    Each wall is inflated into a capsule (segment Minkowski-summed with a
    clearance disc, shrunk by 1e-9 so a pose resting exactly on the clearance
    boundary can still slide along it); travel stops at the first capsule entry.
    """
    if dist <= 0:
        return 0.0
    if segments.shape[0] == 0:
        return dist
    r = clearance - 1e-9
    ax, ay, bx, by = segments[:, 0], segments[:, 1], segments[:, 2], segments[:, 3]
    wx, wy = bx - ax, by - ay
    seg_len = np.hypot(wx, wy)
    sx, sy = wx / seg_len, wy / seg_len      # unit along-segment
    nx, ny = -sy, sx                         # unit normal
    relx, rely = px - ax, py - ay

    entries = np.full(segments.shape[0], np.inf)

    # Rectangle part: proj in [0, L], |perp| <= r.
    proj0 = relx * sx + rely * sy
    gproj = ux * sx + uy * sy
    perp0 = relx * nx + rely * ny
    gperp = ux * nx + uy * ny
    lo1, hi1 = _slab_interval(proj0, gproj, 0.0, seg_len)
    lo2, hi2 = _slab_interval(perp0, gperp, -r, r)
    t0 = np.maximum(lo1, lo2)
    t1 = np.minimum(hi1, hi2)
    _accumulate_entry(entries, t0, t1, dist)

    # Cap discs at both endpoints.
    for cx, cy in ((relx, rely), (relx - wx, rely - wy)):
        b_half = cx * ux + cy * uy
        c = cx * cx + cy * cy - r * r
        disc = b_half * b_half - c
        ok = disc > 0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        t0 = np.where(ok, -b_half - sq, np.inf)
        t1 = np.where(ok, -b_half + sq, -np.inf)
        _accumulate_entry(entries, t0, t1, dist)

    first = float(entries.min())
    return dist if first == np.inf else min(dist, max(first, 0.0))


def _slab_interval(f0: np.ndarray, g: np.ndarray, lo: float, hi: float):
    """Parameter interval where f0 + t*g lies within [lo, hi]."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = (lo - f0) / g
        tb = (hi - f0) / g
    t_lo = np.minimum(ta, tb)
    t_hi = np.maximum(ta, tb)
    flat = np.abs(g) < 1e-15
    inside = (f0 >= lo) & (f0 <= hi)
    t_lo = np.where(flat, np.where(inside, -np.inf, np.inf), t_lo)
    t_hi = np.where(flat, np.where(inside, np.inf, -np.inf), t_hi)
    return t_lo, t_hi


def _accumulate_entry(entries: np.ndarray, t0: np.ndarray, t1: np.ndarray, dist: float):
    valid = (t1 > 1e-12) & (t0 < dist) & (t1 - t0 > 1e-12)
    np.minimum(entries, np.where(valid, np.maximum(t0, 0.0), np.inf), out=entries)


def _advance(pose: AgentPose, distance: float, heading: float,
             segments: np.ndarray) -> AgentPose:
    """Move along `heading`, truncated by wall clearance; supports negative
    distance (badly executed forward) by reversing the ray."""
    if distance >= 0:
        ux, uy = math.sin(heading), math.cos(heading)
        d = distance
    else:
        ux, uy = -math.sin(heading), -math.cos(heading)
        d = -distance
    travel = max_free_travel(pose.x, pose.y, ux, uy, d, segments)
    return AgentPose(pose.x + travel * ux, pose.y + travel * uy, heading)


def step(state: EpisodeState, action: Action) -> EpisodeState:
    """Execute one primitive action, updating true and believed poses.

    The believed pose integrates the same update law with all noise terms
    zeroed (the agent assumes commands execute perfectly) but applies the same
    wall-clearance truncation against the plan it knows.
    """
    if state.terminated:
        raise SimulationError("step after termination")
    if not action.is_primitive:
        raise ValueError(f"non-primitive action {action}; decompose composite actions first")

    t = state.step_count
    noise = state.noise
    segs = state.wall_segments

    if action.kind is ActionKind.STOP:
        state.terminated = True
    elif action.kind in (ActionKind.TURN_LEFT, ActionKind.TURN_RIGHT):
        sgn = 1.0 if action.kind is ActionKind.TURN_RIGHT else -1.0
        eps_rot = 0.0
        if noise.sigma_rot > 0:
            eps_rot = noise.sigma_rot * float(_normal_draws(noise.seed, t, 0, 0, _SLOT_ROT)[0])
        p = state.true_pose
        state.true_pose = AgentPose(p.x, p.y, p.theta + sgn * action.magnitude + eps_rot)
        b = state.believed_pose
        state.believed_pose = AgentPose(b.x, b.y, b.theta + sgn * action.magnitude)
    else:  # MOVE_FORWARD
        eps_m = 0.0
        if noise.sigma_move > 0:
            eps_m = noise.sigma_move * float(_normal_draws(noise.seed, t, 0, 0, _SLOT_MOVE)[0])
        eps_d = 0.0
        if noise.sigma_drift > 0:
            eps_d = noise.sigma_drift * float(_normal_draws(noise.seed, t, 0, 0, _SLOT_DRIFT)[0])
        d_true = action.magnitude * (1.0 + eps_m)
        theta_true = normalize_angle(state.true_pose.theta + eps_d)
        state.true_pose = _advance(state.true_pose, d_true, theta_true, segs)
        state.believed_pose = _advance(state.believed_pose, action.magnitude,
                                       state.believed_pose.theta, segs)

    state.actions.append(action)
    state.trajectory.append(state.true_pose)
    state.believed_trajectory.append(state.believed_pose)
    state.step_count += 1
    return state


def project_to_plan(state: EpisodeState, p: Point2) -> Point2:
    """World point -> floor-plan point under the episode's scale multiplier.

    The world->plan projection is the identity (both frames are metric);
    only the drawn-once multiplier alpha is applied here. Meters->pixels
    happens in the renderer.
    """
    return Point2(state.scale_alpha * p.x, state.scale_alpha * p.y)


def check_success(state: EpisodeState, distance_fn=None) -> bool:
    """Success iff final distance to goal is strictly under 3 m. Euclidean by
    default; pass distance_fn for geodesic distance."""
    if not state.terminated:
        raise SimulationError("check_success called before termination")
    if distance_fn is None:
        d = state.true_pose.position.distance_to(state.goal)
    else:
        d = distance_fn(state.true_pose.position, state.goal)
    return d < SUCCESS_RADIUS_M


def jitter_floorplan(fp: FloorPlan, sigma_jitter: float, seed: int) -> FloorPlan:
    """Displace every region vertex by iid N(0, sigma^2 I2).

    A displacement that makes the polygon self-intersecting is redrawn (up to
    16 retries), after which that vertex is left unperturbed. Region ids and
    types are preserved.
    """
    if sigma_jitter == 0:
        return fp
    regions = []
    for r in fp.regions:
        verts = list(r.polygon.vertices)
        for i in range(len(verts)):
            original = verts[i]
            for retry in range(17):
                eps = _normal_draws(seed, r.region_id, i, retry, _SLOT_JITTER, n=2)
                cand = Point2(original.x + sigma_jitter * float(eps[0]),
                              original.y + sigma_jitter * float(eps[1]))
                trial = Polygon(tuple(verts[:i] + [cand] + verts[i + 1:]))
                if trial.is_simple() and trial.area > 1e-12:
                    verts[i] = cand
                    break
            # all retries failed: keep the original vertex
        regions.append(Region(Polygon(tuple(verts)), r.region_type, r.region_id))
    return FloorPlan.build(fp.scene_id, fp.floor_id, regions)


@dataclass(frozen=True)
class EpisodeResult:
    final_pose: AgentPose
    trajectory: tuple[AgentPose, ...]
    goal: Point2
    success: bool
    ne: float
    oracle_success: bool
    path_length: float
    shortest_path_length: float
    steps: int

    def __post_init__(self):
        if self.success and not self.oracle_success:
            raise ValueError("success implies oracle_success")
        if self.path_length < 0:
            raise ValueError("path_length must be >= 0")


def episode_result(state: EpisodeState, shortest_path_length: float,
                   distance_fn=None) -> EpisodeResult:
    """Assemble the metrics-facing summary of a terminated episode."""
    if not state.terminated:
        raise SimulationError("episode_result called before termination")

    def dist(p: Point2) -> float:
        if distance_fn is None:
            return p.distance_to(state.goal)
        return distance_fn(p, state.goal)

    ne = dist(state.true_pose.position)
    min_d = min(dist(p.position) for p in state.trajectory)
    path_length = sum(
        state.trajectory[i].position.distance_to(state.trajectory[i + 1].position)
        for i in range(len(state.trajectory) - 1)
    )
    return EpisodeResult(
        final_pose=state.true_pose,
        trajectory=tuple(state.trajectory),
        goal=state.goal,
        success=ne < SUCCESS_RADIUS_M,
        ne=ne,
        oracle_success=min_d < SUCCESS_RADIUS_M,
        path_length=path_length,
        shortest_path_length=shortest_path_length,
        steps=state.step_count,
    )


# ---------------------------------------------------------------------------
# Trajectory log: one line-delimited JSON record per primitive step.
# ---------------------------------------------------------------------------

def trajectory_log_records(state: EpisodeState) -> list[dict]:
    records = []
    for t, action in enumerate(state.actions):
        records.append({
            "t": t,
            "action": action.kind.value,
            "mag": action.magnitude,
            "true_pose": state.trajectory[t + 1].as_list(),
            "believed_pose": state.believed_trajectory[t + 1].as_list(),
        })
    return records


def write_trajectory_jsonl(state: EpisodeState, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in trajectory_log_records(state):
            f.write(json.dumps(rec) + "\n")


def read_trajectory_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
