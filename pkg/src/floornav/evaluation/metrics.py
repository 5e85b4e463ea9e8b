"""Navigation metrics: NE, SR, OSR, SPL, and free-space shortest paths."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..geometry import FloorPlan, Point2
from ..pathfind import shortest_path_cost
from ..simulator import SUCCESS_RADIUS_M, EpisodeResult


@dataclass(frozen=True)
class MetricsSummary:
    n_episodes: int
    ne_mean: float
    sr: float
    osr: float
    spl: float

    def __post_init__(self):
        if not (0.0 <= self.spl <= self.sr + 1e-12 <= self.osr + 1e-12 <= 1.0 + 1e-12):
            raise ValueError(f"metric ordering violated: SPL={self.spl} SR={self.sr} "
                             f"OSR={self.osr}")


def shortest_path_length(fp: FloorPlan, a: Point2, b: Point2) -> float:
    """Grid shortest-path length (0.1 m cells, 0.05 m wall clearance)."""
    return shortest_path_cost(fp, a, b)


def navigation_error(result: EpisodeResult, mode: str = "euclidean",
                     fp: FloorPlan | None = None) -> float:
    """Final-position-to-goal distance; geodesic mode needs the floor plan and
    reports infinity when the goal is unreachable from the final position."""
    if mode == "euclidean":
        return result.final_pose.position.distance_to(result.goal)
    if mode == "geodesic":
        if fp is None:
            raise ValueError("geodesic navigation error needs the floor plan")
        return shortest_path_length(fp, result.final_pose.position, result.goal)
    raise ValueError(f"unknown distance mode '{mode}'")


def success(result: EpisodeResult) -> bool:
    return result.ne < SUCCESS_RADIUS_M


def oracle_success(result: EpisodeResult) -> bool:
    """Would an oracle stop policy have succeeded: closest approach under the
    threshold anywhere along the trajectory."""
    min_d = min(p.position.distance_to(result.goal) for p in result.trajectory)
    return min_d < SUCCESS_RADIUS_M


def spl(results: list[EpisodeResult]) -> float:
    """Mean of S_i * L_i / max(P_i, L_i); failures contribute zero."""
    if not results:
        raise ValueError("spl of an empty batch")
    total = 0.0
    for r in results:
        if r.shortest_path_length <= 0:
            raise ValueError("shortest_path_length must be positive for SPL")
        if r.success:
            total += r.shortest_path_length / max(r.path_length, r.shortest_path_length)
    return total / len(results)


def summarize(results: list[EpisodeResult]) -> MetricsSummary:
    if not results:
        raise ValueError("cannot summarize an empty batch")
    finite_ne = [r.ne for r in results if math.isfinite(r.ne)]
    return MetricsSummary(
        n_episodes=len(results),
        ne_mean=sum(finite_ne) / len(finite_ne) if finite_ne else math.inf,
        sr=sum(r.success for r in results) / len(results),
        osr=sum(r.oracle_success for r in results) / len(results),
        spl=spl(results),
    )
