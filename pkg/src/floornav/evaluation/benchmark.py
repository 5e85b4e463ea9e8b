"""Benchmark runner: episodes x ablation grid with NE/OSR/SR/SPL tables.

Plan-mode ablations transform what the POLICY sees; the simulator always runs
on the episode's true plan. mask:f hides a contiguous f-fraction of the plan
(treated as unknown-free-space by planners, grey pixels in rasters);
random_plan substitutes a different scene's plan outright.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..dataset.actions import decompose_action
from ..dataset.episodes import Episode, require_floorplan
from ..dataset.floorgen import gen_synthetic_floorplan
from ..geometry import FloorPlan
from ..simulator import (
    Action,
    EpisodeResult,
    NoiseConfig,
    episode_result,
    jitter_floorplan,
    reset,
    step,
)
from .metrics import MetricsSummary, shortest_path_length, summarize
from .policies import PolicyError, PolicySpec, make_policy


@dataclass(frozen=True)
class AblationSpec:
    plan_mode: str = "full"          # full | mask | random_plan
    mask_fraction: float = 0.0
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    label: str = ""

    def __post_init__(self):
        if self.plan_mode not in ("full", "mask", "random_plan"):
            raise ValueError(f"unknown plan_mode '{self.plan_mode}'")
        if not 0.0 <= self.mask_fraction <= 1.0:
            raise ValueError("mask_fraction must be within [0, 1]")
        if not self.label:
            object.__setattr__(self, "label", self.default_label())

    def default_label(self) -> str:
        plan = {"full": "full", "random_plan": "random_plan"}.get(
            self.plan_mode, f"mask:{self.mask_fraction:g}")
        n = self.noise
        return (f"plan={plan} move={n.sigma_move:g} rot={n.sigma_rot:g} "
                f"scale={n.sigma_scale:g} jitter={n.sigma_jitter:g} seed={n.seed}")


def parse_plan_mode(text: str) -> tuple[str, float]:
    """CLI plan-mode syntax: full | mask:<fraction> | random."""
    if text == "full":
        return ("full", 0.0)
    if text in ("random", "random_plan"):
        return ("random_plan", 0.0)
    if text.startswith("mask:"):
        return ("mask", float(text.split(":", 1)[1]))
    raise ValueError(f"unknown plan mode '{text}'")


def _episode_noise(noise: NoiseConfig, episode_index: int) -> NoiseConfig:
    """Per-episode seed derivation so episodes draw independent streams."""
    mixed = int(np.random.SeedSequence(entropy=noise.seed,
                                       spawn_key=(episode_index,)).generate_state(1)[0])
    return replace(noise, seed=mixed)


def mask_world_rect(fp: FloorPlan, fraction: float, seed: int):
    """World-coordinate rectangle covering `fraction` of the plan's bbox, with
    the same sqrt-sided placement the raster masking uses."""
    if fraction <= 0.0:
        return None
    minx, miny, maxx, maxy = fp.bounds
    w, h = maxx - minx, maxy - miny
    side = math.sqrt(min(fraction, 1.0))
    rw, rh = w * side, h * side
    rng = np.random.default_rng(seed)
    x0 = minx + float(rng.uniform(0, w - rw)) if w > rw else minx
    y0 = miny + float(rng.uniform(0, h - rh)) if h > rh else miny
    return (x0, y0, x0 + rw, y0 + rh)


def effective_plan(episode: Episode, ablation: AblationSpec, episode_index: int,
                   plan_pool: list[FloorPlan] | None = None) -> tuple[FloorPlan, tuple | None]:
    """(policy-facing plan, mask rect). Jitter applies after substitution."""
    fp = require_floorplan(episode)
    mask_rect = None
    if ablation.plan_mode == "random_plan":
        pool = [p for p in (plan_pool or []) if p.scene_id != fp.scene_id]
        if pool:
            fp = pool[episode_index % len(pool)]
        else:
            fp = gen_synthetic_floorplan(room_count=4,
                                         seed=ablation.noise.seed * 7919 + episode_index)
    elif ablation.plan_mode == "mask":
        mask_rect = mask_world_rect(fp, ablation.mask_fraction,
                                    ablation.noise.seed + episode_index)
    if ablation.noise.sigma_jitter > 0:
        fp = jitter_floorplan(fp, ablation.noise.sigma_jitter,
                              ablation.noise.seed + episode_index)
    return fp, mask_rect


def run_episode(episode: Episode, fp_effective: FloorPlan, policy_spec: PolicySpec,
                noise: NoiseConfig, mask_rect: tuple | None = None,
                distance_mode: str = "euclidean") -> EpisodeResult:
    """Step the simulator under the policy until Stop or the step cap (a
    forced Stop counts the agent where it stands)."""
    fp_true = require_floorplan(episode)
    state = reset(fp_true, episode.start_pose, episode.goal, noise)
    policy = make_policy(policy_spec, fp_effective, episode.goal,
                         episode.start_pose, episode.instruction.rendered,
                         episode_seed=noise.seed, mask_rect=mask_rect)
    try:
        while not state.terminated:
            if state.step_count >= policy_spec.max_steps:
                step(state, Action.stop())
                break
            action = policy(state)
            if not isinstance(action, Action):
                raise PolicyError(f"policy returned {type(action).__name__}, not an Action")
            for prim in decompose_action(action):
                if state.terminated:
                    break
                step(state, prim)
    finally:
        close = getattr(policy, "close", None)
        if close:
            close()

    L = shortest_path_length(fp_true, episode.start_pose.position, episode.goal)
    if not math.isfinite(L) or L <= 0:
        L = max(episode.start_pose.position.distance_to(episode.goal), 1e-9)
    distance_fn = None
    if distance_mode == "geodesic":
        distance_fn = lambda p, g: shortest_path_length(fp_true, p, g)  # noqa: E731
    return episode_result(state, L, distance_fn)


def run_benchmark(episodes: list[Episode], policy_spec: PolicySpec,
                  cells: list[AblationSpec], out_dir=None,
                  distance_mode: str = "euclidean",
                  use_episode_noise: bool = False):
    """Run every ablation cell over all episodes.

    Returns [(cell, MetricsSummary, per-episode results)]. With out_dir set,
    writes results.jsonl (one record per episode per cell, sorted), table.md,
    and table.csv. Aggregation is order-independent: summaries come from the
    sorted per-episode log.
    """
    if not episodes:
        raise ValueError("benchmark needs at least one episode")
    plan_pool: list[FloorPlan] = []
    seen = set()
    for ep in episodes:
        fp = require_floorplan(ep)
        if fp.scene_id not in seen:
            seen.add(fp.scene_id)
            plan_pool.append(fp)

    rows = []
    log_records = []
    for cell in cells:
        results = []
        for idx, ep in enumerate(episodes):
            fp_eff, mask_rect = effective_plan(ep, cell, idx, plan_pool)
            base = ep.noise if (use_episode_noise and ep.noise is not None) else cell.noise
            res = run_episode(ep, fp_eff, policy_spec, _episode_noise(base, idx),
                              mask_rect=mask_rect, distance_mode=distance_mode)
            results.append((ep.episode_id, res))
        results.sort(key=lambda pair: pair[0])
        ordered = [r for _, r in results]
        summary = summarize(ordered)
        rows.append((cell, summary, ordered))
        for eid, res in results:
            log_records.append({
                "cell": cell.label,
                "episode_id": eid,
                "ne": res.ne,
                "success": res.success,
                "oracle_success": res.oracle_success,
                "path_length": res.path_length,
                "shortest_path_length": res.shortest_path_length,
                "steps": res.steps,
            })

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "results.jsonl", "w", encoding="utf-8") as f:
            for rec in log_records:
                f.write(json.dumps(rec) + "\n")
        (out / "table.md").write_text(render_table(rows, "md"), encoding="utf-8")
        (out / "table.csv").write_text(render_table(rows, "csv"), encoding="utf-8")
    return rows


def render_table(rows, fmt: str = "md") -> str:
    """Result table with the metric columns in NE, OSR, SR, SPL order."""
    header = ["cell", "NE", "OSR", "SR", "SPL"]
    body = [[cell.label, f"{s.ne_mean:.2f}", f"{s.osr * 100:.1f}",
             f"{s.sr * 100:.1f}", f"{s.spl * 100:.1f}"]
            for cell, s, _ in rows]
    if fmt == "csv":
        lines = [",".join(header)] + [",".join(r) for r in body]
        return "\n".join(lines) + "\n"
    if fmt == "md":
        widths = [max(len(h), *(len(r[i]) for r in body)) if body else len(h)
                  for i, h in enumerate(header)]
        def fmt_row(cols):
            return "| " + " | ".join(c.ljust(w) for c, w in zip(cols, widths)) + " |"
        lines = [fmt_row(header),
                 "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
        lines += [fmt_row(r) for r in body]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown table format '{fmt}'")
