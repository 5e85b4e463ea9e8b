"""Frame export in the four model-input layouts.

Layouts:
  static_separate - one static plan image per episode plus the observation frames
  dual_stream     - two parallel frame lists (observations, dynamic plan views)
  interleaved     - one list alternating observation, plan at each step
  dual_view       - one composed [observation | plan] frame per step
"""

from __future__ import annotations

import json
from pathlib import Path

from ..render import (
    RasterConfig,
    RaycastConfig,
    compose_dual_view,
    overlay_pose_trajectory,
    raycast_observation,
    render_floorplan,
    save_png,
)
from .episodes import Episode, episode_poses, require_floorplan

LAYOUTS = ("static_separate", "dual_stream", "interleaved", "dual_view")


def export_dataset(episodes: list[Episode], layout: str, out_dir,
                   raster_cfg: RasterConfig = RasterConfig(),
                   raycast_cfg: RaycastConfig = RaycastConfig()) -> dict:
    """Render every episode's frames in the given layout and write a manifest
    describing per-record frame ordering. Returns the manifest."""
    if layout not in LAYOUTS:
        raise ValueError(f"unknown layout '{layout}'; expected one of {LAYOUTS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    records = []
    for ep in episodes:
        fp = require_floorplan(ep)
        base = render_floorplan(fp, raster_cfg)
        poses = episode_poses(ep)
        steps = len(ep.gt_actions)
        ep_dir = out / ep.episode_id
        ep_dir.mkdir(parents=True, exist_ok=True)

        def rel(p: Path) -> str:
            return str(p.relative_to(out))

        obs_refs, plan_refs, dual_refs = [], [], []
        for t in range(steps):
            obs = raycast_observation(fp, poses[t], raycast_cfg)
            if layout != "static_separate":
                plan = overlay_pose_trajectory(base, fp, raster_cfg,
                                               poses[:t], poses[t])
            if layout == "dual_view":
                frame = compose_dual_view(obs, plan, timestamp_step=t)
                p = ep_dir / f"dual_{t:05d}.png"
                save_png(frame.image, p)
                dual_refs.append(rel(p))
            else:
                po = ep_dir / f"obs_{t:05d}.png"
                save_png(obs, po)
                obs_refs.append(rel(po))
                if layout != "static_separate":
                    pp = ep_dir / f"plan_{t:05d}.png"
                    save_png(plan, pp)
                    plan_refs.append(rel(pp))

        rec = {"episode_id": ep.episode_id, "steps": steps,
               "instruction": ep.instruction.rendered}
        if layout == "static_separate":
            p = ep_dir / "plan.png"
            save_png(base, p)
            rec["plan"] = rel(p)
            rec["frames"] = obs_refs
        elif layout == "dual_stream":
            rec["observation_frames"] = obs_refs
            rec["plan_frames"] = plan_refs
        elif layout == "interleaved":
            rec["frames"] = [ref for pair in zip(obs_refs, plan_refs) for ref in pair]
        else:
            rec["frames"] = dual_refs
        records.append(rec)

    manifest = {"layout": layout, "episodes": records}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                       encoding="utf-8")
    return manifest
