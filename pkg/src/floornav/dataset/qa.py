"""Auxiliary-task QA generation: next-action, region localization, trajectory
reasoning, and instruction summarization records."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..geometry import locate_region
from ..simulator import Action
from .actions import action_text, merge_actions, sample_video_frames
from .episodes import Episode, episode_poses, require_floorplan


class QaGenError(ValueError):
    pass


@dataclass
class QaRecord:
    task: str            # nav | region_localization | trajectory_reasoning | instruction_summarization
    prompt: str
    frames: list[str]    # frame references, at most the video budget
    target: str
    caption: str | None = None  # teacher-model caption passthrough, unpopulated here
    stage: str | None = None    # trajectory_reasoning only
    action: Action | None = field(default=None, compare=False)  # nav only

    def to_dict(self) -> dict:
        doc = {
            "task": self.task,
            "prompt": self.prompt,
            "frames": self.frames,
            "target": self.target,
            "caption": self.caption,
        }
        meta = {}
        if self.stage is not None:
            meta["stage"] = self.stage
        if self.action is not None:
            meta["action"] = {"kind": self.action.kind.value, "magnitude": self.action.magnitude}
        if meta:
            doc["meta"] = meta
        return doc


def frame_ref(step: int) -> str:
    return f"frames/{step:05d}.png"


def _frames_up_to(t: int) -> list[str]:
    return [frame_ref(i) for i in sample_video_frames(t + 1)]


def _region_name(rid: int, rtype: str) -> str:
    return f"{rtype} {rid}"


def gen_nav_qa(ep: Episode) -> list[QaRecord]:
    """One record per merged action: the model sees frames up to the step
    where the action begins and must answer with the composite action."""
    merged = merge_actions(list(ep.gt_actions))
    records = []
    t = 0
    for a in merged:
        prompt = ("You are navigating with a floor plan. "
                  f"Instruction: {ep.instruction.rendered} What should you do next?")
        records.append(QaRecord(
            task="nav",
            prompt=prompt,
            frames=_frames_up_to(t),
            target=f"The next action is {action_text(a)}.",
            action=a,
        ))
        t += len_primitives(a)
    return records


def len_primitives(a: Action) -> int:
    from .actions import decompose_action

    return len(decompose_action(a))


def gen_localization_qa(ep: Episode, t: int) -> QaRecord:
    """Ask for a description plus the current region type; the target's type
    comes from polygon containment of the step-t pose."""
    fp = require_floorplan(ep)
    poses = episode_poses(ep)
    if not 0 <= t < len(poses):
        raise QaGenError(f"step {t} beyond trajectory of {len(poses) - 1} steps")
    region = locate_region(fp, poses[t].position)
    if region is None:
        raise QaGenError(f"pose at step {t} is outside all regions")
    return QaRecord(
        task="region_localization",
        prompt="Describe your current observation and identify the type of region you are in.",
        frames=_frames_up_to(t),
        target=f"The current region type is {region.region_type}.",
        caption=None,
    )


def gen_trajectory_reasoning_qa(ep: Episode, t: int) -> QaRecord:
    """Stage-dependent progress summary.

    Stage rules (checked in order): Initialization while the compressed trace
    up to step t still has length 1; Termination once the current region is
    the instruction's goal region; Navigation otherwise. The visited list H
    includes the current region.
    """
    fp = require_floorplan(ep)
    poses = episode_poses(ep)
    if not 0 <= t < len(poses):
        raise QaGenError(f"step {t} beyond trajectory of {len(poses) - 1} steps")

    def compress(upto: int):
        out = []
        for p in poses[:upto + 1]:
            r = locate_region(fp, p.position)
            if r is None:
                raise QaGenError("pose outside all regions")
            entry = (r.region_id, r.region_type)
            if not out or out[-1] != entry:
                out.append(entry)
        return out

    visited = compress(t)
    full = compress(len(poses) - 1)
    current = visited[-1]

    if len(visited) == 1:
        stage = "initialization"
    elif current[0] == ep.instruction.goal_id:
        stage = "termination"
    else:
        stage = "navigation"

    cur_name = _region_name(*current)
    if stage == "termination":
        h = ", ".join(_region_name(rid, rt) for rid, rt in visited)
        target = (f"Visited regions in order: {h}. You are currently in {cur_name}. "
                  f"Stop condition: {ep.instruction.stop_condition}.")
    else:
        idx = next(i for i, e in enumerate(full) if e[0] == current[0])
        nxt = full[idx + 1] if idx + 1 < len(full) else (ep.instruction.goal_id,
                                                         ep.instruction.goal_type)
        nxt_name = _region_name(*nxt)
        if stage == "initialization":
            target = (f"You are currently in {cur_name}. "
                      f"The next region to visit is {nxt_name}.")
        else:
            h = ", ".join(_region_name(rid, rt) for rid, rt in visited)
            target = (f"Visited regions in order: {h}. You are currently in {cur_name}. "
                      f"The next region to visit is {nxt_name}.")
    return QaRecord(
        task="trajectory_reasoning",
        prompt=("Summarize your navigation progress: the regions visited in order, "
                "your current region, and what comes next."),
        frames=_frames_up_to(t),
        target=target,
        stage=stage,
    )


def gen_summarization_qa(ep: Episode) -> QaRecord:
    """Reconstruct the episode's concise instruction from the full video."""
    frame_count = max(1, len(ep.gt_actions))
    return QaRecord(
        task="instruction_summarization",
        prompt="Watch the navigation video and reconstruct the concise instruction the agent followed.",
        frames=[frame_ref(i) for i in sample_video_frames(frame_count)],
        target=ep.instruction.rendered,
    )


def write_qa_jsonl(records: list[QaRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec.to_dict()) + "\n")


def read_qa_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
