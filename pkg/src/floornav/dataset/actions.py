"""Action-sequence utilities: merge/decompose composites, frame sampling,
and class balancing of navigation QA records."""

from __future__ import annotations

import logging
import math
from collections import Counter

from ..simulator import Action, ActionKind, PRIMITIVE_FORWARD_M, PRIMITIVE_TURN_RAD

log = logging.getLogger(__name__)

VIDEO_FRAME_BUDGET = 6


def merge_actions(seq: list[Action]) -> list[Action]:
    """Sum maximal runs of same-kind actions into single composites.

    Stop is never merged (a run of Stops would be ill-formed anyway).
    """
    out: list[Action] = []
    for a in seq:
        if (out and a.kind is not ActionKind.STOP and out[-1].kind is a.kind):
            out[-1] = Action(a.kind, out[-1].magnitude + a.magnitude)
        else:
            out.append(a)
    return out


def decompose_action(a: Action) -> list[Action]:
    """Composite -> primitive actions; magnitudes snap to the nearest positive
    multiple of the primitive step (a sub-primitive request still executes one
    primitive, with a logged warning)."""
    if a.kind is ActionKind.STOP:
        return [a]
    unit = PRIMITIVE_FORWARD_M if a.kind is ActionKind.MOVE_FORWARD else PRIMITIVE_TURN_RAD
    k = max(1, int(round(a.magnitude / unit)))
    if abs(k * unit - a.magnitude) > 1e-9:
        log.warning("action magnitude %.6g rounded to %d x %.6g", a.magnitude, k, unit)
    return [Action(a.kind, unit) for _ in range(k)]


def decompose_sequence(seq: list[Action]) -> list[Action]:
    out: list[Action] = []
    for a in seq:
        out.extend(decompose_action(a))
    return out


def sample_video_frames(frame_count: int, budget: int = VIDEO_FRAME_BUDGET) -> list[int]:
    """Frame indices to keep: all of them if they fit the budget, otherwise
    the first, the last, and uniformly spaced frames in between."""
    if frame_count < 1:
        raise ValueError("frame_count must be >= 1")
    if frame_count <= budget:
        return list(range(frame_count))
    raw = [round(k * (frame_count - 1) / (budget - 1)) for k in range(budget)]
    out: list[int] = []
    for i in raw:
        if not out or i > out[-1]:
            out.append(i)
    return out


def action_text(a: Action) -> str:
    """Human/model-facing rendering used in navigation QA targets."""
    if a.kind is ActionKind.STOP:
        return "stop"
    if a.kind is ActionKind.MOVE_FORWARD:
        return f"move forward {int(round(a.magnitude * 100))} cm"
    direction = "left" if a.kind is ActionKind.TURN_LEFT else "right"
    return f"turn {direction} {int(round(math.degrees(a.magnitude)))} degrees"


def balance_actions(records: list, floor_ratio: float = 0.5):
    """Upsample under-represented action classes by duplicating records until
    each class count reaches floor_ratio * (input mean class count).

    Never deletes records: the output multiset is a superset of the input.
    Returns (balanced_records, report) where the report carries before/after
    histograms keyed by action kind.
    """
    records = list(records)
    by_kind: dict[str, list] = {}
    for rec in records:
        if rec.action is None:
            raise ValueError("balance_actions requires nav records with actions")
        by_kind.setdefault(rec.action.kind.value, []).append(rec)
    before = Counter({k: len(v) for k, v in by_kind.items()})
    if not before:
        return records, {"before": {}, "after": {}, "floor": 0}
    floor = floor_ratio * (sum(before.values()) / len(before))
    out = list(records)
    for kind, recs in sorted(by_kind.items()):
        need = int(math.ceil(floor)) - len(recs)
        for i in range(max(0, need)):
            out.append(recs[i % len(recs)])
    after = Counter(r.action.kind.value for r in out)
    return out, {"before": dict(before), "after": dict(after), "floor": floor}
