"""Concise-instruction grammar: 10 templates naming the start region, goal
region, and a stop condition, with an exact parser as the inverse.

Field constraints the grammar relies on: region types are lowercase words
(letters and spaces), ids are non-negative integers, and stop conditions are
free text without periods. Templates with an empty stop condition fall back
to a variant omitting the stop clause.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass


class InstructionError(ValueError):
    pass


# (with-stop, without-stop) pairs; placeholders: start_type, start_id,
# goal_type, goal_id, stop_condition.
TEMPLATES: tuple[tuple[str, str], ...] = (
    ("You are in {start_type} {start_id}. Go to {goal_type} {goal_id} and stop {stop_condition}.",
     "You are in {start_type} {start_id}. Go to {goal_type} {goal_id}."),
    ("Starting from {start_type} {start_id}, walk to {goal_type} {goal_id} and stop {stop_condition}.",
     "Starting from {start_type} {start_id}, walk to {goal_type} {goal_id}."),
    ("You begin in {start_type} {start_id}. Head to {goal_type} {goal_id}, then stop {stop_condition}.",
     "You begin in {start_type} {start_id}. Head to {goal_type} {goal_id}."),
    ("From {start_type} {start_id}, make your way to {goal_type} {goal_id} and wait {stop_condition}.",
     "From {start_type} {start_id}, make your way to {goal_type} {goal_id}."),
    ("Leave {start_type} {start_id} and go to {goal_type} {goal_id}. Stop {stop_condition}.",
     "Leave {start_type} {start_id} and go to {goal_type} {goal_id}."),
    ("Your current location is {start_type} {start_id}. Navigate to {goal_type} {goal_id} and halt {stop_condition}.",
     "Your current location is {start_type} {start_id}. Navigate to {goal_type} {goal_id}."),
    ("Starting in {start_type} {start_id}, find {goal_type} {goal_id} and stop once you are {stop_condition}.",
     "Starting in {start_type} {start_id}, find {goal_type} {goal_id}."),
    ("You start in {start_type} {start_id}. Proceed to {goal_type} {goal_id} and finish {stop_condition}.",
     "You start in {start_type} {start_id}. Proceed to {goal_type} {goal_id}."),
    ("Move from {start_type} {start_id} to {goal_type} {goal_id} and come to a stop {stop_condition}.",
     "Move from {start_type} {start_id} to {goal_type} {goal_id}."),
    ("Begin in {start_type} {start_id}. Your destination is {goal_type} {goal_id}; stop {stop_condition}.",
     "Begin in {start_type} {start_id}. Your destination is {goal_type} {goal_id}."),
)

_TYPE = r"[a-z][a-z ]*?"
_ID = r"\d+"
_STOP = r"[^.]+"


def _pattern(template: str) -> re.Pattern:
    out = []
    pos = 0
    for m in re.finditer(r"\{(\w+)\}", template):
        out.append(re.escape(template[pos:m.start()]))
        name = m.group(1)
        if name in ("start_id", "goal_id"):
            out.append(f"(?P<{name}>{_ID})")
        elif name == "stop_condition":
            out.append(f"(?P<{name}>{_STOP})")
        else:
            out.append(f"(?P<{name}>{_TYPE})")
        pos = m.end()
    out.append(re.escape(template[pos:]))
    return re.compile("^" + "".join(out) + "$")


_FULL_PATTERNS = [_pattern(full) for full, _ in TEMPLATES]
_BARE_PATTERNS = [_pattern(bare) for _, bare in TEMPLATES]


@dataclass(frozen=True)
class Instruction:
    template_id: int
    start_type: str
    start_id: int
    goal_type: str
    goal_id: int
    stop_condition: str
    rendered: str

    def to_dict(self) -> dict:
        return {
            "template_id": self.template_id,
            "start_type": self.start_type,
            "start_id": self.start_id,
            "goal_type": self.goal_type,
            "goal_id": self.goal_id,
            "stop_condition": self.stop_condition,
            "rendered": self.rendered,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Instruction":
        return cls(int(d["template_id"]), d["start_type"], int(d["start_id"]),
                   d["goal_type"], int(d["goal_id"]), d["stop_condition"], d["rendered"])


def render_instruction(template_id: int, start_type: str, start_id: int,
                       goal_type: str, goal_id: int, stop_condition: str) -> Instruction:
    if not 0 <= template_id < len(TEMPLATES):
        raise InstructionError(f"unknown template_id {template_id}")
    if "." in stop_condition:
        raise InstructionError("stop_condition must not contain '.'")
    full, bare = TEMPLATES[template_id]
    text = (full if stop_condition else bare).format(
        start_type=start_type, start_id=start_id,
        goal_type=goal_type, goal_id=goal_id, stop_condition=stop_condition)
    return Instruction(template_id, start_type, start_id, goal_type, goal_id,
                       stop_condition, text)


def gen_instruction(trace, stop_condition: str, template_id: int,
                    goal_id: int, goal_type: str) -> Instruction:
    """Instantiate a template with the trace's first region as the start."""
    if not trace.compressed:
        raise InstructionError("empty region trace")
    start_id, start_type = trace.compressed[0]
    return render_instruction(template_id, start_type, start_id,
                              goal_type, goal_id, stop_condition)


def parse_instruction(text: str) -> Instruction:
    """Recover template id and all fields; exact inverse of rendering."""
    # Full variants first: a stop clause ending in digits could otherwise
    # masquerade as a bare goal id.
    for tid, pat in enumerate(_FULL_PATTERNS):
        m = pat.match(text)
        if m:
            return Instruction(tid, m["start_type"], int(m["start_id"]),
                               m["goal_type"], int(m["goal_id"]),
                               m["stop_condition"], text)
    for tid, pat in enumerate(_BARE_PATTERNS):
        m = pat.match(text)
        if m:
            return Instruction(tid, m["start_type"], int(m["start_id"]),
                               m["goal_type"], int(m["goal_id"]), "", text)
    skeletons = [full.format(start_type="<type>", start_id="<id>",
                             goal_type="<type>", goal_id="<id>",
                             stop_condition="<stop>")
                 for full, _ in TEMPLATES]
    nearest = difflib.get_close_matches(text, skeletons, n=1, cutoff=0.0)
    hint = f"; nearest template: {nearest[0]!r}" if nearest else ""
    raise InstructionError(f"text matches no instruction template{hint}")
