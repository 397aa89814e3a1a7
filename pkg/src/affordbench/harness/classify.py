"""Mechanical failure attribution with the geometric oracle as judge."""

from __future__ import annotations

import re
from enum import Enum
from typing import Optional

from ..agent import held_label
from ..backends.oracle import (
    HIGH,
    reference_pickplace,
    reference_push,
    semantics_from_params,
)
from ..perception import NoiseConfig, describe, detect
from ..records import ACTION_PARSE, CONTROLLER_PARSE, OFF_TABLE, PLANNER_PARSE, EpisodeRecord, RoundRecord
from ..tasks import COLORS, TaskKind, task_progress
from ..world import OUTWARD_NORMALS, Point2, Side, world_from_dict


class FailureClass(str, Enum):
    OBJECT_DETECTION = "ObjectDetection"
    AFFORDANCE_PREDICTION = "AffordancePrediction"
    TASK_PLANNING = "TaskPlanning"
    MOTION_CONTROL = "MotionControl"
    TIME_BUDGET = "TimeBudget"


FAILURE_ORDER = tuple(FailureClass)

_MENTION = re.compile(r"\b(?:" + "|".join(COLORS) + r") (?:block|bowl|ring)(?: \d+)?\b|\bpeg \d+\b")


def _goal_frame(record: EpisodeRecord, owner: str, side: str) -> Point2:
    """Displacement direction a push contributes toward the task goal."""
    p = record.task.params
    push = OUTWARD_NORMALS[Side(side)].scale(-1.0)
    if owner == p.target_block:
        return push
    if record.task.kind is TaskKind.SEP and owner == p.other_block:
        return push.scale(-1.0)
    return Point2(0.0, 0.0)


def affordance_wrong(record: EpisodeRecord, rr: RoundRecord) -> bool:
    """True when the round's affordance argmax opposes the oracle's choice."""
    if not rr.planner or not rr.planner.get("affordance"):
        return False
    aff = rr.planner["affordance"]
    best = max(aff.values())
    letter = next(k for k, v in aff.items() if v == best)
    if letter not in rr.parts:
        return False
    owner, side = rr.parts[letter]
    state = world_from_dict(rr.start_state)
    sem = semantics_from_params(record.task.kind, record.task.params)
    if record.task.kind.gripper:
        held = held_label(state)
        clean = describe(detect(state, NoiseConfig.off()), state.effector.center, held, gripper=True)
        ref = reference_pickplace(sem, state, held)
        high = {
            clean.part_index[ch].owner for ch, v in ref.affordance.items() if v == HIGH and ch in clean.part_index
        }
        return bool(high) and owner not in high
    choice = reference_push(sem, state)
    if choice is None:
        return False
    e = _goal_frame(record, owner, side)
    e_ref = _goal_frame(record, choice.block, choice.side.value)
    return e.norm() == 0.0 or e.dot(e_ref) < 0


def subtasks_reference_absent(rr: RoundRecord) -> bool:
    if not rr.planner:
        return False
    present = {d["label"] for d in rr.detections if d.get("detected", True)}
    for s in rr.planner.get("subtasks", []):
        for m in _MENTION.findall(s):
            if m not in present:
                return True
    return False


def motion_failed(record: EpisodeRecord, rr: RoundRecord) -> bool:
    for out in rr.outcomes:
        if out.get("off_table") or out.get("illegal"):
            return True
    first = next((c for out in rr.outcomes for c in out.get("contacts", []) if c[3] == "effector"), None)
    if first is not None and rr.chosen is not None and [first[0], first[1]] != list(rr.chosen):
        return True
    if record.task.kind.gripper or rr.end_state is None or not rr.executed:
        return False
    start, end = world_from_dict(rr.start_state), world_from_dict(rr.end_state)
    p = record.task.params
    movers = [p.target_block] + ([p.other_block] if record.task.kind is TaskKind.SEP else [])
    moved = any(start.block(b).center != end.block(b).center for b in movers)
    return moved and task_progress(record.task, end) > task_progress(record.task, start) + 1e-9


def classify_failure(record: EpisodeRecord) -> FailureClass:
    """First matching class in priority order; only defined for failures."""
    if record.outcome != "failure":
        raise ValueError(f"classify_failure needs a failed episode, got outcome {record.outcome!r}")
    relevant = set(record.task.relevant)
    if any(relevant.intersection(rr.omitted) for rr in record.rounds):
        return FailureClass.OBJECT_DETECTION
    if any(affordance_wrong(record, rr) for rr in record.rounds):
        return FailureClass.AFFORDANCE_PREDICTION
    if record.termination == PLANNER_PARSE or any(subtasks_reference_absent(rr) for rr in record.rounds):
        return FailureClass.TASK_PLANNING
    if record.termination in (OFF_TABLE, CONTROLLER_PARSE, ACTION_PARSE):
        return FailureClass.MOTION_CONTROL
    if any(motion_failed(record, rr) for rr in record.rounds):
        return FailureClass.MOTION_CONTROL
    return FailureClass.TIME_BUDGET


def label(record: EpisodeRecord) -> Optional[str]:
    """Outcome label used in logs and reports."""
    if record.outcome == "failure":
        return classify_failure(record).value
    return None
