"""Prompt templates for the sub-task planner and motion controller, and
parsers that turn raw model text into structured outputs.

Responses are expected as a JSON object (ideally in a ```json fence) with
the keys ``consequences``, ``affordance``, ``subtasks`` and ``waypoints``.
"""

from __future__ import annotations

import ast
import json
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from .perception import SceneDescription
from .world import Point2

log = logging.getLogger(__name__)

MAX_RESPONSE_CHARS = 200_000


class PromptError(ValueError):
    """A template slot is missing or invalid."""


class ParseError(ValueError):
    """A model response could not be turned into a structured output."""


@dataclass
class PlannerOutput:
    consequences: dict[str, str]
    affordance: dict[str, float]
    subtasks: list[str]
    warnings: list[str] = field(default_factory=list)

    def argmax(self) -> Optional[str]:
        if not self.affordance:
            return None
        best = max(self.affordance.values())
        return next(k for k, v in self.affordance.items() if v == best)

    def to_wire(self) -> dict:
        return {"consequences": self.consequences, "affordance": self.affordance, "subtasks": self.subtasks}


@dataclass
class ControlSequence:
    waypoints: tuple[Point2, ...]
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.waypoints)

    def to_wire(self) -> dict:
        return {"waypoints": [p.as_list() for p in self.waypoints]}


# --- slot defaults ------------------------------------------------------------

PUSH_SKILLS = (
    "move a cylindrical end-effector in a 2D plane above the table and push objects by touching them"
)
GRIPPER_SKILLS = (
    "move a suction gripper above the table, pick up the object under it at one waypoint "
    "and put the held object down at a later waypoint"
)

TABLE_GUIDELINE = (
    "the table is the unit square, x runs from 0 at the left edge to 1 at the right edge and "
    "y runs from 0 at the bottom edge to 1 at the top edge; all positions are (x, y) coordinates"
)
PUSH_GUIDELINE = (
    "blocks are squares of side 0.08 and the end-effector is a disc of radius 0.02; "
    "a block only moves when the end-effector or another block pushes one of its sides, "
    "and it then moves in the direction from that side toward the block center; "
    "a block pushed past the table edge falls off and the task fails; "
    "each control sequence has exactly {k} waypoints"
)
GRIPPER_GUIDELINE = (
    "at every waypoint the gripper toggles suction: holding nothing, it picks the object under it "
    "(the top ring of a peg, or a block); holding something, it puts it down there (on a peg, "
    "in a bowl or on the table); moving between waypoints picks or places nothing; rings may only "
    "go on a peg and never on a smaller ring; a waypoint away from every object, such as the home "
    "position (0.500, 0.050), does nothing; each control sequence has exactly {k} waypoints"
)


def default_guidelines(gripper: bool, k: int, extra: str = "") -> str:
    body = GRIPPER_GUIDELINE if gripper else PUSH_GUIDELINE
    text = f"{TABLE_GUIDELINE}; {body.format(k=k)}"
    return f"{text}; {extra}" if extra else text


def default_notes(k: int) -> list[str]:
    return [
        "You need to generate the above outputs with JSON format",
        f'put exactly {k} waypoints under the key "waypoints" as a list of [x, y] pairs',
        "every waypoint must lie inside the table",
    ]


# --- templates ------------------------------------------------------------------

_DIRECTIVES = [
    "1. output the consequences of potential actions;",
    "2. output the affordance values of each object parts considering the potential consequences;",
    "3. output the decomposed sub-tasks according to the consequences and affordance values.",
]
_NAIVE_DIRECTIVE = "1. output the decomposed sub-tasks."
_KEY_LINES = {
    "consequences": '- "consequences": an object mapping part letters to the expected effect of acting on that part',
    "affordance": '- "affordance": an object mapping part letters to affordance values between 0 and 1',
    "subtasks": '- "subtasks": a list of sub-task strings in execution order',
}


def _require(**slots: Any) -> None:
    for name, value in slots.items():
        if value is None or (isinstance(value, str) and not value.strip()):
            raise PromptError(f"missing prompt slot: {name}")


def _head(skills: str, guidelines: str, instruction: str, scene: SceneDescription, tabletop: bool) -> list[str]:
    where = "tabletop" if tabletop else "table"
    return [
        f"You are a robotic arm on the {where} which can {skills}.",
        f"You need to accomplish a series of robotic manipulation tasks: {guidelines}.",
        f"The task instruction is {instruction}.",
        "The objects on the table are:",
        scene.text,
    ]


def render_planner_prompt(
    skills: str, guidelines: str, instruction: str, scene: SceneDescription, naive: bool = False
) -> str:
    """Zero-shot sub-task planner prompt.

    With ``naive`` the consequence and affordance directives are dropped and
    only sub-tasks are requested.
    """
    _require(skills=skills, guidelines=guidelines, instruction=instruction)
    if scene is None or not scene.text.strip():
        raise PromptError("missing prompt slot: scene")
    lines = _head(skills, guidelines, instruction, scene, tabletop=False)
    lines.append("You need to:")
    if naive:
        lines.append(_NAIVE_DIRECTIVE)
        keys = ["subtasks"]
    else:
        lines.extend(_DIRECTIVES)
        keys = ["consequences", "affordance", "subtasks"]
    lines.append("Write the outputs as one JSON object inside a ```json fenced block with these keys:")
    lines.extend(_KEY_LINES[k] for k in keys)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class WorkedExample:
    scene: str
    instruction: str
    subtasks: tuple[str, ...]
    affordance: tuple[tuple[str, float], ...]
    waypoints: tuple[tuple[float, float], ...]

    def render(self, index: int, naive: bool, k: int) -> str:
        pts = resample_polyline(self.waypoints, k)
        out = [f"Example {index}:", f"Instruction: {self.instruction}", "Objects:", self.scene]
        out.append("Sub-tasks: " + "; ".join(self.subtasks))
        if not naive:
            out.append("Affordance values: " + json.dumps(dict(self.affordance)))
        out.append("Output:")
        out.append("```json\n" + json.dumps({"waypoints": [[round(x, 3), round(y, 3)] for x, y in pts]}) + "\n```")
        return "\n".join(out)


def resample_polyline(points: Sequence[tuple[float, float]], k: int) -> list[tuple[float, float]]:
    """``k`` points spaced evenly by arc length along a polyline, ending at its end."""
    if k == len(points):
        return list(points)
    lengths = [math.dist(points[i], points[i + 1]) for i in range(len(points) - 1)]
    total = sum(lengths)
    out = []
    for i in range(1, k + 1):
        s = total * i / k
        j = 0
        while j < len(lengths) - 1 and s > lengths[j]:
            s -= lengths[j]
            j += 1
        f = s / lengths[j] if lengths[j] > 0 else 1.0
        (x0, y0), (x1, y1) = points[j], points[j + 1]
        out.append((x0 + (x1 - x0) * f, y0 + (y1 - y0) * f))
    return out


PUSH_EXAMPLES = (
    WorkedExample(
        scene=(
            "The end-effector is at (0.300, 0.300).\n"
            "yellow block at (0.300, 0.500) with bounding box (0.260, 0.460) to (0.340, 0.540):\n"
            "  side A (bottom) at (0.300, 0.460)\n  side B (top) at (0.300, 0.540)\n"
            "  side C (left) at (0.260, 0.500)\n  side D (right) at (0.340, 0.500)"
        ),
        instruction="push the yellow block to the top",
        subtasks=("approach side A of the yellow block", "push the yellow block toward the top"),
        affordance=(("A", 0.9), ("B", 0.1), ("C", 0.3), ("D", 0.3)),
        waypoints=((0.3, 0.38), (0.3, 0.41), (0.3, 0.44), (0.3, 0.47), (0.3, 0.5)),
    ),
    WorkedExample(
        scene=(
            "The end-effector is at (0.600, 0.700).\n"
            "blue block at (0.600, 0.600) with bounding box (0.560, 0.560) to (0.640, 0.640):\n"
            "  side A (bottom) at (0.600, 0.560)\n  side B (top) at (0.600, 0.640)\n"
            "  side C (left) at (0.560, 0.600)\n  side D (right) at (0.640, 0.600)"
        ),
        instruction="push the blue block to the left side of the table",
        subtasks=(
            "detour around the blue block to reach side D of the blue block",
            "approach side D of the blue block",
            "push the blue block toward the left side of the table",
        ),
        affordance=(("A", 0.3), ("B", 0.3), ("C", 0.1), ("D", 0.9)),
        waypoints=((0.67, 0.67), (0.67, 0.6), (0.62, 0.6), (0.57, 0.6), (0.52, 0.6)),
    ),
)

GRIPPER_EXAMPLES = (
    WorkedExample(
        scene=(
            "The suction gripper is at (0.500, 0.050) and is holding nothing.\n"
            "peg 1 (peg) at (0.250, 0.600), part A; holds from bottom to top: green ring, blue ring\n"
            "green ring (ring) at (0.250, 0.600), part B; size 2, on peg 1 at level 1 from the bottom\n"
            "blue ring (ring) at (0.250, 0.600), part C; size 1, on peg 1 at level 2 from the bottom\n"
            "peg 2 (peg) at (0.500, 0.600), part D; holds from bottom to top: nothing\n"
            "peg 3 (peg) at (0.750, 0.600), part E; holds from bottom to top: nothing"
        ),
        instruction="move both rings onto peg 3",
        subtasks=(
            "pick the blue ring from peg 1 and place it on peg 2",
            "pick the green ring from peg 1 and place it on peg 3",
            "pick the blue ring from peg 2 and place it on peg 3",
        ),
        affordance=(("A", 0.3), ("B", 0.1), ("C", 0.9), ("D", 0.9), ("E", 0.3)),
        waypoints=((0.25, 0.6), (0.5, 0.6), (0.25, 0.6), (0.75, 0.6), (0.5, 0.05)),
    ),
    WorkedExample(
        scene=(
            "The suction gripper is at (0.500, 0.050) and is holding nothing.\n"
            "red block 1 (block) at (0.300, 0.300), part A\n"
            "green bowl 1 (bowl) at (0.700, 0.500), part B"
        ),
        instruction="put the red blocks in the green bowls",
        subtasks=("pick the red block 1 and place it in the green bowl 1",),
        affordance=(("A", 0.9), ("B", 0.9)),
        waypoints=((0.3, 0.3), (0.7, 0.5), (0.5, 0.05), (0.5, 0.05), (0.5, 0.05)),
    ),
)


def render_controller_prompt(
    skills: str,
    guidelines: str,
    instruction: str,
    scene: SceneDescription,
    planner_out: Optional[PlannerOutput],
    notes: Sequence[str],
    examples: Sequence[WorkedExample],
    k: int = 5,
    naive: bool = False,
) -> str:
    """Two-shot motion controller prompt."""
    _require(skills=skills, guidelines=guidelines, instruction=instruction)
    if planner_out is None:
        raise PromptError("missing prompt slot: planner output")
    if scene is None or not scene.text.strip():
        raise PromptError("missing prompt slot: scene")
    if len(examples) != 2:
        raise PromptError(f"exactly two examples are required, got {len(examples)}")
    lines = _head(skills, guidelines, instruction, scene, tabletop=True)
    lines.append("The decomposed sub-tasks are:")
    lines.extend(f"{i}. {s}" for i, s in enumerate(planner_out.subtasks, 1))
    if naive:
        lines.append("Given the decomposed sub-tasks, you need to output the control sequence.")
    else:
        lines.append("The affordance values are: " + json.dumps(planner_out.affordance))
        lines.append(
            "Given the decomposed sub-tasks and the affordance values, you need to output the control sequence."
        )
    notes = [n for n in notes if n.strip()]
    if notes:
        lines.append("Note that " + "; ".join(notes) + ".")
    lines.append("The examples are as follows:")
    for i, ex in enumerate(examples, 1):
        lines.append(ex.render(i, naive, k))
    return "\n".join(lines) + "\n"


# --- parsing ---------------------------------------------------------------------

_FENCE = re.compile(r"```[ \t]*([A-Za-z0-9_-]*)[ \t]*\n?(.*?)```", re.S)
_TRAILING_COMMA = re.compile(r",\s*([}\]])")


def _loads_lenient(s: str) -> Any:
    s = s.strip()
    try:
        return json.loads(s)
    except (ValueError, RecursionError):
        pass
    cleaned = _TRAILING_COMMA.sub(r"\1", s)
    try:
        return json.loads(cleaned)
    except (ValueError, RecursionError):
        pass
    try:
        return ast.literal_eval(cleaned)
    except (ValueError, SyntaxError, TypeError, MemoryError, RecursionError):
        return None


def extract_json_objects(text: str) -> list[dict]:
    """JSON objects found in fenced blocks first, then inline in the prose."""
    if not isinstance(text, str):
        return []
    text = text[:MAX_RESPONSE_CHARS]
    found: list[dict] = []
    for m in _FENCE.finditer(text):
        obj = _loads_lenient(m.group(2))
        if isinstance(obj, dict):
            found.append(obj)
    decoder = json.JSONDecoder()
    starts = [i for i, ch in enumerate(text) if ch == "{"][:256]
    end = -1
    for i in starts:
        if i < end:
            continue
        try:
            obj, j = decoder.raw_decode(text, i)
        except (ValueError, RecursionError):
            continue
        if isinstance(obj, dict):
            found.append(obj)
            end = j
    if not found and starts:
        # last resort: python-style literals such as single-quoted keys
        close = text.rfind("}")
        if close > starts[0]:
            obj = _loads_lenient(text[starts[0] : close + 1])
            if isinstance(obj, dict):
                found.append(obj)
    return found


def _pick_object(text: str, keys: Sequence[str]) -> Optional[dict]:
    best, best_score = None, 0
    for obj in extract_json_objects(text):
        score = sum(1 for k in keys if k in obj)
        if score > best_score:
            best, best_score = obj, score
    return best


def _number(v: Any) -> Optional[float]:
    if isinstance(v, bool):
        return None
    if isinstance(v, (int, float)):
        f = float(v)
    elif isinstance(v, str):
        try:
            f = float(v.strip())
        except ValueError:
            return None
    else:
        return None
    return f if math.isfinite(f) else None


_LETTER = re.compile(r"^(?:(?:side|part)\s+)?([A-Za-z]{1,2})$", re.I)


def _letter(key: Any) -> Optional[str]:
    m = _LETTER.match(str(key).strip())
    return m.group(1).upper() if m else None


def parse_planner_response(text: str, scene: SceneDescription, require_affordance: bool = True) -> PlannerOutput:
    obj = _pick_object(text, ("affordance", "subtasks", "consequences"))
    if obj is None:
        raise ParseError("no JSON object with planner fields")
    warnings: list[str] = []

    raw_aff = obj.get("affordance", {})
    if isinstance(raw_aff, list):
        pairs = []
        for item in raw_aff:
            if isinstance(item, dict):
                pairs.append((str(item.get("part", item.get("side"))), item.get("value")))
        raw_aff = dict(pairs)
    affordance: dict[str, float] = {}
    if isinstance(raw_aff, dict):
        for key, value in raw_aff.items():
            letter = _letter(key)
            num = _number(value)
            if letter is None or num is None:
                warnings.append(f"unreadable affordance entry {key!r}: {value!r}")
                continue
            if letter not in scene.part_index:
                warnings.append(f"unknown part letter {letter!r} dropped")
                continue
            affordance[letter] = min(1.0, max(0.0, num))
    if require_affordance and not affordance:
        raise ParseError("no parseable affordance map")

    raw_sub = obj.get("subtasks")
    if isinstance(raw_sub, str):
        raw_sub = [raw_sub]
    subtasks = []
    if isinstance(raw_sub, list):
        for s in raw_sub:
            if isinstance(s, dict):
                s = s.get("subtask") or s.get("description") or json.dumps(s)
            if isinstance(s, (str, int, float)) and str(s).strip():
                subtasks.append(str(s).strip())
    if not subtasks:
        raise ParseError("empty sub-task list")

    raw_cons = obj.get("consequences", {})
    if isinstance(raw_cons, dict):
        consequences = {str(k): str(v) for k, v in raw_cons.items()}
    elif isinstance(raw_cons, list):
        consequences = {str(i): str(v) for i, v in enumerate(raw_cons)}
    elif raw_cons:
        consequences = {"all": str(raw_cons)}
    else:
        consequences = {}
    for w in warnings:
        log.warning("planner response: %s", w)
    return PlannerOutput(consequences, affordance, subtasks, warnings)


def _pair(item: Any) -> Optional[Point2]:
    if isinstance(item, dict):
        x, y = _number(item.get("x")), _number(item.get("y"))
    elif isinstance(item, (list, tuple)) and len(item) == 2:
        x, y = _number(item[0]), _number(item[1])
    else:
        return None
    if x is None or y is None:
        return None
    return Point2(x, y)


def parse_controller_response(text: str, k: int) -> ControlSequence:
    if k < 1:
        raise ValueError("k must be at least 1")
    obj = _pick_object(text, ("waypoints",))
    if obj is None or "waypoints" not in obj:
        raise ParseError("no waypoints field")
    raw = obj["waypoints"]
    if not isinstance(raw, list) or not raw:
        raise ParseError("waypoints must be a non-empty list")
    points = []
    for item in raw:
        p = _pair(item)
        if p is None:
            raise ParseError(f"non-numeric waypoint {item!r}")
        points.append(p)
    if len(points) < k:
        raise ParseError(f"expected {k} waypoints, got {len(points)}")
    warnings = []
    if len(points) > k:
        warnings.append(f"{len(points)} waypoints truncated to {k}")
        log.warning("controller response: %s", warnings[-1])
    return ControlSequence(tuple(points[:k]), warnings)


def wrap_response(payload: dict, preamble: str = "") -> str:
    """Serialize a structured output the way the oracle backend answers."""
    body = "```json\n" + json.dumps(payload, indent=2) + "\n```"
    return f"{preamble}\n{body}\n" if preamble else body + "\n"


# --- baseline prompts ---------------------------------------------------------------

ACTIONS = ("Move Up", "Move Down", "Move Left", "Move Right")
CODE_CALLS = ("move_up", "move_down", "move_left", "move_right")

_PRIMITIVE_EXAMPLES = """Example 1:
The robot is at (0.300, 0.400).
yellow block: (0.260, 0.460) to (0.340, 0.540)
Instruction: push the yellow block to the top
Thought: the robot is below the yellow block, so moving up pushes it toward the top.
Action: Move Up
Example 2:
The robot is at (0.700, 0.500).
blue block: (0.560, 0.460) to (0.640, 0.540)
Instruction: push the blue block to the left side of the table
Thought: the robot is right of the blue block, so moving left pushes it to the left.
Action: Move Left"""

_CODE_EXAMPLES = """Example 1:
The robot is at (0.300, 0.400).
yellow block: (0.260, 0.460) to (0.340, 0.540)
Instruction: push the yellow block to the top
```python
for i in range(4):
    move_up()
```
Example 2:
The robot is at (0.700, 0.500).
blue block: (0.560, 0.460) to (0.640, 0.540)
Instruction: push the blue block to the left side of the table
```python
for i in range(5):
    move_left()
```"""


def _box_lines(detections) -> list[str]:
    lines = []
    for d in detections:
        if d.detected:
            lo, hi = d.box
            lines.append(f"{d.label}: ({lo.x:.3f}, {lo.y:.3f}) to ({hi.x:.3f}, {hi.y:.3f})")
    return lines or ["no blocks detected"]


def render_primitive_prompt(guidelines: str, instruction: str, robot: Point2, detections, step: float) -> str:
    """ReAct-style prompt: reason, then pick one of four axis moves."""
    _require(guidelines=guidelines, instruction=instruction)
    lines = [
        f"You are a robotic arm on the table which can {PUSH_SKILLS}.",
        f"You need to accomplish a series of robotic manipulation tasks: {guidelines}.",
        f"Available actions: {', '.join(ACTIONS)}; each moves the robot by {step:.3f}.",
        "Answer with one line 'Thought: ...' followed by one line 'Action: <action>'.",
        "The examples are as follows:",
        _PRIMITIVE_EXAMPLES,
        "Now the current case:",
        f"The robot is at ({robot.x:.3f}, {robot.y:.3f}).",
        *_box_lines(detections),
        f"Instruction: {instruction}",
    ]
    return "\n".join(lines) + "\n"


def render_code_prompt(guidelines: str, instruction: str, robot: Point2, detections, step: float) -> str:
    """Code-as-policies-style prompt restricted to the four move calls."""
    _require(guidelines=guidelines, instruction=instruction)
    lines = [
        f"You are a robotic arm on the table which can {PUSH_SKILLS}.",
        f"You need to accomplish a series of robotic manipulation tasks: {guidelines}.",
        f"Write a short Python program using only the calls {', '.join(c + '()' for c in CODE_CALLS)}; "
        f"each call moves the robot by {step:.3f}. 'for' loops over range(n) are allowed.",
        "The examples are as follows:",
        _CODE_EXAMPLES,
        "Now the current case:",
        f"The robot is at ({robot.x:.3f}, {robot.y:.3f}).",
        *_box_lines(detections),
        f"Instruction: {instruction}",
    ]
    return "\n".join(lines) + "\n"


_ACTION_LINE = re.compile(r"action\s*:\s*(.+)", re.I)
_ACTION_ANY = re.compile(r"move\s*[_ ]?\s*(up|down|left|right)", re.I)


def parse_primitive_action(text: str) -> str:
    """One of ``ACTIONS`` from a ReAct-style reply."""
    if not isinstance(text, str):
        raise ParseError("response is not text")
    text = text[:MAX_RESPONSE_CHARS]
    lines = _ACTION_LINE.findall(text)
    scope = lines[-1] if lines else text
    found = {m.lower() for m in _ACTION_ANY.findall(scope)}
    if len(found) != 1:
        raise ParseError(f"expected exactly one of {ACTIONS}, found {sorted(found) or 'none'}")
    return "Move " + found.pop().capitalize()
