"""Scripted geometric oracle that answers prompts like a language model.

The oracle sees only the prompt text. It reads the instruction, guidelines
and object-parts listing, works out the plan geometrically, and replies with
prose plus a fenced JSON object in the same schema a remote model must use.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Optional

from ..perception import NoiseConfig, ParsedScene, describe, detect, parse_scene
from ..prompting import CODE_CALLS, ControlSequence, PlannerOutput, wrap_response
from ..simulator import step_to_waypoint
from ..world import (
    DEFAULT_EFFECTOR_RADIUS,
    OUTWARD_NORMALS,
    PUSH_SIDES,
    RING_COLORS,
    Block,
    EndEffector,
    Point2,
    Side,
    WorldState,
    off_table,
)
from .base import CompletionRequest
from .pathing import inside, on_table, plan_path, segment_hits_box

log = logging.getLogger(__name__)

MARGIN = 0.01
MAX_PUSH = 0.15
HIGH, HELPFUL, PERPENDICULAR, LOW = 0.9, 0.5, 0.3, 0.1
PARTNER_SCALE = 0.5
B2B_OVERLAP = 0.005
HOME = Point2(0.5, 0.05)
COLORS = ("red", "green", "blue", "yellow", "purple")

LOCATION_WORDS = {"top": 0.85, "upper": 0.85, "bottom": 0.15, "lower": 0.15}
SIDE_WORDS = {"left": 0.15, "right": 0.85}
DIRECTION_WORDS = {
    Side.BOTTOM: "up",
    Side.TOP: "down",
    Side.LEFT: "right",
    Side.RIGHT: "left",
}


class OracleError(ValueError):
    """The oracle cannot resolve the instruction or find a feasible plan."""


@dataclass
class TaskSemantics:
    kind: str
    block: str = ""
    other: str = ""
    goal: Optional[Point2] = None
    goal_name: str = ""
    goal_peg: int = 3
    n_rings: int = 3
    block_color: str = ""
    bowl_color: str = ""


def parse_instruction(instruction: str, guidelines: str = "") -> TaskSemantics:
    text = instruction.lower()
    g = guidelines.lower()
    if "hanoi" in text or "ring" in text:
        m = re.search(r"goal peg is peg (\d)", g) or re.search(r"peg (\d)", text)
        rings = re.search(r"there are (\d+) rings", g)
        return TaskSemantics(
            "hanoi", goal_peg=int(m[1]) if m else 3, n_rings=int(rings[1]) if rings else 3
        )
    if "bowl" in text:
        bc = re.search(r"\b(" + "|".join(COLORS) + r")\s+blocks?\b", text)
        wc = re.search(r"\b(" + "|".join(COLORS) + r")\s+bowls?\b", text)
        if not bc or not wc:
            raise OracleError(f"cannot resolve colors in {instruction!r}")
        return TaskSemantics("bowl", block_color=bc[1], bowl_color=wc[1])
    named = re.findall(r"\b(" + "|".join(COLORS) + r")\s+block\b", text)
    if any(w in text for w in ("separate", "apart", "away from")):
        if len(named) < 2:
            raise OracleError(f"separation needs two blocks: {instruction!r}")
        return TaskSemantics("sep", block=f"{named[0]} block", other=f"{named[1]} block")
    if len(named) >= 2:
        return TaskSemantics("b2b", block=f"{named[0]} block", other=f"{named[1]} block")
    # block-to-position: read the location phrase after the block mention
    tail = text.split("block", 1)[-1]
    y = next((v for w, v in LOCATION_WORDS.items() if re.search(rf"\b{w}\b", tail)), None)
    x = next((v for w, v in SIDE_WORDS.items() if re.search(rf"\b{w}\b", tail)), None)
    if x is None and y is None:
        raise OracleError(f"cannot resolve a target location in {instruction!r}")
    goal = Point2(0.5 if x is None else x, 0.5 if y is None else y)
    name = re.sub(r"^\s*(to|toward|towards|over to)\s+(the\s+)?", "", tail).strip(" .")
    name = re.sub(r"\s+of the (table|board)$", "", name)
    return TaskSemantics("b2p", block=f"{named[0]} block" if named else "", goal=goal, goal_name=name)


# --- scene geometry ------------------------------------------------------------------


@dataclass
class SceneModel:
    effector: Point2
    radius: float
    blocks: dict[str, Block]
    letters: dict[tuple[str, Side], str]
    parsed: ParsedScene = field(default_factory=ParsedScene)

    @classmethod
    def from_parsed(cls, scene: ParsedScene, radius: float = DEFAULT_EFFECTOR_RADIUS) -> SceneModel:
        blocks = {}
        for o in scene.objects:
            if o.kind == "block" and o.box is not None:
                blocks[o.label] = Block(o.label, o.label.split()[0], o.center, max(o.half_extent, 1e-3))
        letters = {(owner, side): letter for letter, (owner, side, _) in scene.parts.items()}
        return cls(scene.effector or HOME, radius, blocks, letters, scene)

    def obstacles(self) -> list[tuple[float, float, float]]:
        return [(b.center.x, b.center.y, b.half_extent + self.radius) for b in self.blocks.values()]

    def world(self, effector: Point2) -> WorldState:
        return WorldState(tuple(self.blocks.values()), EndEffector(effector, self.radius))


def _resolve_block(sem: TaskSemantics, scene: SceneModel) -> None:
    if not sem.block and len(scene.blocks) == 1:
        sem.block = next(iter(scene.blocks))


def _contact_target(mover: Block, other: Block) -> Point2:
    d = other.center - mover.center
    s = mover.half_extent + other.half_extent - B2B_OVERLAP
    if abs(d.x) >= abs(d.y):
        return Point2(other.center.x - math.copysign(s, d.x), other.center.y)
    return Point2(other.center.x, other.center.y - math.copysign(s, d.y))


def goal_vector(sem: TaskSemantics, scene: SceneModel, label: str) -> Optional[Point2]:
    """Desired displacement of block ``label``, or None if it should not move."""
    blocks = scene.blocks
    if label not in blocks:
        return None
    b = blocks[label]
    if sem.kind == "b2p" and label == sem.block and sem.goal is not None:
        return sem.goal - b.center
    if sem.kind == "b2b" and label == sem.block and sem.other in blocks:
        return _contact_target(b, blocks[sem.other]) - b.center
    if sem.kind == "sep" and sem.block in blocks and sem.other in blocks:
        if label == sem.block:
            return b.center - blocks[sem.other].center
        if label == sem.other:
            return b.center - blocks[sem.block].center
    return None


def side_values(g: Point2) -> dict[Side, float]:
    """0.9 for the side whose outward normal most opposes ``g`` and 0.1 for
    its opposite. Of the two perpendicular sides, one that still makes
    progress toward ``g`` scores 0.5, otherwise 0.3."""
    dots = {s: OUTWARD_NORMALS[s].dot(g) for s in PUSH_SIDES}
    best = min(PUSH_SIDES, key=lambda s: (dots[s], PUSH_SIDES.index(s)))
    out = {s: (HELPFUL if dots[s] < -1e-9 else PERPENDICULAR) for s in PUSH_SIDES}
    out[best] = HIGH
    out[_opposite(best)] = LOW
    return out


def _opposite(side: Side) -> Side:
    return {Side.BOTTOM: Side.TOP, Side.TOP: Side.BOTTOM, Side.LEFT: Side.RIGHT, Side.RIGHT: Side.LEFT}[side]


def approach_point(block: Block, side: Side, radius: float) -> Point2:
    n = OUTWARD_NORMALS[side]
    return block.center + n.scale(block.half_extent + radius + MARGIN)


def push_distance(sem: TaskSemantics, scene: SceneModel, label: str, side: Side) -> float:
    """How far the block should travel this round when pushed on ``side``."""
    g = goal_vector(sem, scene, label)
    if sem.kind == "sep" or g is None:
        return MAX_PUSH
    along = g.dot(OUTWARD_NORMALS[side].scale(-1.0))
    if along <= 0:
        return MAX_PUSH
    return max(along, 0.01)


def _in_corridor(scene: SceneModel, block: Block, side: Side) -> Optional[float]:
    """Gap to the side when the effector already sits squarely behind it."""
    n = OUTWARD_NORMALS[side]
    rel = scene.effector - block.center
    along = rel.dot(n)
    lateral = abs(rel.x * n.y - rel.y * n.x)
    contact = block.half_extent + scene.radius
    if lateral <= 0.5 * block.half_extent and contact - 0.003 <= along <= contact + MARGIN + 0.003:
        return along - contact
    return None


def push_waypoints(
    sem: TaskSemantics, scene: SceneModel, label: str, side: Side, k: int
) -> list[Point2]:
    block = scene.blocks[label]
    pdir = OUTWARD_NORMALS[side].scale(-1.0)
    gap = _in_corridor(scene, block, side)
    if gap is not None:
        path: list[Point2] = []
        start = scene.effector
    else:
        start = approach_point(block, side, scene.radius)
        found = plan_path(scene.effector, start, scene.obstacles(), MARGIN)
        if found is None:
            raise OracleError(f"no collision-free approach to side {side.value} of the {label}")
        path, gap = found, MARGIN
    length = min(MAX_PUSH, max(gap, 0.0) + push_distance(sem, scene, label, side))
    end = (start + pdir.scale(length)).clamped()
    if len(path) + 1 >= k:
        return (path + [end])[:k]
    m = k - len(path)
    return path + [start + (end - start).scale(i / m) for i in range(1, m + 1)]


def _hazard(sem: TaskSemantics, scene: SceneModel, label: str, side: Side) -> Optional[str]:
    """Why pushing ``side`` of ``label`` is unsafe or infeasible, if it is."""
    block = scene.blocks[label]
    start = approach_point(block, side, scene.radius)
    gap = _in_corridor(scene, block, side)
    if gap is not None:
        start = scene.effector
    elif not on_table(start):
        return "the approach point is off the table"
    elif plan_path(scene.effector, start, scene.obstacles(), MARGIN) is None:
        return "no collision-free approach exists"
    pdir = OUTWARD_NORMALS[side].scale(-1.0)
    length = min(MAX_PUSH, MARGIN + push_distance(sem, scene, label, side))
    out = step_to_waypoint(scene.world(start), start + pdir.scale(length))
    fallen = [b.id for b in out.new_state.blocks if off_table(b)]
    if fallen:
        return f"this would push the {', '.join(fallen)} off the table"
    return None


@dataclass
class PushChoice:
    block: str
    side: Side
    letter: str
    output: PlannerOutput
    detour: bool = False


def _goal_phrase(sem: TaskSemantics) -> str:
    if sem.kind == "b2p" and sem.goal is not None:
        return f"toward the {sem.goal_name or 'target'} ({sem.goal.x:.3f}, {sem.goal.y:.3f})"
    if sem.kind == "b2b":
        return f"toward the {sem.other}"
    return f"away from the {sem.other}"


def plan_push(sem: TaskSemantics, scene: SceneModel, naive: bool = False) -> PushChoice:
    _resolve_block(sem, scene)
    if sem.block not in scene.blocks:
        raise OracleError(f"the {sem.block or 'target block'} is not in the scene")
    if sem.kind in ("b2b", "sep") and sem.other not in scene.blocks:
        raise OracleError(f"the {sem.other} is not in the scene")

    movers = [sem.block] + ([sem.other] if sem.kind == "sep" else [])
    values: dict[tuple[str, Side], float] = {}
    for label in movers:
        g = goal_vector(sem, scene, label)
        scale = 1.0 if label == sem.block else PARTNER_SCALE
        base = side_values(g) if g is not None and g.norm() > 1e-9 else {s: PERPENDICULAR for s in PUSH_SIDES}
        for s in PUSH_SIDES:
            values[(label, s)] = base[s] * scale

    consequences: dict[str, str] = {}
    chosen: Optional[tuple[str, Side]] = None
    if naive:
        block = scene.blocks[sem.block]
        chosen = min(
            PUSH_SIDES,
            key=lambda s: (scene.effector.dist(block.center + OUTWARD_NORMALS[s].scale(block.half_extent)), s.value),
        )
        chosen = (sem.block, chosen)
    else:
        order = sorted(values, key=lambda key: (-values[key], movers.index(key[0]), PUSH_SIDES.index(key[1])))
        for label, side in order:
            why = _hazard(sem, scene, label, side)
            letter = scene.letters.get((label, side))
            if why is None:
                chosen = (label, side)
                break
            values[(label, side)] = 0.0
            if letter:
                consequences[letter] = f"pushing side {letter} moves the {label} {DIRECTION_WORDS[side]}, but {why}"
        if chosen is None:
            raise OracleError("every side is unsafe or unreachable")

    label, side = chosen
    letter = scene.letters.get(chosen)
    if letter is None:
        raise OracleError(f"side {side.value} of the {label} has no part letter")

    affordance: dict[str, float] = {}
    if not naive:
        for (owner, s), ch in sorted(scene.letters.items(), key=lambda kv: _letter_key(kv[1])):
            affordance[ch] = values.get((owner, s), 0.0)
        for owner in movers:
            g = goal_vector(sem, scene, owner)
            for s in PUSH_SIDES:
                ch = scene.letters.get((owner, s))
                if ch is None or ch in consequences:
                    continue
                pdir = OUTWARD_NORMALS[s].scale(-1.0)
                effect = "sideways"
                if g is not None and g.norm() > 1e-9:
                    cos = pdir.dot(g) / g.norm()
                    effect = "toward the goal" if cos > 0.5 else "away from the goal" if cos < -0.5 else "sideways"
                consequences[ch] = f"pushing side {ch} moves the {owner} {DIRECTION_WORDS[s]}, {effect}"
        consequences = dict(sorted(consequences.items(), key=lambda kv: _letter_key(kv[0])))

    detour = False
    if _in_corridor(scene, scene.blocks[label], side) is None:
        target = approach_point(scene.blocks[label], side, scene.radius)
        check = [(x, y, hw + MARGIN / 2) for x, y, hw in scene.obstacles()]
        detour = any(segment_hits_box(scene.effector, target, b) for b in check if not inside(scene.effector, b))
    subtasks = []
    if detour:
        subtasks.append(f"detour around the blocks to reach side {letter} of the {label}")
    subtasks.append(f"approach side {letter} of the {label}")
    subtasks.append(f"push the {label} {_goal_phrase(sem)}")
    return PushChoice(label, side, letter, PlannerOutput(consequences, affordance, subtasks), detour)


def _letter_key(letter: str) -> tuple[int, str]:
    return (len(letter), letter)


# --- pick and place ---------------------------------------------------------------------


def hanoi_moves(positions: dict[int, int], n: int, goal: int) -> list[tuple[int, int, int]]:
    """Moves (ring, from peg, to peg) that gather rings 1..n on ``goal``."""
    pos = dict(positions)
    moves: list[tuple[int, int, int]] = []

    def gather(k: int, target: int) -> None:
        if k == 0:
            return
        src = pos[k]
        if src == target:
            gather(k - 1, target)
            return
        spare = 6 - src - target
        gather(k - 1, spare)
        moves.append((k, src, target))
        pos[k] = target
        gather(k - 1, target)

    gather(n, goal)
    return moves


def _ring_color(size: int) -> str:
    return RING_COLORS.get(size, f"size-{size}")


def plan_hanoi(sem: TaskSemantics, scene: ParsedScene) -> PlannerOutput:
    rings = [o for o in scene.objects if o.kind == "ring"]
    pegs = {o.peg: o for o in scene.objects if o.kind == "peg"}
    letters = {o.label: next(iter(o.parts)) for o in scene.objects}
    wait = PlannerOutput(
        {"all": "some rings or pegs are not visible, acting now could break the stacking rule"},
        {ch: 0.0 for ch in sorted(scene.parts, key=_letter_key)},
        ["wait at the home position and observe the scene again"],
    )
    if scene.held is not None or len(rings) != sem.n_rings or len(pegs) != 3:
        return wait
    positions = {o.size: o.peg for o in rings}
    if set(positions) != set(range(1, sem.n_rings + 1)):
        return wait
    moves = hanoi_moves(positions, sem.n_rings, sem.goal_peg)
    tops = {}
    for o in rings:
        if o.peg not in tops or o.level > tops[o.peg].level:
            tops[o.peg] = o
    affordance: dict[str, float] = {}
    consequences: dict[str, str] = {}
    first = moves[0] if moves else None
    for o in sorted(scene.objects, key=lambda o: _letter_key(letters[o.label])):
        ch = letters[o.label]
        if o.kind == "ring":
            movable = tops.get(o.peg) is o
            v = HIGH if first and o.size == first[0] else PERPENDICULAR if movable else LOW
            consequences[ch] = (
                f"the {o.label} is on top of peg {o.peg} and can be picked"
                if movable
                else f"the {o.label} is buried on peg {o.peg} and cannot be picked"
            )
        else:
            top = tops.get(o.peg)
            legal = first is not None and (top is None or top.size > first[0]) and o.peg != positions.get(first[0])
            v = HIGH if first and o.peg == first[2] else PERPENDICULAR if legal else LOW
            consequences[ch] = f"placing on peg {o.peg} is {'legal' if legal or v == HIGH else 'not legal'} for the next ring"
        affordance[ch] = v
    subtasks = [
        f"pick the {_ring_color(r)} ring from peg {a} and place it on peg {b}" for r, a, b in moves
    ] or ["the tower is complete, stay at the home position"]
    return PlannerOutput(consequences, affordance, subtasks)


def plan_bowls(sem: TaskSemantics, scene: ParsedScene, radius: float = 0.05) -> PlannerOutput:
    blocks = [o for o in scene.objects if o.kind == "block"]
    bowls = [o for o in scene.objects if o.kind == "bowl" and o.label.startswith(sem.bowl_color + " ")]
    letters = {o.label: next(iter(o.parts)) for o in scene.objects}
    if not bowls or scene.held is not None:
        return PlannerOutput(
            {"all": "no usable bowl is visible or something is already held"},
            {ch: 0.0 for ch in sorted(scene.parts, key=_letter_key)},
            ["wait at the home position and observe the scene again"],
        )
    pending = [
        b
        for b in blocks
        if b.label.startswith(sem.block_color + " ")
        and not any(b.center.dist(w.center) <= radius for w in bowls)
    ]
    load = {w.label: sum(1 for b in blocks if b.center.dist(w.center) <= radius) for w in bowls}
    subtasks = []
    targets = []
    for b in pending:
        bowl = min(bowls, key=lambda w: (load[w.label], b.center.dist(w.center), w.label))
        load[bowl.label] += 1
        targets.append(bowl.label)
        subtasks.append(f"pick the {b.label} and place it in the {bowl.label}")
    pending_labels = {b.label for b in pending}
    affordance, consequences = {}, {}
    for o in sorted(scene.objects, key=lambda o: _letter_key(letters[o.label])):
        ch = letters[o.label]
        if o.kind == "block":
            v = HIGH if o.label in pending_labels else LOW if o.label.startswith(sem.block_color + " ") else 0.0
            consequences[ch] = f"picking the {o.label} " + (
                "moves a target block toward a bowl" if v == HIGH else "does not help the task"
            )
        else:
            v = HIGH if targets and o.label == targets[0] else PERPENDICULAR if o in bowls else 0.0
            consequences[ch] = f"placing in the {o.label} " + (
                "puts a target block in a correct bowl" if o in bowls else "puts a block in a wrong bowl"
            )
        affordance[ch] = v
    if not subtasks:
        subtasks = ["all target blocks are in bowls, stay at the home position"]
    return PlannerOutput(consequences, affordance, subtasks)


_PICK_RING = re.compile(r"pick the (\w+) ring from peg (\d+) and place it on peg (\d+)")
_PICK_BLOCK = re.compile(r"pick the (.+?) and place it in the (.+?)$")


def gripper_waypoints(subtasks: list[str], scene: ParsedScene, k: int, home: Point2 = HOME) -> list[Point2]:
    pegs = {o.peg: o.center for o in scene.objects if o.kind == "peg"}
    by_label = {o.label: o.center for o in scene.objects}
    pts: list[Point2] = []
    for s in subtasks:
        if len(pts) + 2 > k:
            break
        m = _PICK_RING.search(s)
        if m and int(m[2]) in pegs and int(m[3]) in pegs:
            pts += [pegs[int(m[2])], pegs[int(m[3])]]
            continue
        m = _PICK_BLOCK.search(s)
        if m and m[1] in by_label and m[2] in by_label:
            pts += [by_label[m[1]], by_label[m[2]]]
    # an odd slot stays at home so nothing is picked up at the end of the round
    return pts + [home] * (k - len(pts))


# --- baselines ------------------------------------------------------------------------


_ROBOT = re.compile(r"The robot is at \((-?[\d.]+), (-?[\d.]+)\)")
_BOX = re.compile(r"^(.+? block): \((-?[\d.]+), (-?[\d.]+)\) to \((-?[\d.]+), (-?[\d.]+)\)$", re.M)
_STEP = re.compile(r"moves the robot by (\d+(?:\.\d+)?)")


def _current_case(prompt: str) -> str:
    return prompt.split("Now the current case:", 1)[-1]


def _greedy_scene(prompt: str) -> tuple[TaskSemantics, SceneModel, float]:
    case = _current_case(prompt)
    robot = _ROBOT.search(case)
    if robot is None:
        raise OracleError("robot position missing")
    blocks = {}
    for m in _BOX.finditer(case):
        lo = Point2(float(m[2]), float(m[3]))
        hi = Point2(float(m[4]), float(m[5]))
        c = Point2((lo.x + hi.x) / 2, (lo.y + hi.y) / 2)
        blocks[m[1]] = Block(m[1], m[1].split()[0], c, max(((hi.x - lo.x) + (hi.y - lo.y)) / 4, 1e-3))
    instr = re.search(r"^Instruction: (.*)$", case, re.M)
    if instr is None:
        raise OracleError("instruction missing")
    step = _STEP.search(prompt)
    sem = parse_instruction(instr[1])
    scene = SceneModel(Point2(float(robot[1]), float(robot[2])), DEFAULT_EFFECTOR_RADIUS, blocks, {})
    _resolve_block(sem, scene)
    return sem, scene, float(step[1]) if step else 0.05


def greedy_move(sem: TaskSemantics, scene: SceneModel, step: float) -> tuple[str, int]:
    """Move toward the block, then toward the goal; returns (direction, steps)."""
    if sem.block not in scene.blocks:
        # target not visible: drift toward the table center and look again
        d = Point2(0.5, 0.5) - scene.effector
        if abs(d.x) >= abs(d.y):
            return ("right" if d.x > 0 else "left"), 1
        return ("up" if d.y > 0 else "down"), 1
    b = scene.blocks[sem.block]
    d = b.center - scene.effector
    reach = b.half_extent + scene.radius
    if max(abs(d.x), abs(d.y)) > reach + step / 2:
        if abs(d.x) >= abs(d.y):
            gap = abs(d.x) - reach
            return ("right" if d.x > 0 else "left"), max(1, int(gap / step))
        gap = abs(d.y) - reach
        return ("up" if d.y > 0 else "down"), max(1, int(gap / step))
    g = goal_vector(sem, scene, sem.block) or Point2(0.0, 1.0)
    if abs(g.x) >= abs(g.y):
        return ("right" if g.x > 0 else "left"), max(1, min(6, round(abs(g.x) / step)))
    return ("up" if g.y > 0 else "down"), max(1, min(6, round(abs(g.y) / step)))


# --- the backend ------------------------------------------------------------------------


_INSTRUCTION = re.compile(r"^The task instruction is (.*)\.$", re.M)
_GUIDELINES = re.compile(r"^You need to accomplish a series of robotic manipulation tasks: (.*)\.$", re.M)
_K = re.compile(r"exactly (\d+) waypoints")
_RADIUS = re.compile(r"disc of radius ([\d.]+)")
_HOME = re.compile(r"home position \(([\d.]+), ([\d.]+)\)")
_SIDE_REF = re.compile(r"side ([A-Z]{1,2}) of the ")


def _scene_text(prompt: str) -> str:
    body = prompt.split("The objects on the table are:\n", 1)[-1]
    for stop in ("\nYou need to:", "\nThe decomposed sub-tasks are:"):
        body = body.split(stop, 1)[0]
    return body


def _subtasks(prompt: str) -> list[str]:
    body = prompt.split("The decomposed sub-tasks are:\n", 1)[-1]
    out = []
    for line in body.splitlines():
        m = re.match(r"^\d+\. (.*)$", line)
        if not m:
            break
        out.append(m[1])
    return out


def _affordance(prompt: str) -> dict[str, float]:
    m = re.search(r"^The affordance values are: (\{.*\})$", prompt, re.M)
    if not m:
        return {}
    try:
        return {str(k): float(v) for k, v in json.loads(m[1]).items()}
    except (ValueError, TypeError, AttributeError):
        return {}


def oracle_plan(prompt: str) -> PlannerOutput:
    """Planner output for a rendered planner prompt."""
    instruction = _INSTRUCTION.search(prompt)
    guidelines = _GUIDELINES.search(prompt)
    if not instruction:
        raise OracleError("no task instruction in prompt")
    sem = parse_instruction(instruction[1], guidelines[1] if guidelines else "")
    naive = "affordance values" not in prompt
    parsed = parse_scene(_scene_text(prompt))
    if sem.kind == "hanoi":
        out = plan_hanoi(sem, parsed)
    elif sem.kind == "bowl":
        out = plan_bowls(sem, parsed)
    else:
        radius = _RADIUS.search(prompt)
        scene = SceneModel.from_parsed(parsed, float(radius[1]) if radius else DEFAULT_EFFECTOR_RADIUS)
        try:
            out = plan_push(sem, scene, naive=naive).output
        except OracleError as exc:
            if parsed.parts and "not in the scene" in str(exc):
                out = PlannerOutput(
                    {"all": str(exc)},
                    {ch: 0.0 for ch in sorted(parsed.parts, key=_letter_key)},
                    ["wait and observe the scene again"],
                )
            else:
                raise
    if naive:
        out = PlannerOutput({}, {}, out.subtasks)
    return out


def oracle_control(prompt: str) -> ControlSequence:
    """Control sequence for a rendered controller prompt."""
    instruction = _INSTRUCTION.search(prompt)
    guidelines = _GUIDELINES.search(prompt)
    if not instruction:
        raise OracleError("no task instruction in prompt")
    ks = _K.findall(prompt.split("The examples are as follows:", 1)[0])
    k = int(ks[-1]) if ks else 5
    sem = parse_instruction(instruction[1], guidelines[1] if guidelines else "")
    parsed = parse_scene(_scene_text(prompt))
    subtasks = _subtasks(prompt)
    home_m = _HOME.search(prompt)
    home = Point2(float(home_m[1]), float(home_m[2])) if home_m else HOME
    if sem.kind in ("hanoi", "bowl"):
        return ControlSequence(tuple(gripper_waypoints(subtasks, parsed, k, home)))
    radius = _RADIUS.search(prompt)
    scene = SceneModel.from_parsed(parsed, float(radius[1]) if radius else DEFAULT_EFFECTOR_RADIUS)
    _resolve_block(sem, scene)
    letter = None
    for s in subtasks:
        m = _SIDE_REF.search(s)
        if m:
            letter = m[1]
            break
    if letter is None:
        aff = _affordance(prompt)
        letter = max(aff, key=lambda ch: (aff[ch], -_letter_key(ch)[0])) if aff and max(aff.values()) > 0 else None
    if letter is None or letter not in parsed.parts:
        # nothing to push this round: hold position
        return ControlSequence(tuple([scene.effector] * k))
    owner, side, _ = parsed.parts[letter]
    if owner not in scene.blocks or side is Side.CENTER:
        raise OracleError(f"part {letter} is not a block side")
    return ControlSequence(tuple(push_waypoints(sem, scene, owner, side, k)))


def semantics_from_params(kind: str, params) -> TaskSemantics:
    """Ground-truth task semantics, bypassing instruction parsing."""
    kind = getattr(kind, "value", kind)
    goal = Point2(*params.target_point) if params.target_point is not None else None
    return TaskSemantics(
        kind,
        block=params.target_block,
        other=params.other_block,
        goal=goal,
        goal_peg=params.goal_peg,
        n_rings=params.n_rings,
        block_color=params.block_color,
        bowl_color=params.bowl_color,
    )


def reference_push(sem: TaskSemantics, state: WorldState) -> Optional[PushChoice]:
    """The oracle's push choice on the noise-free view of ``state``."""
    if state.pickplace is not None:
        return None
    dets = detect(state, NoiseConfig.off())
    parsed = parse_scene(describe(dets, state.effector.center).text)
    scene = SceneModel.from_parsed(parsed, state.effector.radius)
    try:
        return plan_push(sem, scene)
    except OracleError:
        return None


def reference_pickplace(sem: TaskSemantics, state: WorldState, held: Optional[str]) -> PlannerOutput:
    """Noise-free pick-place plan, keyed by part letter of the clean scene."""
    dets = detect(state, NoiseConfig.off())
    parsed = parse_scene(describe(dets, state.effector.center, held, gripper=True).text)
    return plan_hanoi(sem, parsed) if sem.kind == "hanoi" else plan_bowls(sem, parsed)


class OracleBackend:
    """Deterministic stand-in for a chat model; pure and thread-safe."""

    name = "oracle"

    def describe(self) -> dict:
        return {"kind": "oracle"}

    def complete(self, request: CompletionRequest) -> str:
        prompt = request.user
        try:
            if "you need to output the control sequence" in prompt:
                seq = oracle_control(prompt)
                return wrap_response(seq.to_wire(), "Following the first sub-tasks, the control sequence is:")
            if "\nYou need to:\n" in prompt:
                out = oracle_plan(prompt)
                payload = out.to_wire() if "affordance values" in prompt else {"subtasks": out.subtasks}
                return wrap_response(payload, "Here is my analysis of the scene.")
            if "Available actions:" in prompt:
                sem, scene, step = _greedy_scene(prompt)
                direction, _ = greedy_move(sem, scene, step)
                return f"Thought: heading {direction} brings the {sem.block} closer to the goal.\nAction: Move {direction.capitalize()}\n"
            if "move_up()" in prompt:
                sem, scene, step = _greedy_scene(prompt)
                direction, n = greedy_move(sem, scene, step)
                call = CODE_CALLS[("up", "down", "left", "right").index(direction)]
                return f"```python\nfor i in range({n}):\n    {call}()\n```\n"
        except OracleError as exc:
            log.warning("oracle error: %s", exc)
            return f"I cannot produce a plan: {exc}"
        return "I do not recognize this request."

