"""Task catalog: seeded instance generators and success predicates.

Kinds:
    b2p   push a block to a named table location
    b2b   push one block until it touches another
    sep   push two nearby blocks apart
    hanoi three-ring Towers of Hanoi with a suction gripper
    bowl  put every block of one color into bowls of another color
"""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Optional

from .world import (
    DEFAULT_EFFECTOR_RADIUS,
    DEFAULT_HALF_EXTENT,
    RING_COLORS,
    Block,
    Bowl,
    EndEffector,
    LooseBlock,
    PickPlaceState,
    Point2,
    WorldState,
    off_table,
    square_gap,
    world_from_dict,
    world_to_dict,
)


class TaskKind(str, Enum):
    B2P = "b2p"
    B2B = "b2b"
    SEP = "sep"
    HANOI = "hanoi"
    BOWL = "bowl"

    @property
    def gripper(self) -> bool:
        return self in (TaskKind.HANOI, TaskKind.BOWL)


PUSH_KINDS = (TaskKind.B2P, TaskKind.B2B, TaskKind.SEP)

COLORS = ("red", "green", "blue", "yellow", "purple")

# named board locations for b2p targets
LOCATIONS = {
    "left center side": Point2(0.15, 0.5),
    "right center side": Point2(0.85, 0.5),
    "top center side": Point2(0.5, 0.85),
    "bottom center side": Point2(0.5, 0.15),
    "top left corner": Point2(0.15, 0.85),
    "top right corner": Point2(0.85, 0.85),
    "bottom left corner": Point2(0.15, 0.15),
    "bottom right corner": Point2(0.85, 0.15),
}

INSTRUCTIONS = {
    TaskKind.B2P: (
        "push the {a} block to the {loc} of the table",
        "move the {a} block to the {loc}",
        "slide the {a} block over to the {loc} of the board",
    ),
    TaskKind.B2B: (
        "push the {a} block to the {b} block",
        "move the {a} block next to the {b} block",
        "slide the {a} block until it touches the {b} block",
    ),
    TaskKind.SEP: (
        "separate the {a} block and the {b} block",
        "push the {a} block and the {b} block apart",
        "move the {a} block away from the {b} block",
    ),
    TaskKind.HANOI: (
        "solve towers of hanoi",
        "solve the three-ring towers of hanoi",
        "move the whole ring tower to the goal peg following the towers of hanoi rules",
    ),
    TaskKind.BOWL: (
        "place all the {a} blocks into the {b} bowls",
        "put every {a} block in a {b} bowl",
        "move the {a} blocks into {b} bowls",
    ),
}

INNER_MARGIN = 0.1
CLEARANCE = 0.01
HOME = Point2(0.5, 0.05)
N_RINGS = 3


@dataclass
class SuccessParams:
    target_block: str = ""
    other_block: str = ""
    target_point: Optional[tuple[float, float]] = None
    initial_distance: float = 0.0
    goal_peg: int = 3
    n_rings: int = N_RINGS
    block_color: str = ""
    bowl_color: str = ""
    radius: float = 0.08
    touch_gap: float = 0.01
    separation: float = 0.15
    bowl_radius: float = 0.05


@dataclass
class TaskInstance:
    kind: TaskKind
    seed: int
    initial: WorldState
    instruction: str
    params: SuccessParams
    context: str = ""  # task-specific guideline text
    relevant: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "seed": self.seed,
            "initial": world_to_dict(self.initial),
            "instruction": self.instruction,
            "params": asdict(self.params),
            "context": self.context,
            "relevant": list(self.relevant),
        }

    @classmethod
    def from_dict(cls, d: dict) -> TaskInstance:
        p = dict(d["params"])
        if p.get("target_point") is not None:
            p["target_point"] = tuple(p["target_point"])
        return cls(
            TaskKind(d["kind"]),
            d["seed"],
            world_from_dict(d["initial"]),
            d["instruction"],
            SuccessParams(**p),
            d.get("context", ""),
            list(d.get("relevant", [])),
        )


def _chebyshev(a: Point2, b: Point2) -> float:
    return max(abs(a.x - b.x), abs(a.y - b.y))


def _clear(c: Point2, placed: list[Point2], spacing: float) -> bool:
    return all(_chebyshev(c, p) >= spacing for p in placed)


def _uniform(rng: random.Random, lo: float = INNER_MARGIN, hi: float = 1 - INNER_MARGIN) -> Point2:
    return Point2(rng.uniform(lo, hi), rng.uniform(lo, hi))


def _place_blocks(rng: random.Random, colors: list[str], first: Optional[Point2] = None) -> list[Block]:
    h, r = DEFAULT_HALF_EXTENT, DEFAULT_EFFECTOR_RADIUS
    spacing = 2 * h + 2 * r + CLEARANCE
    centers: list[Point2] = [first] if first else []
    while len(centers) < len(colors):
        c = _uniform(rng)
        if _clear(c, centers, spacing):
            centers.append(c)
    return [Block(f"{col} block", col, c) for col, c in zip(colors, centers)]


def _place_effector(rng: random.Random, blocks: list[Block]) -> EndEffector:
    r = DEFAULT_EFFECTOR_RADIUS
    while True:
        c = _uniform(rng, 0.05, 0.95)
        if all(_chebyshev(c, b.center) >= b.half_extent + r + CLEARANCE for b in blocks):
            return EndEffector(c, r)


def sample_task(kind: TaskKind | str, seed: int) -> TaskInstance:
    """Deterministic random instance; resamples until not already solved."""
    kind = TaskKind(kind)
    rng = random.Random(f"{kind.value}:{seed}")
    for _ in range(1000):
        task = _SAMPLERS[kind](rng, seed)
        if not check_success(kind, task.initial, task.params):
            return task
    raise RuntimeError(f"could not sample an unsolved {kind.value} instance for seed {seed}")


def _sample_b2p(rng: random.Random, seed: int) -> TaskInstance:
    colors = rng.sample(COLORS, 1 + rng.randint(1, 2))
    loc = rng.choice(sorted(LOCATIONS))
    target = LOCATIONS[loc]
    spacing = 2 * DEFAULT_HALF_EXTENT + 2 * DEFAULT_EFFECTOR_RADIUS + CLEARANCE
    while True:
        blocks = _place_blocks(rng, colors)
        if all(_chebyshev(b.center, target) >= spacing for b in blocks[1:]):
            break
    state = WorldState(tuple(blocks), _place_effector(rng, blocks))
    a = blocks[0]
    instruction = rng.choice(INSTRUCTIONS[TaskKind.B2P]).format(a=a.color, loc=loc)
    params = SuccessParams(target_block=a.id, target_point=(target.x, target.y))
    return TaskInstance(TaskKind.B2P, seed, state, instruction, params, relevant=[a.id])


def _sample_b2b(rng: random.Random, seed: int) -> TaskInstance:
    colors = rng.sample(COLORS, 2 + rng.randint(0, 1))
    blocks = _place_blocks(rng, colors)
    state = WorldState(tuple(blocks), _place_effector(rng, blocks))
    a, b = blocks[0], blocks[1]
    instruction = rng.choice(INSTRUCTIONS[TaskKind.B2B]).format(a=a.color, b=b.color)
    params = SuccessParams(target_block=a.id, other_block=b.id)
    return TaskInstance(TaskKind.B2B, seed, state, instruction, params, relevant=[a.id, b.id])


def _sample_sep(rng: random.Random, seed: int) -> TaskInstance:
    colors = rng.sample(COLORS, 2 + rng.randint(0, 1))
    spacing = 2 * DEFAULT_HALF_EXTENT + 2 * DEFAULT_EFFECTOR_RADIUS + CLEARANCE
    while True:
        first = _uniform(rng)
        ang = rng.uniform(0, 2 * math.pi)
        dist = rng.uniform(spacing, 0.25)
        second = Point2(first.x + dist * math.cos(ang), first.y + dist * math.sin(ang))
        if (
            INNER_MARGIN <= second.x <= 1 - INNER_MARGIN
            and INNER_MARGIN <= second.y <= 1 - INNER_MARGIN
            and _chebyshev(first, second) >= spacing
        ):
            break
    blocks = _place_blocks(rng, colors, first)
    blocks[1] = replace(blocks[1], center=second)
    blocks = _place_blocks_rest(rng, blocks)
    state = WorldState(tuple(blocks), _place_effector(rng, blocks))
    a, b = blocks[0], blocks[1]
    instruction = rng.choice(INSTRUCTIONS[TaskKind.SEP]).format(a=a.color, b=b.color)
    params = SuccessParams(
        target_block=a.id, other_block=b.id, initial_distance=a.center.dist(b.center)
    )
    return TaskInstance(TaskKind.SEP, seed, state, instruction, params, relevant=[a.id, b.id])


def _place_blocks_rest(rng: random.Random, blocks: list[Block]) -> list[Block]:
    """Re-place blocks after the first two so every pair keeps clearance."""
    spacing = 2 * DEFAULT_HALF_EXTENT + 2 * DEFAULT_EFFECTOR_RADIUS + CLEARANCE
    fixed = blocks[:2]
    out = list(fixed)
    for b in blocks[2:]:
        while True:
            c = _uniform(rng)
            if _clear(c, [x.center for x in out], spacing):
                out.append(replace(b, center=c))
                break
    return out


def _sample_hanoi(rng: random.Random, seed: int) -> TaskInstance:
    x0 = rng.uniform(0.2, 0.3)
    y = rng.uniform(0.45, 0.75)
    positions = tuple(Point2(x0 + 0.25 * i, y) for i in range(3))
    start = rng.randint(1, 3)
    goal = rng.choice([p for p in (1, 2, 3) if p != start])
    pegs: list[tuple[int, ...]] = [(), (), ()]
    pegs[start - 1] = tuple(range(N_RINGS, 0, -1))
    pp = PickPlaceState(pegs=tuple(pegs), peg_positions=positions)  # type: ignore[arg-type]
    state = WorldState((), EndEffector(HOME), pp)
    instruction = rng.choice(INSTRUCTIONS[TaskKind.HANOI])
    context = f"there are {N_RINGS} rings and 3 pegs; the goal peg is peg {goal}"
    relevant = [f"peg {i}" for i in (1, 2, 3)] + [f"{RING_COLORS[r]} ring" for r in range(1, N_RINGS + 1)]
    params = SuccessParams(goal_peg=goal, n_rings=N_RINGS)
    return TaskInstance(TaskKind.HANOI, seed, state, instruction, params, context, relevant)


def _sample_bowl(rng: random.Random, seed: int) -> TaskInstance:
    block_color, bowl_color, other = rng.sample(COLORS, 3)
    n_target = rng.randint(1, 3)
    n_distract = rng.randint(0, 2)
    n_bowls = rng.randint(1, 2)
    n_other_bowls = rng.randint(0, 1)
    placed: list[Point2] = []

    def spot() -> Point2:
        while True:
            c = Point2(rng.uniform(0.1, 0.9), rng.uniform(0.25, 0.9))
            if _clear(c, placed, 0.12):
                placed.append(c)
                return c

    blocks = [LooseBlock(f"{block_color} block {i + 1}", block_color, spot()) for i in range(n_target)]
    for i in range(n_distract):
        col = rng.choice([c for c in COLORS if c != block_color])
        blocks.append(LooseBlock(f"{col} block {len(blocks) + 1}", col, spot()))
    bowls = [Bowl(f"{bowl_color} bowl {i + 1}", bowl_color, spot()) for i in range(n_bowls)]
    for i in range(n_other_bowls):
        bowls.append(Bowl(f"{other} bowl {len(bowls) + 1}", other, spot()))
    pp = PickPlaceState(loose_blocks=tuple(blocks), bowls=tuple(bowls))
    state = WorldState((), EndEffector(HOME), pp)
    instruction = rng.choice(INSTRUCTIONS[TaskKind.BOWL]).format(a=block_color, b=bowl_color)
    relevant = [b.id for b in blocks if b.color == block_color] + [b.id for b in bowls if b.color == bowl_color]
    params = SuccessParams(block_color=block_color, bowl_color=bowl_color)
    return TaskInstance(TaskKind.BOWL, seed, state, instruction, params, relevant=relevant)


_SAMPLERS = {
    TaskKind.B2P: _sample_b2p,
    TaskKind.B2B: _sample_b2b,
    TaskKind.SEP: _sample_sep,
    TaskKind.HANOI: _sample_hanoi,
    TaskKind.BOWL: _sample_bowl,
}


def check_success(kind: TaskKind | str, state: WorldState, params: SuccessParams) -> bool:
    kind = TaskKind(kind)
    if kind is TaskKind.B2P:
        b = state.block(params.target_block)
        tx, ty = params.target_point  # type: ignore[misc]
        return b.center.dist(Point2(tx, ty)) <= params.radius
    if kind is TaskKind.B2B:
        a, b = state.block(params.target_block), state.block(params.other_block)
        return square_gap(a, b) <= params.touch_gap
    if kind is TaskKind.SEP:
        a, b = state.block(params.target_block), state.block(params.other_block)
        if off_table(a) or off_table(b):
            return False
        return a.center.dist(b.center) >= params.initial_distance + params.separation
    pp = state.pickplace
    if pp is None:
        return False
    if kind is TaskKind.HANOI:
        return pp.held is None and pp.pegs[params.goal_peg - 1] == tuple(range(params.n_rings, 0, -1))
    bowls = [b for b in pp.bowls if b.color == params.bowl_color]
    targets = [b for b in pp.loose_blocks if b.color == params.block_color]
    if not targets:
        return False
    for blk in targets:
        if blk.id == pp.held:
            return False
        if not any(blk.position.dist(bw.position) <= params.bowl_radius for bw in bowls):
            return False
    return True


def task_progress(task: TaskInstance, state: WorldState) -> float:
    """Scalar distance-to-goal for pushing tasks (lower is better)."""
    p = task.params
    if task.kind is TaskKind.B2P:
        tx, ty = p.target_point  # type: ignore[misc]
        return state.block(p.target_block).center.dist(Point2(tx, ty))
    if task.kind is TaskKind.B2B:
        return square_gap(state.block(p.target_block), state.block(p.other_block))
    if task.kind is TaskKind.SEP:
        return -state.block(p.target_block).center.dist(state.block(p.other_block).center)
    return 0.0
