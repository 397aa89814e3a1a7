"""Geometric model of the tabletop scene.

Coordinates are normalized table units: the table is the unit square with
x pointing right, y pointing up and the origin at the bottom-left corner.
Blocks are axis-aligned squares that translate but never rotate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Union

DEFAULT_HALF_EXTENT = 0.04
DEFAULT_EFFECTOR_RADIUS = 0.02
TABLE_MIN = 0.0
TABLE_MAX = 1.0


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def __add__(self, other: Point2) -> Point2:
        return Point2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Point2) -> Point2:
        return Point2(self.x - other.x, self.y - other.y)

    def scale(self, k: float) -> Point2:
        return Point2(self.x * k, self.y * k)

    def dot(self, other: Point2) -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def dist(self, other: Point2) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def clamped(self, lo: float = TABLE_MIN, hi: float = TABLE_MAX) -> Point2:
        return Point2(min(max(self.x, lo), hi), min(max(self.y, lo), hi))

    def as_list(self) -> list[float]:
        return [self.x, self.y]


class Side(str, Enum):
    BOTTOM = "Bottom"
    TOP = "Top"
    LEFT = "Left"
    RIGHT = "Right"
    # suction-gripper parts (rings, pegs, bowls, loose blocks) are addressed by center
    CENTER = "Center"


# order used for part lettering: bottom, top, left, right
PUSH_SIDES = (Side.BOTTOM, Side.TOP, Side.LEFT, Side.RIGHT)

OUTWARD_NORMALS = {
    Side.BOTTOM: Point2(0.0, -1.0),
    Side.TOP: Point2(0.0, 1.0),
    Side.LEFT: Point2(-1.0, 0.0),
    Side.RIGHT: Point2(1.0, 0.0),
}

OPPOSITE = {
    Side.BOTTOM: Side.TOP,
    Side.TOP: Side.BOTTOM,
    Side.LEFT: Side.RIGHT,
    Side.RIGHT: Side.LEFT,
}


@dataclass(frozen=True)
class Block:
    id: str
    color: str
    center: Point2
    half_extent: float = DEFAULT_HALF_EXTENT

    def __post_init__(self) -> None:
        if not self.half_extent > 0:
            raise ValueError("half_extent must be positive")

    def moved(self, dx: float, dy: float) -> Block:
        return replace(self, center=Point2(self.center.x + dx, self.center.y + dy))


@dataclass(frozen=True)
class FunctionalPart:
    owner: str
    side: Side
    midpoint: Point2
    outward_normal: Point2

    @property
    def push_direction(self) -> Point2:
        """Direction the owner moves when this part is pushed."""
        return self.outward_normal.scale(-1.0)


@dataclass(frozen=True)
class EndEffector:
    center: Point2
    radius: float = DEFAULT_EFFECTOR_RADIUS

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class LooseBlock:
    """A block handled by the suction gripper."""

    id: str
    color: str
    position: Point2


@dataclass(frozen=True)
class Bowl:
    id: str
    color: str
    position: Point2


RING_COLORS = {1: "blue", 2: "green", 3: "red", 4: "yellow", 5: "purple"}

ObjectId = Union[int, str]


@dataclass(frozen=True)
class PickPlaceState:
    """Discrete pick-and-place scene.

    Rings are identified by their size rank (1 is the smallest). Peg stacks
    list rings from bottom to top.
    """

    pegs: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]] = ((), (), ())
    peg_positions: tuple[Point2, ...] = ()
    bowls: tuple[Bowl, ...] = ()
    loose_blocks: tuple[LooseBlock, ...] = ()
    held: Optional[ObjectId] = None

    def rings(self) -> list[int]:
        out = [r for stack in self.pegs for r in stack]
        if isinstance(self.held, int):
            out.append(self.held)
        return sorted(out)

    def peg_of(self, ring: int) -> Optional[int]:
        """1-based peg index holding ``ring``, or None if held/absent."""
        for i, stack in enumerate(self.pegs):
            if ring in stack:
                return i + 1
        return None

    def block(self, block_id: str) -> Optional[LooseBlock]:
        for b in self.loose_blocks:
            if b.id == block_id:
                return b
        return None

    def is_valid(self) -> bool:
        seen: list[int] = []
        for stack in self.pegs:
            if any(stack[i] <= stack[i + 1] for i in range(len(stack) - 1)):
                return False
            seen.extend(stack)
        if isinstance(self.held, int):
            seen.append(self.held)
        return len(seen) == len(set(seen))


@dataclass(frozen=True)
class WorldState:
    blocks: tuple[Block, ...] = ()
    effector: EndEffector = field(default_factory=lambda: EndEffector(Point2(0.5, 0.1)))
    pickplace: Optional[PickPlaceState] = None

    def __post_init__(self) -> None:
        ids = [b.id for b in self.blocks]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate block ids: {ids}")
        c = self.effector.center
        if not (TABLE_MIN <= c.x <= TABLE_MAX and TABLE_MIN <= c.y <= TABLE_MAX):
            raise ValueError(f"effector off table at ({c.x}, {c.y})")

    def block(self, block_id: str) -> Block:
        for b in self.blocks:
            if b.id == block_id:
                return b
        raise KeyError(block_id)

    def with_blocks(self, blocks: tuple[Block, ...]) -> WorldState:
        return replace(self, blocks=blocks)


def functional_parts(block: Block) -> list[FunctionalPart]:
    """The four side parts of ``block`` in bottom, top, left, right order."""
    c, h = block.center, block.half_extent
    parts = []
    for side in PUSH_SIDES:
        n = OUTWARD_NORMALS[side]
        parts.append(FunctionalPart(block.id, side, Point2(c.x + n.x * h, c.y + n.y * h), n))
    return parts


def off_table(block: Block, lo: float = TABLE_MIN, hi: float = TABLE_MAX) -> bool:
    c = block.center
    return not (lo <= c.x <= hi and lo <= c.y <= hi)


def square_gap(a: Block, b: Block) -> float:
    """Euclidean distance between the surfaces of two axis-aligned squares."""
    s = a.half_extent + b.half_extent
    gx = max(0.0, abs(a.center.x - b.center.x) - s)
    gy = max(0.0, abs(a.center.y - b.center.y) - s)
    return math.hypot(gx, gy)


# --- serialization ---------------------------------------------------------


def world_to_dict(state: WorldState) -> dict:
    d: dict = {
        "blocks": [
            {"id": b.id, "color": b.color, "center": b.center.as_list(), "half_extent": b.half_extent}
            for b in state.blocks
        ],
        "effector": {"center": state.effector.center.as_list(), "radius": state.effector.radius},
        "pickplace": None,
    }
    pp = state.pickplace
    if pp is not None:
        d["pickplace"] = {
            "pegs": [list(s) for s in pp.pegs],
            "peg_positions": [p.as_list() for p in pp.peg_positions],
            "bowls": [{"id": b.id, "color": b.color, "position": b.position.as_list()} for b in pp.bowls],
            "loose_blocks": [
                {"id": b.id, "color": b.color, "position": b.position.as_list()} for b in pp.loose_blocks
            ],
            "held": pp.held,
        }
    return d


def world_from_dict(d: dict) -> WorldState:
    blocks = tuple(
        Block(b["id"], b["color"], Point2(*b["center"]), b["half_extent"]) for b in d["blocks"]
    )
    eff = EndEffector(Point2(*d["effector"]["center"]), d["effector"]["radius"])
    pp = None
    if d.get("pickplace") is not None:
        p = d["pickplace"]
        pp = PickPlaceState(
            pegs=tuple(tuple(s) for s in p["pegs"]),  # type: ignore[arg-type]
            peg_positions=tuple(Point2(*q) for q in p["peg_positions"]),
            bowls=tuple(Bowl(b["id"], b["color"], Point2(*b["position"])) for b in p["bowls"]),
            loose_blocks=tuple(
                LooseBlock(b["id"], b["color"], Point2(*b["position"])) for b in p["loose_blocks"]
            ),
            held=p["held"],
        )
    return WorldState(blocks=blocks, effector=eff, pickplace=pp)
