"""Emulated open-vocabulary detection and the textual scene description.

Detections come from ground truth with optional box-corner jitter and random
misses. ``describe`` renders the object-parts listing shared by every prompt;
``parse_scene`` reads that listing back.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .world import (
    OUTWARD_NORMALS,
    PUSH_SIDES,
    RING_COLORS,
    FunctionalPart,
    Point2,
    Side,
    WorldState,
)

RING_BASE = 0.02
RING_STEP = 0.01
PEG_HALF = 0.01
BOWL_HALF = 0.04
LOOSE_BLOCK_HALF = 0.02


@dataclass(frozen=True)
class NoiseConfig:
    epsilon: float = 0.005
    p_miss: float = 0.02

    @classmethod
    def off(cls) -> NoiseConfig:
        return cls(0.0, 0.0)


@dataclass(frozen=True)
class Detection:
    label: str
    box: tuple[Point2, Point2]
    detected: bool = True
    kind: str = "block"
    # stacking facts read off the image for pick-place scenes (peg, level)
    attrs: tuple[tuple[str, Any], ...] = ()

    @property
    def center(self) -> Point2:
        lo, hi = self.box
        return Point2((lo.x + hi.x) / 2, (lo.y + hi.y) / 2)

    def attr(self, key: str, default=None):
        return dict(self.attrs).get(key, default)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "box": [self.box[0].as_list(), self.box[1].as_list()],
            "detected": self.detected,
            "kind": self.kind,
            "attrs": dict(self.attrs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Detection:
        lo, hi = d["box"]
        return cls(
            d["label"], (Point2(*lo), Point2(*hi)), d["detected"], d["kind"], tuple(d["attrs"].items())
        )


@dataclass
class SceneDescription:
    text: str
    part_index: dict[str, FunctionalPart]
    omitted: list[str] = field(default_factory=list)

    def part_owner(self, letter: str) -> Optional[str]:
        part = self.part_index.get(letter)
        return part.owner if part else None


def _ground_truth(state: WorldState) -> list[tuple[str, str, Point2, float, tuple]]:
    """(label, kind, center, half size, attrs) for every visible object."""
    objs: list[tuple[str, str, Point2, float, tuple]] = []
    for b in state.blocks:
        objs.append((b.id, "block", b.center, b.half_extent, ()))
    pp = state.pickplace
    if pp is None:
        return objs
    for i, pos in enumerate(pp.peg_positions):
        peg = i + 1
        objs.append((f"peg {peg}", "peg", pos, PEG_HALF, (("peg", peg),)))
        for level, ring in enumerate(pp.pegs[i]):
            label = f"{RING_COLORS[ring]} ring"
            half = RING_BASE + RING_STEP * ring
            objs.append((label, "ring", pos, half, (("peg", peg), ("level", level + 1), ("size", ring))))
    for bowl in pp.bowls:
        objs.append((bowl.id, "bowl", bowl.position, BOWL_HALF, ()))
    for blk in pp.loose_blocks:
        if blk.id == pp.held:
            continue
        objs.append((blk.id, "block", blk.position, LOOSE_BLOCK_HALF, ()))
    return objs


def detect(state: WorldState, noise: NoiseConfig = NoiseConfig(), seed: Any = 0) -> list[Detection]:
    """One detection per visible object; deterministic given ``seed``."""
    rng = np.random.default_rng(seed)
    out = []
    for label, kind, c, half, attrs in _ground_truth(state):
        # draw every variate unconditionally so the stream does not depend on outcomes
        miss = rng.random() < noise.p_miss
        jitter = rng.uniform(-noise.epsilon, noise.epsilon, size=4) if noise.epsilon > 0 else np.zeros(4)
        lo = Point2(c.x - half + float(jitter[0]), c.y - half + float(jitter[1]))
        hi = Point2(c.x + half + float(jitter[2]), c.y + half + float(jitter[3]))
        if lo.x > hi.x:
            lo, hi = Point2(hi.x, lo.y), Point2(lo.x, hi.y)
        if lo.y > hi.y:
            lo, hi = Point2(lo.x, hi.y), Point2(hi.x, lo.y)
        out.append(Detection(label, (lo, hi), not miss, kind, attrs))
    return out


def part_letter(i: int) -> str:
    """A, B, ..., Z, AA, AB, ..."""
    s = ""
    i += 1
    while i:
        i, rem = divmod(i - 1, 26)
        s = chr(65 + rem) + s
    return s


def _fmt(p: Point2) -> str:
    return f"({p.x:.3f}, {p.y:.3f})"


def describe(
    detections: list[Detection], effector: Point2, held: Optional[str] = None, gripper: bool = False
) -> SceneDescription:
    """Render detections as the lettered object-parts listing."""
    lines = []
    if gripper:
        holding = held if held else "nothing"
        lines.append(f"The suction gripper is at {_fmt(effector)} and is holding {holding}.")
    else:
        lines.append(f"The end-effector is at {_fmt(effector)}.")
    parts: dict[str, FunctionalPart] = {}
    omitted = [d.label for d in detections if not d.detected]
    seen = [d for d in detections if d.detected]
    if not seen:
        lines.append("No objects detected.")
        return SceneDescription("\n".join(lines), parts, omitted)

    def letter() -> str:
        return part_letter(len(parts))

    for d in seen:
        lo, hi = d.box
        c = d.center
        if d.kind == "block" and not gripper:
            lines.append(f"{d.label} at {_fmt(c)} with bounding box {_fmt(lo)} to {_fmt(hi)}:")
            mids = {
                Side.BOTTOM: Point2(c.x, lo.y),
                Side.TOP: Point2(c.x, hi.y),
                Side.LEFT: Point2(lo.x, c.y),
                Side.RIGHT: Point2(hi.x, c.y),
            }
            for side in PUSH_SIDES:
                ch = letter()
                parts[ch] = FunctionalPart(d.label, side, mids[side], OUTWARD_NORMALS[side])
                lines.append(f"  side {ch} ({side.value.lower()}) at {_fmt(mids[side])}")
            continue
        ch = letter()
        parts[ch] = FunctionalPart(d.label, Side.CENTER, c, Point2(0.0, 0.0))
        extra = ""
        if d.kind == "peg":
            rings = sorted(
                (x for x in seen if x.kind == "ring" and x.attr("peg") == d.attr("peg")),
                key=lambda x: x.attr("level"),
            )
            stack = ", ".join(x.label for x in rings) if rings else "nothing"
            extra = f"; holds from bottom to top: {stack}"
        elif d.kind == "ring":
            extra = f"; size {d.attr('size')}, on peg {d.attr('peg')} at level {d.attr('level')} from the bottom"
        lines.append(f"{d.label} ({d.kind}) at {_fmt(c)}, part {ch}{extra}")
    return SceneDescription("\n".join(lines), parts, omitted)


# --- reading a description back ---------------------------------------------

_NUM = r"(-?\d+(?:\.\d+)?)"
_PT = rf"\(\s*{_NUM}\s*,\s*{_NUM}\s*\)"
_EFF = re.compile(rf"The end-effector is at {_PT}")
_GRIP = re.compile(rf"The suction gripper is at {_PT} and is holding (.+?)\.$", re.M)
_BLOCK = re.compile(rf"^(.+?) at {_PT} with bounding box {_PT} to {_PT}:$")
_SIDE = re.compile(rf"^\s+side ([A-Z]+) \((bottom|top|left|right)\) at {_PT}$")
_CENTER = re.compile(rf"^(.+?) \((ring|peg|bowl|block)\) at {_PT}, part ([A-Z]+)(.*)$")
_RING = re.compile(r"size (\d+), on peg (\d+) at level (\d+)")


@dataclass
class SceneObject:
    label: str
    kind: str
    center: Point2
    box: Optional[tuple[Point2, Point2]] = None
    parts: dict[str, Side] = field(default_factory=dict)
    peg: Optional[int] = None
    level: Optional[int] = None
    size: Optional[int] = None

    @property
    def half_extent(self) -> float:
        if self.box is None:
            return 0.0
        lo, hi = self.box
        return ((hi.x - lo.x) + (hi.y - lo.y)) / 4


@dataclass
class ParsedScene:
    effector: Optional[Point2] = None
    held: Optional[str] = None
    objects: list[SceneObject] = field(default_factory=list)
    parts: dict[str, tuple[str, Side, Point2]] = field(default_factory=dict)

    def get(self, label: str) -> Optional[SceneObject]:
        for o in self.objects:
            if o.label == label:
                return o
        return None


def parse_scene(text: str) -> ParsedScene:
    """Recover objects and lettered parts from ``describe`` output."""
    scene = ParsedScene()
    current: Optional[SceneObject] = None
    for line in text.splitlines():
        m = _EFF.search(line)
        if m:
            scene.effector = Point2(float(m[1]), float(m[2]))
            continue
        m = _GRIP.search(line)
        if m:
            scene.effector = Point2(float(m[1]), float(m[2]))
            scene.held = None if m[3] == "nothing" else m[3]
            continue
        m = _BLOCK.match(line)
        if m:
            v = [float(x) for x in m.groups()[1:]]
            current = SceneObject(
                m[1], "block", Point2(v[0], v[1]), (Point2(v[2], v[3]), Point2(v[4], v[5]))
            )
            scene.objects.append(current)
            continue
        m = _SIDE.match(line)
        if m and current is not None:
            side = Side(m[2].capitalize())
            pt = Point2(float(m[3]), float(m[4]))
            current.parts[m[1]] = side
            scene.parts[m[1]] = (current.label, side, pt)
            continue
        m = _CENTER.match(line)
        if m:
            c = Point2(float(m[3]), float(m[4]))
            obj = SceneObject(m[1], m[2], c, parts={m[5]: Side.CENTER})
            r = _RING.search(m[6])
            if r:
                obj.size, obj.peg, obj.level = int(r[1]), int(r[2]), int(r[3])
            elif m[2] == "peg":
                obj.peg = int(m[1].split()[-1])
            scene.objects.append(obj)
            scene.parts[m[5]] = (obj.label, Side.CENTER, c)
            current = None
    return scene
