"""Deterministic tabletop physics.

Pushing is quasi-static: the effector disc moves in fixed micro-steps and any
block whose dilated square (half-extent + effector radius) it penetrates is
translated by exactly the penetration depth, normal to the face the effector
was touching before the micro-step (least penetration breaks corner entries).
Pushed blocks shove blocks ahead of them along the same axis.

Pick-and-place is discrete: each waypoint toggles the suction gripper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence, Union

from .world import (
    Bowl,
    ObjectId,
    PickPlaceState,
    Point2,
    Side,
    WorldState,
    off_table,
)

MICRO_STEP = 1e-3
FACE_TOL = 1e-9
PICK_RADIUS = 0.04
PLACE_RADIUS = 0.05


class IllegalMoveError(ValueError):
    """A pick or place that violates the scene rules."""


@dataclass(frozen=True)
class Contact:
    block: str
    side: Side
    fraction: float
    source: str = "effector"


@dataclass
class StepOutcome:
    new_state: WorldState
    contacts: list[Contact] = field(default_factory=list)
    pushed: list[tuple[str, tuple[float, float]]] = field(default_factory=list)
    off_table_events: list[str] = field(default_factory=list)
    events: list[str] = field(default_factory=list)
    illegal: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "contacts": [[c.block, c.side.value, c.fraction, c.source] for c in self.contacts],
            "pushed": [[i, list(d)] for i, d in self.pushed],
            "off_table": list(self.off_table_events),
            "events": list(self.events),
            "illegal": list(self.illegal),
        }


def _as_point(target) -> Point2:
    if isinstance(target, Point2):
        return target
    x, y = target
    x, y = float(x), float(y)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"non-finite target ({x}, {y})")
    return Point2(x, y)


def step_to_waypoint(state: WorldState, target, micro_step: float = MICRO_STEP) -> StepOutcome:
    """Move the effector in a straight line to ``target`` (clamped to the table)."""
    target = _as_point(target).clamped()
    if state.pickplace is not None:
        return _pickplace_step(state, target)
    return _push_step(state, target, micro_step)


def _push_step(state: WorldState, target: Point2, micro_step: float) -> StepOutcome:
    eff = state.effector
    r = eff.radius
    sx, sy = eff.center.x, eff.center.y
    tx, ty = target.x, target.y
    dist = math.hypot(tx - sx, ty - sy)
    n = math.ceil(dist / micro_step) if dist > 0 else 0

    blocks = state.blocks
    cx = [b.center.x for b in blocks]
    cy = [b.center.y for b in blocks]
    half = [b.half_extent for b in blocks]
    reach = [h + r for h in half]
    mvx, mvy = tx - sx, ty - sy

    contacts: dict[str, Contact] = {}
    lo_x, hi_x = min(sx, tx), max(sx, tx)
    lo_y, hi_y = min(sy, ty), max(sy, ty)

    def candidates() -> list[int]:
        return [
            j
            for j in range(len(blocks))
            if lo_x - reach[j] < cx[j] < hi_x + reach[j] and lo_y - reach[j] < cy[j] < hi_y + reach[j]
        ]

    def chain(a: int, axis: int, sign: float, frac: float) -> None:
        queue = [a]
        guard = 0
        while queue and guard < 64 * (len(blocks) + 1):
            guard += 1
            i = queue.pop(0)
            for k in range(len(blocks)):
                if k == i:
                    continue
                s = half[i] + half[k]
                ddx, ddy = cx[k] - cx[i], cy[k] - cy[i]
                if abs(ddx) >= s or abs(ddy) >= s:
                    continue
                if axis == 0:
                    if ddx * sign < 0:
                        continue
                    cx[k] = cx[i] + sign * s
                    side = Side.LEFT if sign > 0 else Side.RIGHT
                else:
                    if ddy * sign < 0:
                        continue
                    cy[k] = cy[i] + sign * s
                    side = Side.BOTTOM if sign > 0 else Side.TOP
                bid = blocks[k].id
                if bid not in contacts:
                    contacts[bid] = Contact(bid, side, frac, source=blocks[i].id)
                queue.append(k)

    cand = candidates()
    qx, qy = sx, sy
    for i in range(1, n + 1):
        if i == n:
            px, py = tx, ty
        else:
            t = i / n
            px, py = sx + mvx * t, sy + mvy * t
        moved = False
        for _ in range(3):
            changed = False
            for j in cand:
                dx, dy = px - cx[j], py - cy[j]
                penx, peny = reach[j] - abs(dx), reach[j] - abs(dy)
                if penx <= 0 or peny <= 0:
                    continue
                # the face the effector was touching before this micro-step wins;
                # least penetration only decides corner entries
                was_x = abs(qx - cx[j]) >= reach[j] - FACE_TOL
                was_y = abs(qy - cy[j]) >= reach[j] - FACE_TOL
                if was_x != was_y:
                    use_x = was_x
                else:
                    use_x = penx < peny or (penx == peny and abs(mvx) > abs(mvy))
                if use_x:
                    sign = -1.0 if dx > 0 else 1.0 if dx < 0 else (1.0 if mvx >= 0 else -1.0)
                    cx[j] += sign * penx
                    side = Side.LEFT if sign > 0 else Side.RIGHT
                    axis = 0
                else:
                    sign = -1.0 if dy > 0 else 1.0 if dy < 0 else (1.0 if mvy >= 0 else -1.0)
                    cy[j] += sign * peny
                    side = Side.BOTTOM if sign > 0 else Side.TOP
                    axis = 1
                bid = blocks[j].id
                contacts.setdefault(bid, Contact(bid, side, i / n))
                chain(j, axis, sign, i / n)
                changed = moved = True
            if not changed:
                break
        if moved:
            cand = candidates()
        qx, qy = px, py

    new_blocks = tuple(
        b if (cx[j] == b.center.x and cy[j] == b.center.y) else replace(b, center=Point2(cx[j], cy[j]))
        for j, b in enumerate(blocks)
    )
    pushed = [
        (b.id, (cx[j] - b.center.x, cy[j] - b.center.y))
        for j, b in enumerate(blocks)
        if cx[j] != b.center.x or cy[j] != b.center.y
    ]
    off = [nb.id for b, nb in zip(blocks, new_blocks) if not off_table(b) and off_table(nb)]
    new_state = replace(state, blocks=new_blocks, effector=replace(eff, center=target))
    return StepOutcome(
        new_state=new_state,
        contacts=sorted(contacts.values(), key=lambda c: (c.fraction, c.block)),
        pushed=pushed,
        off_table_events=off,
    )


def execute_sequence(
    state: WorldState,
    waypoints: Iterable,
    k: Optional[int] = None,
    stop: Optional[Callable[[WorldState], bool]] = None,
    micro_step: float = MICRO_STEP,
) -> tuple[WorldState, list[StepOutcome]]:
    """Run waypoints in order.

    Aborts after the first waypoint that pushes a block off the table, or
    once ``stop`` returns true for the new state.
    """
    pts = [_as_point(p) for p in getattr(waypoints, "waypoints", waypoints)]
    if k is not None and len(pts) != k:
        raise ValueError(f"expected {k} waypoints, got {len(pts)}")
    outcomes: list[StepOutcome] = []
    for p in pts:
        out = step_to_waypoint(state, p, micro_step)
        outcomes.append(out)
        state = out.new_state
        if out.off_table_events:
            break
        if stop is not None and stop(state):
            break
    return state, outcomes


# --- pick and place ---------------------------------------------------------


def apply_pick(state: PickPlaceState, obj: ObjectId) -> PickPlaceState:
    if state.held is not None:
        raise IllegalMoveError(f"already holding {state.held!r}")
    if isinstance(obj, int):
        peg = state.peg_of(obj)
        if peg is None:
            raise IllegalMoveError(f"ring {obj} is not on a peg")
        stack = state.pegs[peg - 1]
        if stack[-1] != obj:
            raise IllegalMoveError(f"ring {obj} is buried under ring {stack[-1]}")
        pegs = list(state.pegs)
        pegs[peg - 1] = stack[:-1]
        return replace(state, pegs=tuple(pegs), held=obj)  # type: ignore[arg-type]
    if state.block(obj) is None:
        raise IllegalMoveError(f"no object {obj!r}")
    return replace(state, held=obj)


def apply_place(state: PickPlaceState, destination: Union[int, Point2]) -> PickPlaceState:
    held = state.held
    if held is None:
        raise IllegalMoveError("nothing held")
    if isinstance(held, int):
        if not isinstance(destination, int) or not 1 <= destination <= len(state.pegs):
            raise IllegalMoveError(f"ring {held} must be placed on a peg")
        stack = state.pegs[destination - 1]
        if stack and stack[-1] < held:
            raise IllegalMoveError(f"ring {held} cannot go on smaller ring {stack[-1]}")
        pegs = list(state.pegs)
        pegs[destination - 1] = stack + (held,)
        return replace(state, pegs=tuple(pegs), held=None)  # type: ignore[arg-type]
    if not isinstance(destination, Point2):
        raise IllegalMoveError(f"block {held!r} must be placed at a table location")
    blocks = tuple(replace(b, position=destination) if b.id == held else b for b in state.loose_blocks)
    return replace(state, loose_blocks=blocks, held=None)


def _nearest(items: Sequence, point: Point2, radius: float, pos: Callable) -> Optional[int]:
    best, best_d = None, radius
    for i, it in enumerate(items):
        d = pos(it).dist(point)
        if d <= best_d:
            best, best_d = i, d
    return best


def object_at(pp: PickPlaceState, point: Point2) -> Optional[ObjectId]:
    """The object the suction gripper would grab at ``point``."""
    peg = _nearest(pp.peg_positions, point, PICK_RADIUS, lambda p: p)
    if peg is not None and pp.pegs[peg]:
        return pp.pegs[peg][-1]
    free = [b for b in pp.loose_blocks if b.id != pp.held]
    i = _nearest(free, point, PICK_RADIUS, lambda b: b.position)
    return free[i].id if i is not None else None


def destination_at(pp: PickPlaceState, point: Point2) -> Union[int, Point2]:
    peg = _nearest(pp.peg_positions, point, PLACE_RADIUS, lambda p: p)
    if peg is not None:
        return peg + 1
    i = _nearest(pp.bowls, point, PLACE_RADIUS, lambda b: b.position)
    if i is not None:
        return pp.bowls[i].position
    return point


def _pickplace_step(state: WorldState, target: Point2) -> StepOutcome:
    pp = state.pickplace
    assert pp is not None
    events: list[str] = []
    illegal: list[str] = []
    try:
        if pp.held is None:
            obj = object_at(pp, target)
            if obj is not None:
                pp = apply_pick(pp, obj)
                events.append(f"pick {obj}")
        else:
            dest = destination_at(pp, target)
            held = pp.held
            pp = apply_place(pp, dest)
            where = f"peg {dest}" if isinstance(dest, int) else f"({dest.x:.3f}, {dest.y:.3f})"
            events.append(f"place {held} {where}")
    except IllegalMoveError as exc:
        illegal.append(str(exc))
    new_state = replace(state, pickplace=pp, effector=replace(state.effector, center=target))
    return StepOutcome(new_state=new_state, events=events, illegal=illegal)


def bowl_at(pp: PickPlaceState, point: Point2, radius: float) -> Optional[Bowl]:
    i = _nearest(pp.bowls, point, radius, lambda b: b.position)
    return pp.bowls[i] if i is not None else None


def overlap_depth(state: WorldState) -> float:
    """Largest effector penetration into any block's dilated square."""
    e = state.effector
    worst = 0.0
    for b in state.blocks:
        reach = b.half_extent + e.radius
        pen = min(reach - abs(e.center.x - b.center.x), reach - abs(e.center.y - b.center.y))
        worst = max(worst, pen)
    return worst


def moved_blocks(before: WorldState, after: WorldState) -> dict[str, tuple[float, float]]:
    prev = {b.id: b for b in before.blocks}
    return {
        b.id: (b.center.x - prev[b.id].center.x, b.center.y - prev[b.id].center.y)
        for b in after.blocks
        if b.center != prev[b.id].center
    }

