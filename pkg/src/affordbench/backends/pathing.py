"""Shortest collision-free effector paths around axis-aligned square obstacles.

Obstacles are given by center and half-width (already dilated by the effector
radius). Paths run through the corners of each obstacle's clearance box, found
with Dijkstra on the visibility graph.
"""

from __future__ import annotations

import heapq
import math
from typing import Optional, Sequence

from ..world import Point2

Box = tuple[float, float, float]  # cx, cy, half-width


def segment_hits_box(p: Point2, q: Point2, box: Box, eps: float = 1e-9) -> bool:
    """True if segment pq passes through the open interior of ``box``."""
    cx, cy, hw = box
    t0, t1 = 0.0, 1.0
    for p0, d, lo, hi in ((p.x, q.x - p.x, cx - hw, cx + hw), (p.y, q.y - p.y, cy - hw, cy + hw)):
        if abs(d) < 1e-15:
            if not (lo + eps < p0 < hi - eps):
                return False
            continue
        a, b = (lo - p0) / d, (hi - p0) / d
        if a > b:
            a, b = b, a
        t0, t1 = max(t0, a), min(t1, b)
        if t1 - t0 <= eps:
            return False
    return t1 - t0 > eps


def inside(p: Point2, box: Box) -> bool:
    cx, cy, hw = box
    return abs(p.x - cx) < hw and abs(p.y - cy) < hw


def on_table(p: Point2, lo: float = 0.0, hi: float = 1.0) -> bool:
    return lo <= p.x <= hi and lo <= p.y <= hi


def escape_point(p: Point2, box: Box, clearance: float) -> Point2:
    """Nearest point outside ``box`` grown by ``clearance``, moving along one axis."""
    cx, cy, hw = box
    out = hw + clearance
    dx, dy = p.x - cx, p.y - cy
    if out - abs(dx) < out - abs(dy):
        return Point2(cx + math.copysign(out, dx if dx else 1.0), p.y)
    return Point2(p.x, cy + math.copysign(out, dy if dy else 1.0))


def plan_path(
    start: Point2,
    goal: Point2,
    obstacles: Sequence[Box],
    clearance: float = 0.01,
) -> Optional[list[Point2]]:
    """Waypoints from ``start`` (exclusive) to ``goal`` (inclusive), or None.

    Segments may not enter any obstacle grown by half the clearance; detour
    nodes sit at the corners of obstacles grown by the full clearance.
    """
    check = [(cx, cy, hw + clearance / 2) for cx, cy, hw in obstacles]
    if not on_table(goal) or any(inside(goal, b) for b in check):
        return None

    prefix: list[Point2] = []
    containing = [b for b in check if inside(start, b)]
    if containing:
        deepest = min(containing, key=lambda b: min(b[2] - abs(start.x - b[0]), b[2] - abs(start.y - b[1])))
        src = escape_point(start, (deepest[0], deepest[1], deepest[2] - clearance / 2), clearance)
        if on_table(src) and not any(inside(src, b) for b in check):
            prefix = [src]
            start = src
        else:
            check = [b for b in check if not inside(start, b)]

    nodes = [start, goal]
    for cx, cy, hw in obstacles:
        r = hw + clearance
        for sx, sy in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
            c = Point2(cx + sx * r, cy + sy * r)
            if on_table(c) and not any(inside(c, b) for b in check):
                nodes.append(c)

    def clear(a: Point2, b: Point2) -> bool:
        return not any(segment_hits_box(a, b, box) for box in check)

    dist = [math.inf] * len(nodes)
    prev = [-1] * len(nodes)
    dist[0] = 0.0
    heap = [(0.0, 0)]
    done = [False] * len(nodes)
    while heap:
        d, i = heapq.heappop(heap)
        if done[i]:
            continue
        done[i] = True
        if i == 1:
            break
        for j in range(len(nodes)):
            if done[j] or j == i:
                continue
            nd = d + nodes[i].dist(nodes[j])
            if nd < dist[j] - 1e-12 and clear(nodes[i], nodes[j]):
                dist[j] = nd
                prev[j] = i
                heapq.heappush(heap, (nd, j))
    if not done[1]:
        return None
    path = []
    i = 1
    while i != 0:
        path.append(nodes[i])
        i = prev[i]
    return prefix + path[::-1]
