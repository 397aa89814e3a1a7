"""Standalone SVG trajectory plots."""

from __future__ import annotations

from xml.sax.saxutils import escape

from ..perception import Detection
from ..records import EpisodeRecord
from ..world import Side, world_from_dict

SIZE = 500
PAD = 20
COLOR_FILL = {
    "red": "#d62728",
    "green": "#2ca02c",
    "blue": "#1f77b4",
    "yellow": "#e6c229",
    "purple": "#9467bd",
}


def _sx(x: float) -> str:
    return f"{PAD + x * SIZE:.2f}"


def _sy(y: float) -> str:
    return f"{PAD + (1.0 - y) * SIZE:.2f}"


def _len(v: float) -> str:
    return f"{v * SIZE:.2f}"


def _square(cx: float, cy: float, h: float, attrs: str) -> str:
    return f'<rect x="{_sx(cx - h)}" y="{_sy(cy + h)}" width="{_len(2 * h)}" height="{_len(2 * h)}" {attrs}/>'


def _side_point(det: Detection, side: Side) -> tuple[float, float]:
    lo, hi = det.box
    c = det.center
    return {
        Side.BOTTOM: (c.x, lo.y),
        Side.TOP: (c.x, hi.y),
        Side.LEFT: (lo.x, c.y),
        Side.RIGHT: (hi.x, c.y),
    }.get(side, (c.x, c.y))


def render_trajectory(record: EpisodeRecord, round_for_labels: int = 0) -> str:
    """SVG of the table, blocks before and after, detections, path and affordances."""
    if not record.rounds:
        raise ValueError("record has no rounds to render")
    full = SIZE + 2 * PAD
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}">',
        f"<title>{escape(record.task.kind.value)} seed {record.task.seed} {escape(record.agent)}: "
        f"{escape(record.termination)}</title>",
        f'<rect class="table" x="{PAD}" y="{PAD}" width="{SIZE}" height="{SIZE}" fill="#f4f1ea" stroke="#555"/>',
    ]
    initial = record.task.initial
    final = world_from_dict(record.final_state) if record.final_state else initial
    for b in initial.blocks:
        fill = COLOR_FILL.get(b.color, "#888")
        out.append(_square(b.center.x, b.center.y, b.half_extent, f'class="block-initial" fill="none" stroke="{fill}" stroke-dasharray="4 3"'))
    for b in final.blocks:
        fill = COLOR_FILL.get(b.color, "#888")
        out.append(_square(b.center.x, b.center.y, b.half_extent, f'class="block-final" fill="{fill}" fill-opacity="0.6"'))
    pp = final.pickplace
    if pp is not None:
        for i, pos in enumerate(pp.peg_positions):
            out.append(_square(pos.x, pos.y, 0.01, 'class="peg" fill="#333"'))
            out.append(f'<text x="{_sx(pos.x)}" y="{_sy(pos.y - 0.06)}" font-size="11" text-anchor="middle">peg {i + 1}: {" ".join(map(str, pp.pegs[i]))}</text>')
        for bowl in pp.bowls:
            out.append(f'<circle class="bowl" cx="{_sx(bowl.position.x)}" cy="{_sy(bowl.position.y)}" r="{_len(0.04)}" fill="none" stroke="{COLOR_FILL.get(bowl.color, "#888")}" stroke-width="3"/>')
        for blk in pp.loose_blocks:
            out.append(_square(blk.position.x, blk.position.y, 0.02, f'class="block-final" fill="{COLOR_FILL.get(blk.color, "#888")}"'))

    labelled = record.rounds[min(round_for_labels, len(record.rounds) - 1)]
    dets = [Detection.from_dict(d) for d in labelled.detections]
    for d in dets:
        if d.detected:
            lo, hi = d.box
            out.append(f'<rect class="detection" x="{_sx(lo.x)}" y="{_sy(hi.y)}" width="{_len(hi.x - lo.x)}" height="{_len(hi.y - lo.y)}" fill="none" stroke="red" stroke-width="1"/>')

    start = initial.effector
    out.append(f'<circle class="effector-start" cx="{_sx(start.center.x)}" cy="{_sy(start.center.y)}" r="{_len(start.radius)}" fill="none" stroke="#000" stroke-width="2"/>')
    pts = [start.center.as_list()] + [p for r in record.rounds for p in r.executed]
    poly = " ".join(f"{_sx(x)},{_sy(y)}" for x, y in pts)
    out.append(f'<polyline class="path" points="{poly}" fill="none" stroke="green" stroke-width="2"/>')
    for x, y in pts[1:]:
        out.append(f'<circle class="waypoint" cx="{_sx(x)}" cy="{_sy(y)}" r="3" fill="blue"/>')

    aff = (labelled.planner or {}).get("affordance", {})
    by_label = {d.label: d for d in dets}
    for letter, value in aff.items():
        if letter not in labelled.parts:
            continue
        owner, side = labelled.parts[letter]
        det = by_label.get(owner)
        if det is None:
            continue
        x, y = _side_point(det, Side(side))
        out.append(f'<text class="affordance" x="{_sx(x)}" y="{_sy(y)}" font-size="10" text-anchor="middle">{escape(letter)} {value:.2f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
