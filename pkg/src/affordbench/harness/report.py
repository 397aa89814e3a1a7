"""Success-rate and failure-distribution tables."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable

from ..records import EpisodeRecord
from .classify import FAILURE_ORDER, classify_failure

TASK_ORDER = ("b2p", "b2b", "sep", "hanoi", "bowl")
AGENT_ORDER = ("llm-a", "naive", "react", "code")


@dataclass(frozen=True)
class GroupStats:
    task: str
    agent: str
    n: int
    successes: int
    infra_errors: int
    failures: dict[str, int]
    mean_rounds: float
    mean_tokens: float
    mean_wall: float

    @property
    def rate(self) -> float:
        return self.successes / self.n if self.n else 0.0


@dataclass
class ReportTable:
    groups: list[GroupStats] = field(default_factory=list)

    def text(self) -> str:
        return success_table(self) + "\n\n" + failure_table(self) + "\n\n" + cost_table(self)

    def rows(self) -> list[dict]:
        out = []
        for g in self.groups:
            row = {
                "task": g.task,
                "agent": g.agent,
                "episodes": g.n,
                "successes": g.successes,
                "success_rate": f"{g.rate:.4f}",
                "infra_errors": g.infra_errors,
                "mean_rounds": f"{g.mean_rounds:.3f}",
                "mean_tokens": f"{g.mean_tokens:.1f}",
                "mean_wall_s": f"{g.mean_wall:.4f}",
            }
            row.update({fc.value: g.failures[fc.value] for fc in FAILURE_ORDER})
            out.append(row)
        return out

    def csv(self) -> str:
        rows = self.rows()
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        return buf.getvalue()


def _order(value: str, known: tuple[str, ...]) -> tuple[int, str]:
    return (known.index(value) if value in known else len(known), value)


def _mean(values: list[float]) -> float:
    # fsum is exactly rounded, so the mean does not depend on record order
    return math.fsum(values) / len(values) if values else 0.0


def aggregate(records: Iterable[EpisodeRecord]) -> ReportTable:
    records = list(records)
    if not records:
        raise ValueError("aggregate needs at least one record")
    buckets: dict[tuple[str, str], list[EpisodeRecord]] = {}
    for r in records:
        buckets.setdefault((r.task.kind.value, r.agent), []).append(r)
    groups = []
    for (task, agent), rs in sorted(buckets.items(), key=lambda kv: (_order(kv[0][0], TASK_ORDER), _order(kv[0][1], AGENT_ORDER))):
        failures = {fc.value: 0 for fc in FAILURE_ORDER}
        for r in rs:
            if r.outcome == "failure":
                failures[r.failure_class or classify_failure(r).value] += 1
        groups.append(
            GroupStats(
                task,
                agent,
                len(rs),
                sum(r.success for r in rs),
                sum(r.outcome == "infra_error" for r in rs),
                failures,
                _mean([len(r.rounds) for r in rs]),
                _mean([r.tokens["prompt"] + r.tokens["response"] for r in rs]),
                _mean([r.wall_time for r in rs]),
            )
        )
    return ReportTable(groups)


def _grid(header: list[str], body: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))) for row in [header] + body]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _percent(rate: float) -> str:
    return f"{round(rate * 100)}%"


def success_table(table: ReportTable) -> str:
    tasks = sorted({g.task for g in table.groups}, key=lambda t: _order(t, TASK_ORDER))
    agents = sorted({g.agent for g in table.groups}, key=lambda a: _order(a, AGENT_ORDER))
    cell = {(g.task, g.agent): g for g in table.groups}
    body = []
    for a in agents:
        body.append([a] + [_percent(cell[(t, a)].rate) if (t, a) in cell else "-" for t in tasks])
    return "Success rate\n" + _grid(["agent"] + tasks, body)


def failure_table(table: ReportTable) -> str:
    cols = [(g.task, g.agent) for g in table.groups]
    header = ["failure"] + [f"{t}/{a}" for t, a in cols]
    body = []
    for fc in FAILURE_ORDER:
        body.append([fc.value] + [str(g.failures[fc.value]) for g in table.groups])
    return "Failure cases (episode counts)\n" + _grid(header, body)


def cost_table(table: ReportTable) -> str:
    body = [
        [f"{g.task}/{g.agent}", str(g.n), f"{g.mean_rounds:.2f}", f"{g.mean_tokens:.0f}", f"{g.mean_wall:.3f}", str(g.infra_errors)]
        for g in table.groups
    ]
    return "Cost\n" + _grid(["group", "episodes", "rounds", "tokens", "wall s", "infra"], body)
