"""Batch runner with a streamed, resumable JSONL episode log."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import replace
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Optional

from ..agent import AgentConfig, AgentKind, run_episode
from ..backends.base import Backend
from ..records import BACKEND_ERROR, SCHEMA_VERSION, EpisodeRecord
from ..tasks import TaskKind, sample_task
from ..world import world_to_dict
from .classify import label

log = logging.getLogger(__name__)


def read_log(path: str) -> tuple[Optional[dict], list[EpisodeRecord]]:
    """Header and episodes from a log; a torn final line is skipped."""
    header: Optional[dict] = None
    records: list[EpisodeRecord] = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            if i == len(lines) - 1:
                log.warning("%s: ignoring incomplete last line", path)
                continue
            raise ValueError(f"{path}:{i + 1}: corrupt log line") from None
        if obj.get("type") == "header":
            if obj.get("schema") != SCHEMA_VERSION:
                raise ValueError(f"{path}: unsupported schema {obj.get('schema')!r}")
            header = obj
        elif obj.get("type") == "episode":
            records.append(EpisodeRecord.from_dict(obj))
    return header, records


class LogWriter:
    """Appends one JSON object per line; owned by a single thread."""

    def __init__(self, path: str, config: dict):
        self.path = path
        fresh = not os.path.exists(path) or os.path.getsize(path) == 0
        if not fresh:
            self._drop_torn_tail()
        self.fh = open(path, "a", encoding="utf-8")
        if fresh:
            self._write({"type": "header", "schema": SCHEMA_VERSION, "config": config})

    def _drop_torn_tail(self) -> None:
        with open(self.path, "rb+") as fh:
            data = fh.read()
            if data and not data.endswith(b"\n"):
                fh.truncate(data.rfind(b"\n") + 1)

    def _write(self, obj: dict) -> None:
        self.fh.write(json.dumps(obj) + "\n")
        self.fh.flush()

    def write(self, record: EpisodeRecord) -> None:
        self._write(record.to_dict())

    def close(self) -> None:
        self.fh.close()


THRESHOLD_KEYS = ("radius", "touch_gap", "separation", "bowl_radius")


def _run_one(
    kind: TaskKind, agent: AgentKind, seed: int, backend: Backend, config: AgentConfig, thresholds: dict
) -> EpisodeRecord:
    task = sample_task(kind, seed)
    if thresholds:
        task.params = replace(task.params, **thresholds)
    try:
        record = run_episode(agent, task, backend, config)
    except Exception as exc:  # noqa: BLE001 - any crash becomes an infra record
        log.exception("episode %s/%s seed %d crashed", kind.value, agent.value, seed)
        record = EpisodeRecord(
            task, agent.value, backend.describe(), config.to_dict(),
            termination=BACKEND_ERROR, final_state=world_to_dict(task.initial), error=repr(exc),
        )
    record.failure_class = label(record)
    return record


def run_batch(
    kind: TaskKind | str,
    agent: AgentKind | str,
    backend: Backend,
    n: int,
    base_seed: int = 0,
    parallelism: int = 1,
    config: Optional[AgentConfig] = None,
    log_path: Optional[str] = None,
    header: Optional[dict] = None,
    thresholds: Optional[dict] = None,
) -> list[EpisodeRecord]:
    """Run seeds base..base+n-1; records are logged as each one finishes.

    With an existing log, seeds already recorded for this task and agent are
    loaded instead of re-run.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if parallelism < 1:
        raise ValueError("parallelism must be at least 1")
    kind, agent = TaskKind(kind), AgentKind(agent)
    thresholds = dict(thresholds or {})
    unknown = set(thresholds) - set(THRESHOLD_KEYS)
    if unknown:
        raise ValueError(f"unknown thresholds: {sorted(unknown)}")
    config = config or AgentConfig()
    seeds = range(base_seed, base_seed + n)
    done: dict[int, EpisodeRecord] = {}
    if log_path and os.path.exists(log_path):
        _, previous = read_log(log_path)
        for r in previous:
            if r.task.kind is kind and r.agent == agent.value and r.seed in seeds:
                done[r.seed] = r
        if done:
            log.info("resuming: %d of %d seeds already logged", len(done), n)
    writer = LogWriter(log_path, header if header is not None else config.to_dict()) if log_path else None
    todo = [s for s in seeds if s not in done]
    try:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(_run_one, kind, agent, s, backend, config, thresholds) for s in todo]
            for fut in as_completed(futures):
                record = fut.result()
                done[record.seed] = record
                if writer is not None:
                    writer.write(record)
    finally:
        if writer is not None:
            writer.close()
    return [done[s] for s in seeds]
