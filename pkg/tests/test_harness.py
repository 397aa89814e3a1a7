from __future__ import annotations

import json
import os
import random
import re
from pathlib import Path

import pytest

from affordbench.agent import AgentConfig, run_llm_a_episode
from affordbench.backends.oracle import OracleBackend
from affordbench.harness import FailureClass, LogWriter, aggregate, classify_failure, read_log, render_trajectory, run_batch
from affordbench.harness.report import success_table
from affordbench.records import EpisodeRecord, replay_matches
from affordbench.tasks import sample_task
from classifier_fixtures import FIXTURES

HERE = Path(__file__).parent
FROZEN = HERE / "fixtures" / "classifier_episodes.jsonl"


def frozen_fixtures() -> list[tuple[str, str, EpisodeRecord]]:
    """Fixture episodes, generated once and then read back from disk."""
    if os.environ.get("UPDATE_GOLDEN") or not FROZEN.exists():
        FROZEN.parent.mkdir(exist_ok=True)
        with FROZEN.open("w", encoding="utf-8") as fh:
            for name, expected, build in FIXTURES:
                fh.write(json.dumps({"name": name, "expected": expected, "record": build().to_dict()}) + "\n")
    out = []
    for line in FROZEN.read_text(encoding="utf-8").splitlines():
        obj = json.loads(line)
        out.append((obj["name"], obj["expected"], EpisodeRecord.from_dict(obj["record"])))
    return out


@pytest.mark.parametrize("name,expected,build", FIXTURES, ids=[f[0] for f in FIXTURES])
def test_fixture_builders_classify(name, expected, build):
    rec = build()
    assert classify_failure(rec).value == expected
    assert classify_failure(rec) is classify_failure(rec)


def test_frozen_fixtures_classify_deterministically():
    fixtures = frozen_fixtures()
    assert len(fixtures) == 10
    assert {e for _, e, _ in fixtures} == {fc.value for fc in FailureClass}
    for _, expected, rec in fixtures:
        assert [classify_failure(rec).value for _ in range(3)] == [expected] * 3


def test_classify_rejects_non_failures(oracle):
    rec = run_llm_a_episode(sample_task("b2p", 8), oracle)
    assert rec.success
    with pytest.raises(ValueError):
        classify_failure(rec)


def _batch(tmp_path, n=6, **kw):
    return run_batch("b2p", "llm-a", OracleBackend(), n, log_path=str(tmp_path / "log.jsonl"), **kw)


def test_aggregate_is_permutation_invariant(tmp_path):
    records = _batch(tmp_path) + run_batch("b2p", "naive", OracleBackend(), 6)
    ref = aggregate(records).rows()
    rng = random.Random(0)
    for _ in range(5):
        shuffled = records[:]
        rng.shuffle(shuffled)
        assert aggregate(shuffled).rows() == ref


def test_success_table_format():
    records = run_batch("b2p", "naive", OracleBackend(), 5)
    for r, ok in zip(records, [True, True, True, False, False]):
        r.success = ok
        r.termination = "success" if ok else "max_rounds"
    text = success_table(aggregate(records))
    assert re.search(r"naive\s+60%", text)


def test_log_replay_gives_identical_aggregates(tmp_path):
    records = _batch(tmp_path, parallelism=3)
    header, logged = read_log(str(tmp_path / "log.jsonl"))
    assert header["type"] == "header"
    assert aggregate(logged).rows() == aggregate(records).rows()
    assert aggregate(logged).text() == aggregate(records).text()
    assert all(replay_matches(r) for r in logged)


class Counting(OracleBackend):
    def __init__(self):
        self.calls = 0

    def complete(self, request):
        self.calls += 1
        return super().complete(request)


def test_resume_after_interruption(tmp_path):
    path = tmp_path / "log.jsonl"
    full = run_batch("b2p", "llm-a", OracleBackend(), 5, log_path=str(path))
    lines = path.read_text().splitlines()
    # keep the header and two episodes, then a torn third line
    path.write_text("\n".join(lines[:3]) + "\n" + lines[3][:40])
    backend = Counting()
    resumed = run_batch("b2p", "llm-a", backend, 5, log_path=str(path))
    assert [r.seed for r in resumed] == [0, 1, 2, 3, 4]
    assert [r.final_state for r in resumed] == [r.final_state for r in full]
    _, logged = read_log(str(path))
    assert sorted(r.seed for r in logged) == [0, 1, 2, 3, 4]
    fresh = Counting()
    run_batch("b2p", "llm-a", fresh, 5, base_seed=100)
    assert backend.calls < fresh.calls


def test_read_log_rejects_corruption_mid_file(tmp_path):
    path = tmp_path / "log.jsonl"
    _batch(tmp_path, n=2)
    lines = path.read_text().splitlines()
    path.write_text("\n".join([lines[0], "{broken", *lines[1:]]) + "\n")
    with pytest.raises(ValueError):
        read_log(str(path))


def test_log_writer_header_once(tmp_path):
    path = str(tmp_path / "l.jsonl")
    LogWriter(path, {"a": 1}).close()
    LogWriter(path, {"a": 2}).close()
    header, records = read_log(path)
    assert header["config"] == {"a": 1} and records == []


def test_crash_becomes_infra_record():
    class Broken:
        name = "broken"

        def describe(self):
            return {"kind": "broken"}

        def complete(self, request):
            raise KeyError("boom")

    (rec,) = run_batch("b2p", "llm-a", Broken(), 1)
    assert rec.outcome == "infra_error" and "boom" in rec.error
    assert rec.failure_class is None


def test_thresholds_are_applied_and_validated():
    (rec,) = run_batch("b2p", "llm-a", OracleBackend(), 1, thresholds={"radius": 0.02})
    assert rec.task.params.radius == 0.02
    with pytest.raises(ValueError):
        run_batch("b2p", "llm-a", OracleBackend(), 1, thresholds={"speed": 1})


def test_render_golden():
    # seed 8 finishes in two full rounds of five waypoints
    rec = run_llm_a_episode(sample_task("b2p", 8), OracleBackend(), AgentConfig())
    assert len(rec.rounds) == 2 and rec.n_waypoints == 10
    svg = render_trajectory(rec)
    assert svg.count('class="waypoint"') == 10
    assert svg.count('class="block-initial"') == len(rec.task.initial.blocks)
    assert svg.count('class="affordance"') >= 4
    path = HERE / "golden" / "b2p_seed8.svg"
    if os.environ.get("UPDATE_GOLDEN") or not path.exists():
        path.write_text(svg, encoding="utf-8")
    assert svg == path.read_text(encoding="utf-8")
