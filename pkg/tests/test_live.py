"""Five real-model episodes; skipped unless AFFORDBENCH_LIVE=1.

Needs AFFORDBENCH_ENDPOINT, AFFORDBENCH_MODEL and the key variable named by
AFFORDBENCH_KEY_ENV (default OPENAI_API_KEY). Success rates from a live
model are reported, not asserted.
"""

from __future__ import annotations

import os

import pytest

from affordbench.backends.remote import RemoteBackend
from affordbench.harness import aggregate, read_log, run_batch

pytestmark = [
    pytest.mark.live,
    pytest.mark.skipif(os.environ.get("AFFORDBENCH_LIVE") != "1", reason="set AFFORDBENCH_LIVE=1 to call a real model"),
]


def test_live_smoke(tmp_path):
    backend = RemoteBackend(
        os.environ["AFFORDBENCH_ENDPOINT"],
        os.environ["AFFORDBENCH_MODEL"],
        api_key_env=os.environ.get("AFFORDBENCH_KEY_ENV", "OPENAI_API_KEY"),
    )
    path = str(tmp_path / "live.jsonl")
    records = run_batch("b2p", "llm-a", backend, 5, log_path=path)
    assert len(records) == 5
    _, logged = read_log(path)
    assert sorted(r.seed for r in logged) == [0, 1, 2, 3, 4]
    print()
    print(aggregate(records).text())
