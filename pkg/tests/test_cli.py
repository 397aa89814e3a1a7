from __future__ import annotations

import subprocess
import sys

import pytest

from affordbench.cli import build_parser, build_config, load_config_file, main
from affordbench.harness import read_log


def run_cli(*argv: str) -> int:
    return main(list(argv))


def test_run_report_render(tmp_path, capsys):
    out = tmp_path / "run"
    assert run_cli("run", "--task", "b2p,hanoi", "--agent", "llm-a,react", "--n", "3", "--out", str(out)) == 0
    text = capsys.readouterr().out
    assert "Success rate" in text and "Failure cases" in text
    header, records = read_log(str(out / "episodes.jsonl"))
    assert header["config"]["n"] == 3
    # react is skipped on hanoi
    assert sorted({(r.task.kind.value, r.agent) for r in records}) == [("b2p", "llm-a"), ("b2p", "react"), ("hanoi", "llm-a")]
    assert (out / "report.csv").read_text().startswith("task,agent,episodes")

    assert run_cli("report", "--log", str(out / "episodes.jsonl"), "--csv", str(tmp_path / "r.csv")) == 0
    assert "Success rate" in capsys.readouterr().out

    svg = tmp_path / "e.svg"
    assert run_cli("render", "--log", str(out / "episodes.jsonl"), "--episode", "1", "--task", "b2p", "--agent", "react", "--out", str(svg)) == 0
    assert svg.read_text().startswith("<svg")


def test_render_missing_episode(tmp_path, capsys):
    out = tmp_path / "run"
    run_cli("run", "--n", "1", "--out", str(out))
    assert run_cli("render", "--log", str(out / "episodes.jsonl"), "--episode", "99") == 1
    assert "no episode with seed 99" in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path):
    ini = tmp_path / "cfg.ini"
    ini.write_text("[run]\ntask = sep\nagent = naive\nn = 7\nk = 3\n\n[thresholds]\nseparation = 0.2\n")
    assert load_config_file(str(ini))["thresholds"] == {"separation": 0.2}
    args = build_parser().parse_args(["run", "--config", str(ini), "--n", "2"])
    cfg = build_config(args)
    assert (cfg.tasks, cfg.agents, cfg.n, cfg.k) == (["sep"], ["naive"], 2, 3)
    assert cfg.thresholds == {"separation": 0.2}


def test_from_log_reuses_header(tmp_path):
    out = tmp_path / "run"
    run_cli("run", "--task", "b2b", "--n", "2", "--k", "4", "--out", str(out))
    args = build_parser().parse_args(["run", "--from-log", str(out / "episodes.jsonl"), "--n", "1"])
    cfg = build_config(args)
    assert (cfg.tasks, cfg.k, cfg.n) == (["b2b"], 4, 1)


@pytest.mark.parametrize(
    "argv,message",
    [
        (["run", "--task", "juggle"], "juggle"),
        (["run", "--k", "0"], "--k"),
        (["run", "--backend", "remote"], "--endpoint"),
        (["run", "--det-miss", "1.5"], "miss rate"),
    ],
)
def test_bad_arguments(argv, message, capsys, tmp_path):
    assert run_cli(*argv, "--out", str(tmp_path)) == 1
    assert message in capsys.readouterr().err


def test_unknown_threshold_in_config(tmp_path, capsys):
    ini = tmp_path / "cfg.ini"
    ini.write_text("[thresholds]\nspeed = 2\n")
    assert run_cli("run", "--config", str(ini), "--out", str(tmp_path)) == 1
    assert "unknown thresholds" in capsys.readouterr().err


def test_missing_credential(monkeypatch, tmp_path, capsys):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    code = run_cli("run", "--backend", "remote", "--endpoint", "https://x", "--model", "m", "--out", str(tmp_path))
    assert code == 1
    assert "OPENAI_API_KEY" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "affordbench", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "run" in res.stdout
