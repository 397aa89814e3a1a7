"""Command line entry point: ``affordbench run|render|report``."""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .agent import AgentConfig, AgentKind
from .backends import BackendError, make_backend
from .harness import aggregate, read_log, render_trajectory, run_batch
from .harness.batch import THRESHOLD_KEYS
from .perception import NoiseConfig
from .tasks import TaskKind

log = logging.getLogger("affordbench")

LOG_NAME = "episodes.jsonl"


@dataclass
class RunConfig:
    tasks: list[str] = field(default_factory=lambda: ["b2p"])
    agents: list[str] = field(default_factory=lambda: ["llm-a"])
    backend: str = "oracle"
    endpoint: Optional[str] = None
    model: Optional[str] = None
    api_key_env: str = "OPENAI_API_KEY"
    k: int = 5
    max_rounds: int = 20
    n: int = 10
    seed: int = 0
    parallelism: int = 1
    det_noise: float = 0.005
    det_miss: float = 0.02
    step: float = 0.05
    timeout: Optional[float] = None
    thresholds: dict[str, float] = field(default_factory=dict)
    out: str = "runs/latest"

    def validate(self) -> None:
        for t in self.tasks:
            TaskKind(t)
        for a in self.agents:
            AgentKind(a)
        if self.k < 1:
            raise ValueError("--k must be at least 1")
        if self.max_rounds < 1:
            raise ValueError("--max-rounds must be at least 1")
        if self.n < 1:
            raise ValueError("--n must be at least 1")
        if self.parallelism < 1:
            raise ValueError("--parallelism must be at least 1")
        if not (0.0 <= self.det_miss <= 1.0) or self.det_noise < 0:
            raise ValueError("detector noise must be non-negative and the miss rate in [0, 1]")
        if self.backend not in ("oracle", "remote"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "remote" and not (self.endpoint and self.model):
            raise ValueError("the remote backend needs --endpoint and --model")
        bad = set(self.thresholds) - set(THRESHOLD_KEYS)
        if bad:
            raise ValueError(f"unknown thresholds {sorted(bad)}; known: {', '.join(THRESHOLD_KEYS)}")

    def agent_config(self) -> AgentConfig:
        return AgentConfig(
            k=self.k,
            max_rounds=self.max_rounds,
            noise=NoiseConfig(self.det_noise, self.det_miss),
            timeout=self.timeout,
            step=self.step,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


_CASTS = {
    "tasks": _split,
    "agents": _split,
    "k": int,
    "max_rounds": int,
    "n": int,
    "seed": int,
    "parallelism": int,
    "det_noise": float,
    "det_miss": float,
    "step": float,
    "timeout": float,
}
_ALIASES = {"task": "tasks", "agent": "agents"}


def load_config_file(path: str) -> dict:
    """Read ``[run]`` and ``[thresholds]`` sections of an INI file."""
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise ValueError(f"cannot read config file {path}")
    values: dict = {}
    if parser.has_section("run"):
        for key, raw in parser.items("run"):
            key = _ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
            if key not in RunConfig.__dataclass_fields__ or key == "thresholds":
                raise ValueError(f"{path}: unknown key {key!r} in [run]")
            values[key] = _CASTS.get(key, str)(raw)
    if parser.has_section("thresholds"):
        values["thresholds"] = {k: float(v) for k, v in parser.items("thresholds")}
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(args, "from_log", None):
        header, _ = read_log(args.from_log)
        if header is None:
            raise ValueError(f"{args.from_log} has no header line")
        unknown = set(header["config"]) - set(RunConfig.__dataclass_fields__)
        if unknown:
            raise ValueError(f"{args.from_log} was not written by 'affordbench run' (unexpected {sorted(unknown)})")
        values.update(header["config"])
    if args.config:
        values.update(load_config_file(args.config))
    flags = {
        "tasks": args.task,
        "agents": args.agent,
        "backend": args.backend,
        "endpoint": args.endpoint,
        "model": args.model,
        "k": args.k,
        "max_rounds": args.max_rounds,
        "n": args.n,
        "seed": args.seed,
        "parallelism": args.parallelism,
        "det_noise": args.det_noise,
        "det_miss": args.det_miss,
        "out": args.out,
    }
    for key, value in flags.items():
        if value is not None:
            values[key] = _split(value) if key in ("tasks", "agents") else value
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def cmd_run(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    backend = make_backend(cfg.backend, cfg.endpoint, cfg.model, **(
        {"api_key_env": cfg.api_key_env} if cfg.backend == "remote" else {}
    ))
    os.makedirs(cfg.out, exist_ok=True)
    log_path = os.path.join(cfg.out, LOG_NAME)
    records = []
    for task in cfg.tasks:
        for agent in cfg.agents:
            if TaskKind(task).gripper and agent in (AgentKind.PRIMITIVE.value, AgentKind.CODE.value):
                log.warning("skipping %s on %s: the baseline only covers pushing tasks", agent, task)
                continue
            log.info("running %s / %s, %d episodes", task, agent, cfg.n)
            records += run_batch(
                task, agent, backend, cfg.n, cfg.seed, cfg.parallelism, cfg.agent_config(),
                log_path, cfg.to_dict(), cfg.thresholds,
            )
    if not records:
        raise ValueError("nothing to run for this task and agent combination")
    table = aggregate(records)
    text = table.text()
    with open(os.path.join(cfg.out, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    with open(os.path.join(cfg.out, "report.csv"), "w", encoding="utf-8") as fh:
        fh.write(table.csv())
    print(text)
    print(f"\nlog: {log_path}")
    return 0


def _select(records, seed: int, task: Optional[str], agent: Optional[str]):
    for r in records:
        if r.seed == seed and (task is None or r.task.kind.value == task) and (agent is None or r.agent == agent):
            return r
    return None


def cmd_render(args: argparse.Namespace) -> int:
    _, records = read_log(args.log)
    rec = _select(records, args.episode, args.task, args.agent)
    if rec is None:
        raise ValueError(f"no episode with seed {args.episode} in {args.log}")
    out = args.out or f"episode_{rec.task.kind.value}_{rec.agent}_{rec.seed}.svg"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(render_trajectory(rec))
    print(out)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    _, records = read_log(args.log)
    if not records:
        raise ValueError(f"{args.log} has no episodes")
    table = aggregate(records)
    print(table.text())
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(table.csv())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="affordbench", description="Affordance-prompted tabletop manipulation benchmark.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run episodes and print a report")
    run.add_argument("--config", help="INI file with [run] and [thresholds] sections")
    run.add_argument("--from-log", help="reuse the configuration recorded in a log header")
    run.add_argument("--task", help="comma list of: " + ", ".join(k.value for k in TaskKind))
    run.add_argument("--agent", help="comma list of: " + ", ".join(a.value for a in AgentKind))
    run.add_argument("--backend", choices=["oracle", "remote"])
    run.add_argument("--endpoint", help="base URL of an OpenAI-compatible API")
    run.add_argument("--model")
    run.add_argument("--k", type=int, help="waypoints per round")
    run.add_argument("--max-rounds", type=int)
    run.add_argument("--n", type=int, help="episodes per task and agent")
    run.add_argument("--seed", type=int, help="first seed")
    run.add_argument("--parallelism", type=int)
    run.add_argument("--det-noise", type=float, help="detector box jitter")
    run.add_argument("--det-miss", type=float, help="per-object miss probability")
    run.add_argument("--out", help="output directory")
    run.set_defaults(func=cmd_run)

    ren = sub.add_parser("render", help="draw one logged episode as SVG")
    ren.add_argument("--log", required=True)
    ren.add_argument("--episode", type=int, required=True, help="episode seed")
    ren.add_argument("--task")
    ren.add_argument("--agent")
    ren.add_argument("--out")
    ren.set_defaults(func=cmd_render)

    rep = sub.add_parser("report", help="rebuild report tables from a log")
    rep.add_argument("--log", required=True)
    rep.add_argument("--csv")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, BackendError, OSError) as exc:
        print(f"affordbench: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
