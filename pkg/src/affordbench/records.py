"""Per-round and per-episode logs, JSON round-tripping, and replay."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

from .simulator import step_to_waypoint
from .tasks import TaskInstance
from .world import WorldState, world_from_dict, world_to_dict

SCHEMA_VERSION = 1

# termination reasons
SUCCESS = "success"
OFF_TABLE = "off_table"
PLANNER_PARSE = "planner_parse"
CONTROLLER_PARSE = "controller_parse"
ACTION_PARSE = "action_parse"
MAX_ROUNDS = "max_rounds"
BACKEND_ERROR = "backend_error"
TIMEOUT = "timeout"


@dataclass
class RoundRecord:
    index: int
    start_state: dict
    detections: list[dict] = field(default_factory=list)
    omitted: list[str] = field(default_factory=list)
    scene: str = ""
    parts: dict[str, list[str]] = field(default_factory=dict)  # letter -> [owner, side]
    prompts: list[dict] = field(default_factory=list)  # {"role", "text"}
    responses: list[dict] = field(default_factory=list)
    planner: Optional[dict] = None
    sequence: Optional[list[list[float]]] = None
    executed: list[list[float]] = field(default_factory=list)
    outcomes: list[dict] = field(default_factory=list)
    retries: int = 0
    warnings: list[str] = field(default_factory=list)
    chosen: Optional[list[str]] = None  # [owner, side] the round meant to act on
    end_state: Optional[dict] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> RoundRecord:
        return cls(**d)


@dataclass
class EpisodeRecord:
    task: TaskInstance
    agent: str
    backend: dict
    config: dict
    rounds: list[RoundRecord] = field(default_factory=list)
    success: bool = False
    termination: str = MAX_ROUNDS
    final_state: Optional[dict] = None
    wall_time: float = 0.0
    tokens: dict[str, int] = field(default_factory=lambda: {"prompt": 0, "response": 0})
    failure_class: Optional[str] = None
    error: Optional[str] = None

    @property
    def outcome(self) -> str:
        if self.success:
            return "success"
        if self.termination == BACKEND_ERROR:
            return "infra_error"
        return "failure"

    @property
    def seed(self) -> int:
        return self.task.seed

    @property
    def n_waypoints(self) -> int:
        return sum(len(r.executed) for r in self.rounds)

    def to_dict(self) -> dict:
        return {
            "type": "episode",
            "schema": SCHEMA_VERSION,
            "task": self.task.to_dict(),
            "agent": self.agent,
            "backend": self.backend,
            "config": self.config,
            "rounds": [r.to_dict() for r in self.rounds],
            "success": self.success,
            "termination": self.termination,
            "outcome": self.outcome,
            "final_state": self.final_state,
            "wall_time": self.wall_time,
            "tokens": self.tokens,
            "failure_class": self.failure_class,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> EpisodeRecord:
        if d.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ValueError(f"unsupported log schema {d.get('schema')!r}")
        return cls(
            task=TaskInstance.from_dict(d["task"]),
            agent=d["agent"],
            backend=d["backend"],
            config=d["config"],
            rounds=[RoundRecord.from_dict(r) for r in d["rounds"]],
            success=d["success"],
            termination=d["termination"],
            final_state=d.get("final_state"),
            wall_time=d.get("wall_time", 0.0),
            tokens=d.get("tokens", {"prompt": 0, "response": 0}),
            failure_class=d.get("failure_class"),
            error=d.get("error"),
        )


def replay(record: EpisodeRecord) -> WorldState:
    """Re-execute the recorded waypoints from the initial state."""
    state = record.task.initial
    micro = record.config.get("micro_step")
    for r in record.rounds:
        for p in r.executed:
            state = (step_to_waypoint(state, p, micro) if micro else step_to_waypoint(state, p)).new_state
    return state


def replay_matches(record: EpisodeRecord) -> bool:
    return record.final_state is not None and world_to_dict(replay(record)) == record.final_state


def final_world(record: EpisodeRecord) -> WorldState:
    return world_from_dict(record.final_state) if record.final_state else replay(record)
