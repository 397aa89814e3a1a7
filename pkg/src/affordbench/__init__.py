"""Affordance-prompted tabletop manipulation: simulator, prompts, agents and harness."""

from .agent import AgentConfig, AgentKind, run_episode
from .backends import OracleBackend, make_backend
from .tasks import TaskKind, check_success, sample_task

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "AgentKind",
    "OracleBackend",
    "TaskKind",
    "check_success",
    "make_backend",
    "run_episode",
    "sample_task",
]
