from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol


@dataclass(frozen=True)
class CompletionRequest:
    system: str
    user: str
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


class BackendError(RuntimeError):
    """The model backend could not produce a response."""


class Backend(Protocol):
    name: str

    def complete(self, request: CompletionRequest) -> str: ...

    def describe(self) -> dict: ...
