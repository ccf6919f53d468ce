"""The agent backend contract and its error types."""

from __future__ import annotations

from typing import Protocol, runtime_checkable

from ..model import AgentOutput, AgentRole, TaskInput
from .context import DebateContext

__all__ = ["AgentBackend", "BackendError", "InsufficientAgents", "MissingFixtureEntry"]


class BackendError(RuntimeError):
    """One agent call failed; the engine records it and carries on without that agent."""


class InsufficientAgents(RuntimeError):
    """Fewer than two agents survived a round, so there is nothing to debate."""


class MissingFixtureEntry(LookupError):
    """A scripted backend was asked for a response its scenario does not contain.

    This is a fixture bug rather than an agent failure, so it is not caught by
    the engine.
    """


@runtime_checkable
class AgentBackend(Protocol):
    """Anything that can answer for an agent role.

    Implementations must tolerate concurrent ``generate`` calls unless they
    set ``serial = True``, in which case the engine calls them one at a time.
    Scripted implementations must be deterministic in ``(role, task, context)``.
    """

    serial: bool

    def generate(self, role: AgentRole, task: TaskInput, context: DebateContext) -> AgentOutput: ...
