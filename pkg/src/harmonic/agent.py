"""Interface shared by the strategic agents (knowledge-based and LLM-backed)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Protocol

from .commands import Command
from .tactical import PerceptionFrame, SkillStatus


@dataclass(frozen=True)
class Outcome:
    """Result of a dispatched command, as seen by the strategic layer."""

    command_id: int
    command: Command
    status: str  # succeeded | failed | preempted | rejected
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class StepInput:
    tick: int
    frame: PerceptionFrame
    dialogue: tuple[str, ...] = ()
    outcomes: tuple[Outcome, ...] = ()
    candidates: tuple[SkillStatus, ...] = ()


# -- outputs ----------------------------------------------------------------


@dataclass(frozen=True)
class Say:
    text: str
    gmr: str | None = None


@dataclass(frozen=True)
class Dispatch:
    command: Command


@dataclass(frozen=True)
class Verdict:
    object_id: str
    match: bool


@dataclass(frozen=True)
class Note:
    """Reasoning-trace record; ``cites`` names scripts, cause links, requirements."""

    decision: str
    cites: tuple[str, ...] = ()
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"decision": self.decision, "cites": list(self.cites), "detail": self.detail}


@dataclass(frozen=True)
class ToolUse:
    name: str
    args: dict
    result: Any
    error: str | None = None


@dataclass(frozen=True)
class Wait:
    pass


@dataclass(frozen=True)
class ExchangeRecord:
    """One provider round trip (LLM agents only)."""

    payload: dict


Output = Say | Dispatch | Verdict | Note | ToolUse | Wait | ExchangeRecord

# Outputs that travel through the translation layer and so arrive after the
# agent's deliberation latency.
DELAYED = (Say, Dispatch, Verdict)


class AgentAborted(RuntimeError):
    """Unrecoverable agent failure (e.g. provider error); aborts the trial."""


class StrategicAgent(Protocol):
    kind: str
    model: str | None
    condition: str | None
    latency: int

    def step(self, event: StepInput) -> list:  # list[Output]
        ...

    @property
    def finished(self) -> bool:
        ...
