"""Strategic agent backed by a language-model provider."""

from __future__ import annotations

from dataclasses import dataclass

import jsonschema

from ..agent import AgentAborted, Dispatch, ExchangeRecord, Note, Say, StepInput, ToolUse, Verdict, Wait
from ..commands import COMMAND_NAMES, CommandError, make_command
from ..knowledge import KnowledgeBase, default_knowledge
from ..transcript import Transcript
from .context import PromptContext, build_context
from .prompts import (
    FETCHPLAN_SCHEMA,
    SEARCHLOGS_SCHEMA,
    Condition,
    ToolNotAvailable,
    UnknownProcedure,
    build_system_prompt,
    fetchplan,
    tool_schemas,
)
from .provider import Provider, ProviderError, Request, Response

WAITING = ":::WAITING:::"

# Known storage location of spare parts, available to both agent kinds.
DEFAULT_MEMORY = (("thermostat", "stores-zone"),)


@dataclass(frozen=True)
class InfoCall:
    """A validated information-tool request (SEARCHLOGS or FETCHPLAN)."""

    name: str
    args: dict


def parse_output(response: Response) -> list:
    """Map a provider response onto Say, Wait, Dispatch, InfoCall and error ToolUse items.

    Text equal to the waiting signal (after trimming) is a Wait; any other
    text is an utterance. At most one action tool is honoured per cycle;
    schema-invalid or surplus calls become error records.
    """
    out: list = []
    text = response.text.strip()
    if text == WAITING:
        out.append(Wait())
    elif text:
        out.append(Say(text))
    acted = False
    for call in response.tool_calls:
        if call.name in COMMAND_NAMES:
            if acted:
                out.append(ToolUse(call.name, call.args, None, "only one action tool may be called per cycle"))
                continue
            try:
                out.append(Dispatch(make_command(call.name, call.args)))
                acted = True
            except CommandError as exc:
                out.append(ToolUse(call.name, call.args, None, str(exc)))
        elif call.name in ("SEARCHLOGS", "FETCHPLAN"):
            schema = SEARCHLOGS_SCHEMA if call.name == "SEARCHLOGS" else FETCHPLAN_SCHEMA
            try:
                jsonschema.validate(call.args, schema)
            except jsonschema.ValidationError as exc:
                out.append(ToolUse(call.name, call.args, None, f"{call.name}: {exc.message}"))
                continue
            out.append(InfoCall(call.name, dict(call.args)))
        else:
            out.append(ToolUse(call.name, call.args, None, f"unknown tool {call.name!r}"))
    return out


def _matches(candidate: dict, features: dict) -> bool:
    for key, want in features.items():
        have = candidate.get("label") if key == "label" else (candidate.get("features") or {}).get(key)
        if have is None or str(have).lower() != str(want).lower():
            return False
    return True


class LLMAgent:
    """Drop-in strategic layer: one provider exchange per strategic step.

    The prompt context is rebuilt from the trial transcript each step, so the
    agent must be attached to the transcript the runner writes.
    """

    kind = "llm"

    def __init__(
        self,
        provider: Provider,
        model: str,
        condition: Condition | str,
        *,
        kb: KnowledgeBase | None = None,
        latency: int = 1,
        temperature: float = 0.0,
        memory: tuple[tuple[str, str], ...] = DEFAULT_MEMORY,
    ):
        if latency < 0:
            raise ValueError("latency must be non-negative")
        self.provider = provider
        self.model = model
        self.condition = Condition(condition).value
        self.kb = kb or default_knowledge()
        self.latency = latency
        self.temperature = temperature
        self.memory = memory
        self.system = build_system_prompt(self.condition)
        self.tools = tuple(tool_schemas(self.condition))
        self.transcript: Transcript | None = None
        self.position = 0
        self._search_features: dict = {}
        self._dropped = False
        self._finished = False
        self._started = False

    def attach(self, transcript: Transcript) -> None:
        self.transcript = transcript

    @property
    def finished(self) -> bool:
        return self._finished

    def memory_lines(self) -> tuple[str, ...]:
        return tuple(f"spare {concept}s are stored in {zone}" for concept, zone in self.memory)

    def context(self, frame: dict) -> PromptContext:
        if self.transcript is None:
            raise RuntimeError("LLMAgent must be attached to a transcript before stepping")
        return build_context(self.transcript.events, frame, self.system, self.memory_lines())

    def request(self, ctx: PromptContext) -> Request:
        return Request(self.model, self.system, tuple(ctx.messages()), self.tools, self.temperature, ctx)

    # -- tools ------------------------------------------------------------

    def execute(self, call: InfoCall) -> ToolUse:
        if call.name == "SEARCHLOGS":
            entries = self.kb.search_logs(call.args["query"])
            return ToolUse("SEARCHLOGS", call.args, [e.as_dict() for e in entries])
        try:
            return ToolUse("FETCHPLAN", call.args, fetchplan(call.args["procedure"], self.condition))
        except (ToolNotAvailable, UnknownProcedure) as exc:
            return ToolUse("FETCHPLAN", call.args, None, str(exc))

    # -- the step ----------------------------------------------------------

    def step(self, event: StepInput) -> list:
        out: list = []
        if not self._started:
            self._started = True
            for concept, zone in self.memory:
                out.append(Note("memory", ("episodic",), {"concept": concept, "located-in": zone}))
        for o in event.outcomes:
            if o.command.name == "DROPOBJECT" and o.status == "succeeded":
                self._dropped = True
        for st in event.candidates:
            cand = st.detail["candidate"]
            out.append(Verdict(cand["object"], _matches(cand, self._search_features)))
        request = self.request(self.context(event.frame.as_dict()))
        try:
            response = self.provider.complete(request)
        except ProviderError as exc:
            raise AgentAborted(str(exc)) from exc
        out.append(
            ExchangeRecord(
                {
                    "position": self.position,
                    "model": self.model,
                    "temperature": self.temperature,
                    "latency": self.latency,
                    "request_digest": request.digest(),
                    "response": response.as_dict(),
                }
            )
        )
        self.position += 1
        spoke = False
        for item in parse_output(response):
            if isinstance(item, InfoCall):
                out.append(self.execute(item))
                continue
            if isinstance(item, Dispatch) and item.command.name == "SEARCH":
                self._search_features = dict(item.command.as_dict()["params"].get("features") or {})
            if isinstance(item, (Say, Wait)):
                spoke = True
            out.append(item)
        if self._dropped and spoke:
            self._finished = True
        return out
