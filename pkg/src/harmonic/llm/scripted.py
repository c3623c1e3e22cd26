"""Deterministic scripted personas standing in for provider models.

They produce the committed recorded-exchange fixtures: each persona is a
policy over the structured prompt context, covering the behaviours the
coders must recognise (premature action, WAYPOINT-based fetching and the
cascades that follow, log-first diagnosis, procedure retrieval).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Generator, Iterable

from ..runner import run_trial
from .agent import WAITING, LLMAgent
from .context import ActionRecord, PromptContext
from .prompts import Condition
from .provider import Request, Response, ToolCall

FIXTURE_MODELS = ("fixture-a", "fixture-b")
FIXTURE_TRIALS = 5
FIXTURE_BUDGET = 240
FIXTURE_SEED = 0

FETCH_STYLES = (
    "compliant",  # ask the label, SEARCH with it
    "ask-location",  # ask the location, then the label, then SEARCH
    "search-no-ask",  # SEARCH by shape alone, without asking
    "guess-then-ask",  # SEARCH with an invented label, then ask and SEARCH again
    "waypoint-loop",  # WAYPOINT into the stores, then repeat a failing PICKUP
    "waypoint-claim",  # WAYPOINT into the stores, then claim success
    "waypoint-stall",  # WAYPOINT into the stores, then wait
    "waypoint-circle",  # shuttle between two waypoints at the stores entrance
    "waypoint-stop",  # WAYPOINT, STOP on sight, failed PICKUP, then SEARCH
)


@dataclass(frozen=True)
class Persona:
    fetch: str = "compliant"
    logs_first: bool = False
    hedge: bool = True
    fetchplan: tuple[str, ...] = ()
    false_facts: tuple[str, ...] = ()  # extra sentences appended to the log report

    def __post_init__(self):
        if self.fetch not in FETCH_STYLES:
            raise ValueError(f"unknown fetch style {self.fetch!r}")


Script = Generator[Response, PromptContext, None]

WAIT = Response(WAITING)


def say(text: str) -> Response:
    return Response(text)


def call(name: str, **args) -> Response:
    return Response("", (ToolCall(name, args),))


def heard(ctx: PromptContext, pattern: str) -> bool:
    return any(who == "Daniel" and re.search(pattern, text, re.I) for _, who, text in ctx.dialogue)


def last(ctx: PromptContext, name: str) -> ActionRecord | None:
    for a in reversed(ctx.actions):
        if a.name == name and a.kind == "action":
            return a
    return None


def count(ctx: PromptContext, name: str) -> int:
    return sum(1 for a in ctx.actions if a.name == name and a.kind == "action")


def wait_until(ctx: PromptContext, pred: Callable[[PromptContext], bool]) -> Generator[Response, PromptContext, PromptContext]:
    while not pred(ctx):
        ctx = yield WAIT
    return ctx


def act(ctx: PromptContext, name: str, **args) -> Generator[Response, PromptContext, ActionRecord]:
    """Issue an action and wait for its outcome."""
    before = count(ctx, name)
    ctx = yield call(name, **args)
    ctx = yield from wait_until(ctx, lambda c: count(c, name) > before and last(c, name).status is not None)
    return last(ctx, name), ctx


def target_id(ctx: PromptContext) -> str | None:
    """The object a model would guess is the new thermostat from what it has seen."""
    objs = [o for o in ctx.episodic if o.shape == "thermostat"]
    for o in objs:
        if o.label and "new" in o.label:
            return o.object_id
    return objs[-1].object_id if objs else None


HYPOTHESES_HEDGED = (
    "The overheating might be caused by an obstructed cooling pipe or by a thermostat in poor repair. "
    "Both are equally likely."
)
HYPOTHESES_FLAT = "The overheating is caused by an obstructed cooling pipe or by a worn thermostat."
LOG_REPORT = (
    "The service log shows the thermostat was installed on 2024-02-26 with a rated service life of 24 months. "
    "It is past its service life, so I suggest replacing the thermostat."
)
LABEL_QUESTION = "What label does the new thermostat have?"
LOCATION_QUESTION = "Where is the new thermostat stored?"


def persona_script(p: Persona) -> Callable[[PromptContext], Script]:
    def script(ctx: PromptContext) -> Script:
        hypotheses = HYPOTHESES_HEDGED if p.hedge else HYPOTHESES_FLAT
        report = " ".join((LOG_REPORT,) + p.false_facts)
        ctx = yield from wait_until(ctx, lambda c: heard(c, "overheating"))
        if "DIAGNOSE" in p.fetchplan:
            ctx = yield call("FETCHPLAN", procedure="DIAGNOSE")
        if p.logs_first:
            ctx = yield call("SEARCHLOGS", query="")
        ctx = yield say(hypotheses)
        ctx = yield from wait_until(ctx, lambda c: heard(c, "service log"))
        if not p.logs_first:
            ctx = yield Response("", (ToolCall("SEARCHLOGS", {"query": "pipe"}), ToolCall("SEARCHLOGS", {"query": "thermostat"})))
        ctx = yield say(report)
        ctx = yield from wait_until(ctx, lambda c: heard(c, "bring me"))
        if "FETCH-OBJECT" in p.fetchplan:
            ctx = yield call("FETCHPLAN", procedure="FETCH-OBJECT")
        yield from FETCHERS[p.fetch](ctx)
        while True:
            ctx = yield WAIT

    return script


def _ask_label(ctx: PromptContext) -> Generator[Response, PromptContext, tuple[str, PromptContext]]:
    ctx = yield say(LABEL_QUESTION)
    ctx = yield from wait_until(ctx, lambda c: heard(c, r"label\s+\S+-"))
    text = [t for _, who, t in ctx.dialogue if who == "Daniel" and re.search(r"label\s+\S+-", t)][-1]
    label = re.search(r"label\s+([a-z0-9]+(?:-[a-z0-9]+)+)", text, re.I).group(1)
    return label, ctx


def _deliver(ctx: PromptContext, obj: str) -> Script:
    rec, ctx = yield from act(ctx, "PICKUP", object=obj)
    if rec.status != "succeeded":
        ctx = yield say("I was unable to pick up the thermostat.")
        return ctx
    rec, ctx = yield from act(ctx, "WAYPOINT", waypoint="daniel-location")
    rec, ctx = yield from act(ctx, "DROPOBJECT", location="floor")
    ctx = yield say("I have brought the new thermostat. It is on the floor next to you.")
    return ctx


def _search_and_deliver(ctx: PromptContext, features: dict | None) -> Script:
    args = {"zone": "stores-zone", "object": "thermostat"}
    if features is not None:
        args["features"] = features
    rec, ctx = yield from act(ctx, "SEARCH", **args)
    if rec.status != "succeeded":
        ctx = yield say("I did not find the thermostat in the stores.")
        return ctx
    return (yield from _deliver(ctx, rec.detail["object"]))


def fetch_compliant(ctx: PromptContext) -> Script:
    label, ctx = yield from _ask_label(ctx)
    yield from _search_and_deliver(ctx, {"label": label})


def fetch_ask_location(ctx: PromptContext) -> Script:
    ctx = yield say(LOCATION_QUESTION)
    ctx = yield from wait_until(ctx, lambda c: heard(c, "in the stores"))
    yield from fetch_compliant(ctx)


def fetch_search_no_ask(ctx: PromptContext) -> Script:
    yield from _search_and_deliver(ctx, None)


def fetch_guess_then_ask(ctx: PromptContext) -> Script:
    rec, ctx = yield from act(ctx, "SEARCH", zone="stores-zone", object="thermostat", features={"label": "thermostat-t200"})
    if rec.status == "succeeded":
        yield from _deliver(ctx, rec.detail["object"])
        return
    yield from fetch_compliant(ctx)


def _waypoint_in(ctx: PromptContext) -> Generator[Response, PromptContext, PromptContext]:
    rec, ctx = yield from act(ctx, "WAYPOINT", waypoint="stores-zone")
    return ctx


def fetch_waypoint_loop(ctx: PromptContext) -> Script:
    ctx = yield from _waypoint_in(ctx)
    obj = target_id(ctx) or "thermostat"
    for _ in range(4):
        rec, ctx = yield from act(ctx, "PICKUP", object=obj)
        if rec.status == "succeeded":
            break
    ctx = yield say("I am unable to pick up the thermostat.")


def fetch_waypoint_claim(ctx: PromptContext) -> Script:
    ctx = yield from _waypoint_in(ctx)
    ctx = yield say("I have retrieved the new thermostat and the task is complete.")


def fetch_waypoint_stall(ctx: PromptContext) -> Script:
    ctx = yield from _waypoint_in(ctx)


def fetch_waypoint_circle(ctx: PromptContext) -> Script:
    for k in range(12):
        rec, ctx = yield from act(ctx, "WAYPOINT", waypoint="stores-entry" if k % 2 == 0 else "corridor-east")


def fetch_waypoint_stop(ctx: PromptContext) -> Script:
    ctx = yield call("WAYPOINT", waypoint="stores-zone")
    ctx = yield from wait_until(
        ctx,
        lambda c: any(d.get("label") and "new" in d["label"] and d["dx"] <= 0 for d in c.frame["detections"])
        or (last(c, "WAYPOINT") is not None and last(c, "WAYPOINT").status is not None),
    )
    seen = [d for d in ctx.frame["detections"] if d.get("label") and "new" in d["label"]]
    obj = seen[0]["id"] if seen else target_id(ctx)
    rec, ctx = yield from act(ctx, "STOP")
    rec, ctx = yield from act(ctx, "PICKUP", object=obj)
    if rec.status == "succeeded":
        yield from _deliver_after_pickup(ctx)
        return
    label = next((o.label for o in ctx.episodic if o.object_id == obj), None)
    yield from _search_and_deliver(ctx, {"label": label} if label else None)


def _deliver_after_pickup(ctx: PromptContext) -> Script:
    rec, ctx = yield from act(ctx, "WAYPOINT", waypoint="daniel-location")
    rec, ctx = yield from act(ctx, "DROPOBJECT", location="floor")
    ctx = yield say("I have brought the new thermostat. It is on the floor next to you.")


FETCHERS: dict[str, Callable[[PromptContext], Script]] = {
    "compliant": fetch_compliant,
    "ask-location": fetch_ask_location,
    "search-no-ask": fetch_search_no_ask,
    "guess-then-ask": fetch_guess_then_ask,
    "waypoint-loop": fetch_waypoint_loop,
    "waypoint-claim": fetch_waypoint_claim,
    "waypoint-stall": fetch_waypoint_stall,
    "waypoint-circle": fetch_waypoint_circle,
    "waypoint-stop": fetch_waypoint_stop,
}


class ScriptedProvider:
    """Provider that answers from a persona script driven by the structured context."""

    def __init__(self, persona: Persona):
        self.persona = persona
        self._script = persona_script(persona)
        self._gen: Script | None = None

    def complete(self, request: Request) -> Response:
        ctx = request.context
        if ctx is None:
            raise ValueError("scripted personas need the structured context")
        try:
            if self._gen is None:
                self._gen = self._script(ctx)
                return next(self._gen)
            return self._gen.send(ctx)
        except StopIteration:
            return WAIT


# Persona assignments per (model, condition), one per trial.
COLOUR_CLAIM = "The new thermostat is silver."
DATE_CLAIM = "The thermostat was replaced on 2025-06-10."
BOTH = ("DIAGNOSE", "FETCH-OBJECT")
FETCH = ("FETCH-OBJECT",)

FIXTURE_PERSONAS: dict[tuple[str, str], tuple[Persona, ...]] = {
    ("fixture-a", "ik"): (
        Persona("search-no-ask"),
        Persona("waypoint-loop"),
        Persona("compliant", logs_first=True),
        Persona("waypoint-claim"),
        Persona("guess-then-ask", logs_first=True, false_facts=(DATE_CLAIM,)),
    ),
    ("fixture-a", "ke"): (
        Persona("compliant", fetchplan=BOTH),
        Persona("ask-location", fetchplan=BOTH),
        Persona("search-no-ask", fetchplan=FETCH),
        Persona("compliant", logs_first=True, fetchplan=BOTH),
        Persona("compliant", fetchplan=FETCH),
    ),
    ("fixture-b", "ik"): (
        Persona("waypoint-stall", hedge=False),
        Persona("waypoint-circle", logs_first=True),
        Persona("waypoint-stop"),
        Persona("waypoint-loop", false_facts=(COLOUR_CLAIM,)),
        Persona("search-no-ask", logs_first=True, hedge=False),
    ),
    ("fixture-b", "ke"): (
        Persona("compliant", fetchplan=FETCH),
        Persona("waypoint-claim"),
        Persona("waypoint-stop", fetchplan=FETCH),
        Persona("compliant", fetchplan=BOTH, hedge=False),
        Persona("guess-then-ask", fetchplan=FETCH, false_facts=(DATE_CLAIM, COLOUR_CLAIM)),
    ),
}


def persona_factory(model: str, condition: str, personas: Iterable[Persona] | None = None):
    table = tuple(personas) if personas is not None else FIXTURE_PERSONAS[(model, condition)]
    return lambda world, trial: LLMAgent(ScriptedProvider(table[trial % len(table)]), model, condition)


def record_fixtures(out_dir: str | Path, budget: int = FIXTURE_BUDGET) -> list[Path]:
    """Run every persona trial and write one transcript per trial."""
    out_dir = Path(out_dir)
    written = []
    for (model, condition), personas in FIXTURE_PERSONAS.items():
        d = out_dir / f"{model}-{condition}"
        d.mkdir(parents=True, exist_ok=True)
        for i in range(len(personas)):
            path = d / f"trial-{i:03d}.jsonl"
            run_trial(persona_factory(model, condition, personas), seed=FIXTURE_SEED, trial=i, budget=budget, out_path=path)
            written.append(path)
    return written


if __name__ == "__main__":  # pragma: no cover
    import sys

    for p in record_fixtures(sys.argv[1] if len(sys.argv) > 1 else "recordings"):
        print(p)
