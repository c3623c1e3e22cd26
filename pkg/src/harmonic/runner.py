"""Trial runner: interleaves the teammate script, a strategic agent, the
tactical controller and the world on one simulated clock.

Per tick: perception encode, teammate turns, delivery of strategic outputs
that have become due, strategic step, delivery of zero-latency outputs,
tactical tick, world step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from . import FIXTURE_VERSION
from .agent import DELAYED, AgentAborted, Dispatch, ExchangeRecord, Note, Outcome, Say, StepInput, ToolUse, Verdict, Wait
from .commands import CommandError, make_command
from .knowledge import default_knowledge
from .ontoagent import OntoAgent
from .sim import World, spawn
from .tactical import SkillState, SkillStatus, TacticalController
from .transcript import Transcript

DANIEL_LINES = {
    "M1": "The engine is overheating.",
    "M3": "Can you check the service log?",
    "M5": "Please bring me a new thermostat.",
    "M7": "It has the label thermostat-new.",
    "M7-location": "It is in the stores.",
}


class DanielScript:
    """The scripted teammate.

    M1 opens the trial; M3 follows the robot's first reply to M1; M5
    follows its first reply to M3; after M5 a question about location gets
    the location answer and any other question gets the label. Each turn
    fires at most once, ``delay`` ticks after its trigger.
    """

    def __init__(self, delay: int = 1):
        self.delay = delay
        self.fired: set[str] = set()
        self.queue: list[tuple[int, str, str]] = [(0, "M1", DANIEL_LINES["M1"])]

    def _schedule(self, tick: int, key: str) -> None:
        if key in self.fired or any(k == key for _, k, _ in self.queue):
            return
        self.queue.append((tick + self.delay, key, DANIEL_LINES[key]))

    def observe(self, text: str, tick: int) -> None:
        """Note a robot utterance and schedule any turn it triggers."""
        if "M1" in self.fired and "M3" not in self.fired:
            self._schedule(tick, "M3")
        elif "M3" in self.fired and "M5" not in self.fired:
            self._schedule(tick, "M5")
        elif "M5" in self.fired and text.rstrip().endswith("?"):
            if "where" in text.lower():
                self._schedule(tick, "M7-location")
            elif "rephrase" not in text.lower():
                self._schedule(tick, "M7")

    def due(self, tick: int) -> list[str]:
        now = [(k, line) for t, k, line in self.queue if t <= tick]
        self.queue = [q for q in self.queue if q[0] > tick]
        for key, _ in now:
            self.fired.add(key)
        return [line for _, line in now]


class ScriptedInput:
    """Teammate turns supplied by a callable (REPL, tests)."""

    def __init__(self, source: Callable[[int], list[str]]):
        self.source = source

    def observe(self, text: str, tick: int) -> None:
        pass

    def due(self, tick: int) -> list[str]:
        return list(self.source(tick))


@dataclass
class TrialResult:
    transcript: Transcript
    world: World
    delivered: bool
    aborted: bool
    ticks: int


@dataclass
class TrialRunner:
    agent: object
    world: World
    teammate: object = field(default_factory=DanielScript)
    budget: int | None = None
    log_perception: bool = True
    on_tick: Callable[[int, list], None] | None = None

    def __post_init__(self):
        self.controller = TacticalController()
        self.pending: list[tuple[int, object]] = []
        self.outcomes: list[Outcome] = []
        self.candidates: list[SkillStatus] = []
        self.heard: list[str] = []
        self.commands: dict[int, object] = {}
        self.open: set[int] = set()
        self.next_id = 0

    # -- plumbing -----------------------------------------------------------

    def _close(self, t: Transcript, tick: int, cid: int | None, status: str, detail: dict) -> None:
        if cid is None or cid not in self.open:
            return
        self.open.discard(cid)
        t.append(tick, "outcome", {"id": cid, "status": status, "detail": detail})
        self.outcomes.append(Outcome(cid, self.commands[cid], status, detail))

    def _deliver(self, t: Transcript, tick: int, printed: list) -> None:
        due = [o for d, o in self.pending if d <= tick]
        self.pending = [(d, o) for d, o in self.pending if d > tick]
        for out in due:
            printed.append(out)
            if isinstance(out, Say):
                payload = {"speaker": "robot", "text": out.text}
                if out.gmr:
                    payload["gmr"] = out.gmr
                t.append(tick, "dialogue", payload)
                self.teammate.observe(out.text, tick)
            elif isinstance(out, Dispatch):
                self.next_id += 1
                cid = self.next_id
                self.commands[cid] = out.command
                self.open.add(cid)
                t.append(tick, "action", {"id": cid, "command": out.command.as_dict()})
                try:
                    statuses = self.controller.decode_command(out.command, tick, self.world, cid)
                except CommandError as exc:
                    self._close(t, tick, cid, "rejected", {"reason": str(exc)})
                    continue
                for st in statuses:
                    if st.detail.get("preempted"):
                        self._close(t, tick, st.command_id, "preempted", {})
                    else:
                        self._close(t, tick, st.command_id, st.state.value, dict(st.detail))
            elif isinstance(out, Verdict):
                self.controller.deliver_verdict(out.object_id, out.match, tick)
                t.append(
                    tick, "reasoning", {"decision": "verdict", "cites": [], "detail": {"object": out.object_id, "match": out.match}}
                )

    def _record(self, t: Transcript, tick: int, out) -> None:
        if isinstance(out, Note):
            t.append(tick, "reasoning", out.as_dict())
        elif isinstance(out, ToolUse):
            payload = {"name": out.name, "args": out.args, "result": out.result}
            if out.error:
                payload["error"] = out.error
            t.append(tick, "tool", payload)
        elif isinstance(out, ExchangeRecord):
            t.append(tick, "exchange", out.payload)
        elif isinstance(out, Wait):
            t.append(tick, "reasoning", {"decision": "waiting", "cites": [], "detail": {}})

    # -- the loop -------------------------------------------------------------

    def run(self, transcript: Transcript) -> TrialResult:
        t = transcript
        world = self.world
        if hasattr(self.agent, "attach"):
            self.agent.attach(t)
        budget = self.budget if self.budget is not None else world.config.tick_budget
        latency = int(getattr(self.agent, "latency", 0))
        aborted = False
        tick = 0
        for tick in range(budget):
            printed: list = []
            frame = self.controller.encode(world, tick)
            if self.log_perception:
                t.append(tick, "perception", frame.as_dict())
            new = self.teammate.due(tick)
            for line in new:
                t.append(tick, "dialogue", {"speaker": "daniel", "text": line})
            # turns heard while the strategic slot is busy wait for the next step
            self.heard += new
            self._deliver(t, tick, printed)
            if not self.pending:
                event = StepInput(tick, frame, tuple(self.heard), tuple(self.outcomes), tuple(self.candidates))
                self.heard, self.outcomes, self.candidates = [], [], []
                try:
                    outputs = self.agent.step(event)
                except AgentAborted as exc:
                    t.append(tick, "reasoning", {"decision": "abort", "cites": [], "detail": {"error": str(exc)}})
                    aborted = True
                    break
                for out in outputs:
                    if isinstance(out, DELAYED):
                        self.pending.append((tick + latency, out))
                    else:
                        self._record(t, tick, out)
                self._deliver(t, tick, printed)
            actuation, statuses = self.controller.tick(world, tick)
            for st in statuses:
                if st.state is SkillState.RUNNING and "candidate" in st.detail:
                    self.candidates.append(st)
                    t.append(tick, "perception", {"skill-status": st.as_dict()})
                elif st.state in (SkillState.SUCCEEDED, SkillState.FAILED):
                    self._close(t, tick, st.command_id, st.state.value, dict(st.detail))
            world.step(actuation)
            if self.on_tick is not None:
                self.on_tick(tick, printed)
            if world.is_delivered() and getattr(self.agent, "finished", False) and not self.pending:
                break
            if getattr(self.teammate, "closed", False):
                break
        end_tick = tick
        for cid in sorted(self.open):
            self.open.discard(cid)
            t.append(end_tick, "outcome", {"id": cid, "status": "aborted", "detail": {}})
        delivered = world.is_delivered()
        t.append(
            end_tick,
            "outcome",
            {"kind": "trial-end", "delivered": delivered, "aborted": aborted, "ticks": end_tick + 1, "world": world.snapshot()},
        )
        return TrialResult(t, world, delivered, aborted, end_tick + 1)


# --------------------------------------------------------------------------
# Batch runs
# --------------------------------------------------------------------------


def make_ontoagent(world: World, latency: int = 0) -> OntoAgent:
    cfg = world.config
    return OntoAgent(
        default_knowledge(),
        latency=latency,
        cruise_speed=cfg.cruise_speed,
        grasp_radius=cfg.grasp_radius,
        scenario_date=cfg.scenario_date,
        zones=tuple(z for z, zone in world.zones.items() if zone.sweep),
        waypoints=tuple(world.nav.waypoints),
    )


def header_for(agent, seed: int, **extra) -> dict:
    return {
        "agent": agent.kind,
        "model": getattr(agent, "model", None),
        "condition": getattr(agent, "condition", None),
        "seed": seed,
        "fixture_version": FIXTURE_VERSION,
        **extra,
    }


def run_trial(
    agent_factory: Callable[[World, int], object],
    *,
    seed: int = 0,
    trial: int = 0,
    fixture_text: str | None = None,
    budget: int | None = None,
    out_path: str | Path | None = None,
    teammate=None,
    **world_overrides,
) -> TrialResult:
    world = spawn(seed, fixture_text, **world_overrides)
    agent = agent_factory(world, trial)
    runner = TrialRunner(agent, world, teammate or DanielScript(), budget)
    header = header_for(agent, seed, budget=budget if budget is not None else world.config.tick_budget)
    if out_path is None:
        return runner.run(Transcript(header))
    with open(out_path, "w", encoding="utf-8") as sink:
        result = runner.run(Transcript(header, sink=sink))
    return result


def run_trials(
    agent_factory: Callable[[World, int], object],
    trials: int,
    seed: int = 0,
    *,
    out_dir: str | Path | None = None,
    prefix: str = "trial",
    fixture_text: str | None = None,
    budget: int | None = None,
) -> list[TrialResult]:
    """Run ``trials`` trials; transcripts are written incrementally when ``out_dir`` is set."""
    results = []
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    for i in range(trials):
        path = Path(out_dir) / f"{prefix}-{i:03d}.jsonl" if out_dir is not None else None
        results.append(
            run_trial(agent_factory, seed=seed, trial=i, fixture_text=fixture_text, budget=budget, out_path=path)
        )
    return results


def ontoagent_factory(latency: int = 0) -> Callable[[World, int], OntoAgent]:
    return lambda world, trial: make_ontoagent(world, latency)


# --------------------------------------------------------------------------
# Overshoot experiment: strategic STOP versus tactical SEARCH
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OvershootResult:
    strategy: str
    latency: int
    cruise_speed: float
    halt_distance: float  # from the robot's halt pose to the target
    past_target: float  # forward distance past the target at halt (negative: short of it)
    pickup_succeeded: bool
    ticks: int


def overshoot_trial(
    strategy: str, latency: int = 1, cruise_speed: float = 1.0, target: str | None = None, seed: int = 0
) -> OvershootResult:
    """Drive through the stores toward ``target`` and try to pick it up.

    ``waypoint``: WAYPOINT(stores-zone); the strategic side issues STOP on
    the first perception frame in which the robot is level with or past the
    target, and the STOP lands ``latency`` ticks later.
    ``search``: SEARCH(stores-zone, shape); candidate verdicts (by label)
    also take ``latency`` ticks.
    Either way PICKUP follows once the robot has halted.
    """
    if latency < 1:
        raise ValueError("latency must be at least one tick")
    world = spawn(seed, cruise_speed=cruise_speed)
    target = target or world.config.target_object
    entry = world.nav.waypoints["stores-entry"]
    world.robot.x, world.robot.y = entry
    ctl = TacticalController()
    tx, ty = world.object_position(target)
    label = world.objects[target].label
    shape = world.objects[target].shape
    if strategy == "waypoint":
        first = make_command("WAYPOINT", {"waypoint": "stores-zone"})
    elif strategy == "search":
        first = make_command("SEARCH", {"zone": "stores-zone", "object": shape})
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    ctl.decode_command(first, 0, world, 1)
    pending: list[tuple[int, str, object]] = []
    halted_at = None
    stop_sent = False
    tick = 0
    for tick in range(world.config.tick_budget):
        frame = ctl.encode(world, tick)
        for due, kind, payload in [p for p in pending if p[0] <= tick]:
            if kind == "command":
                ctl.decode_command(payload, tick, world, 2)
                halted_at = tick
            else:
                ctl.deliver_verdict(*payload, tick)
        pending = [p for p in pending if p[0] > tick]
        if strategy == "waypoint" and not stop_sent:
            if any(d.object_id == target for d in frame.detections) and frame.x - tx >= -1e-9:
                pending.append((tick + latency, "command", make_command("STOP")))
                stop_sent = True
        act, statuses = ctl.tick(world, tick)
        for st in statuses:
            if strategy == "search" and "candidate" in st.detail:
                cand = st.detail["candidate"]
                pending.append((tick + latency, "verdict", (cand["object"], cand["label"] == label)))
            if st.state is SkillState.SUCCEEDED and st.skill in ("search", "stop", "waypoint"):
                halted_at = tick
            if st.state is SkillState.FAILED:
                halted_at = tick
        world.step(act)
        if halted_at is not None and ctl.active_skill == "idle":
            break
    r = world.robot
    halt_distance = math.dist((r.x, r.y), (tx, ty))
    pickup = make_command("PICKUP", {"object": target})
    ctl.decode_command(pickup, tick + 1, world, 3)
    act, statuses = ctl.tick(world, tick + 1)
    world.step(act)
    ok = any(s.state is SkillState.SUCCEEDED for s in statuses)
    return OvershootResult(strategy, latency, cruise_speed, halt_distance, r.x - tx, ok, tick + 1)


def overshoot_sweep(
    latencies: Iterable[int] = (1, 2, 3), speeds: Iterable[float] = (0.5, 1.0)
) -> list[tuple[OvershootResult, OvershootResult]]:
    return [
        (overshoot_trial("waypoint", L, v), overshoot_trial("search", L, v)) for L in latencies for v in speeds
    ]
