"""Tactical layer: blackboard, behavior tree, skill library and translation layer."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable

from .commands import Command, CommandError, validate_params
from .sim import Actuation, World

# --------------------------------------------------------------------------
# Blackboard
# --------------------------------------------------------------------------

PERCEPTION_KEYS = frozenset({"pose", "speed", "detections", "collision", "gripper-contents"})
COMMAND_KEYS = frozenset({"active-skill", "skill-params", "execution-flags"})
OUTCOME_KEYS = frozenset({"skill-status"})
WRITER_KEYS = {"encoder": PERCEPTION_KEYS, "decoder": COMMAND_KEYS, "skill": OUTCOME_KEYS}


class BlackboardViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class Entry:
    value: Any
    tick: int
    writer: str


class Blackboard:
    """Tick-stamped store with one writer role per key group."""

    def __init__(self):
        self._entries: dict[str, Entry] = {}

    def write(self, role: str, key: str, value: Any, tick: int) -> None:
        self.write_many(role, {key: value}, tick)

    def write_many(self, role: str, items: dict[str, Any], tick: int) -> None:
        allowed = WRITER_KEYS.get(role)
        if allowed is None:
            raise BlackboardViolation(f"unknown writer role {role!r}")
        for key in items:
            if key not in allowed:
                raise BlackboardViolation(f"{role} may not write {key!r}")
            prev = self._entries.get(key)
            if prev is not None and prev.tick == tick and prev.writer != role:
                raise BlackboardViolation(f"{key!r} written by {prev.writer} and {role} in tick {tick}")
        for key, value in items.items():
            self._entries[key] = Entry(value, tick, role)

    def read(self, key: str, default=None):
        entry = self._entries.get(key)
        return default if entry is None else entry.value

    def entry(self, key: str) -> Entry | None:
        return self._entries.get(key)

    def keys(self) -> list[str]:
        return sorted(self._entries)


# --------------------------------------------------------------------------
# Behavior tree
# --------------------------------------------------------------------------


class Status(str, enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    RUNNING = "running"


class Node:
    name = "node"

    def tick(self, ctx) -> Status:
        raise NotImplementedError


class Sequence(Node):
    def __init__(self, *children: Node, name: str = "sequence"):
        self.children, self.name = children, name

    def tick(self, ctx) -> Status:
        for child in self.children:
            status = child.tick(ctx)
            if status is not Status.SUCCESS:
                return status
        return Status.SUCCESS


class Selector(Node):
    def __init__(self, *children: Node, name: str = "selector"):
        self.children, self.name = children, name

    def tick(self, ctx) -> Status:
        for child in self.children:
            status = child.tick(ctx)
            if status is not Status.FAILURE:
                return status
        return Status.FAILURE


class Condition(Node):
    def __init__(self, predicate: Callable[[Any], bool], name: str = "condition"):
        self.predicate, self.name = predicate, name

    def tick(self, ctx) -> Status:
        return Status.SUCCESS if self.predicate(ctx) else Status.FAILURE


class Action(Node):
    def __init__(self, fn: Callable[[Any], Status], name: str = "action"):
        self.fn, self.name = fn, name

    def tick(self, ctx) -> Status:
        return self.fn(ctx)


class Inverter(Node):
    def __init__(self, child: Node):
        self.child, self.name = child, f"not {child.name}"

    def tick(self, ctx) -> Status:
        status = self.child.tick(ctx)
        if status is Status.RUNNING:
            return status
        return Status.FAILURE if status is Status.SUCCESS else Status.SUCCESS


class Retry(Node):
    """Re-tick a failing child up to ``attempts`` times within one tick."""

    def __init__(self, child: Node, attempts: int):
        self.child, self.attempts, self.name = child, attempts, f"retry {child.name}"

    def tick(self, ctx) -> Status:
        status = Status.FAILURE
        for _ in range(self.attempts):
            status = self.child.tick(ctx)
            if status is not Status.FAILURE:
                return status
        return status


# --------------------------------------------------------------------------
# Translation-layer payloads
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Detection:
    object_id: str
    shape: str
    label: str | None
    features: tuple[tuple[str, Any], ...]
    dx: float
    dy: float

    @property
    def distance(self) -> float:
        return math.hypot(self.dx, self.dy)

    def as_dict(self) -> dict:
        return {
            "id": self.object_id,
            "shape": self.shape,
            "label": self.label,
            "features": dict(self.features),
            "dx": round(self.dx, 6),
            "dy": round(self.dy, 6),
        }


@dataclass(frozen=True)
class PerceptionFrame:
    tick: int
    x: float
    y: float
    heading: float
    speed: float
    detections: tuple[Detection, ...]
    collision: bool
    gripper: str | None

    def as_dict(self) -> dict:
        return {
            "tick": self.tick,
            "pose": [round(self.x, 6), round(self.y, 6), round(self.heading, 6)],
            "speed": round(self.speed, 6),
            "detections": [d.as_dict() for d in self.detections],
            "collision": self.collision,
            "gripper": self.gripper,
        }


class SkillState(str, enum.Enum):
    IDLE = "idle"
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    FAILED = "failed"


@dataclass(frozen=True)
class SkillStatus:
    skill: str
    state: SkillState
    detail: dict = field(default_factory=dict)
    command_id: int | None = None

    def as_dict(self) -> dict:
        return {"skill": self.skill, "state": self.state.value, "detail": self.detail, "command": self.command_id}


def encode_frame(world: World, tick: int) -> PerceptionFrame:
    """Project the world through the sensor model.

    Objects within detection range are reported with their shape class;
    label and features are readable only within label range.
    """
    cfg = world.config
    r = world.robot
    detections = []
    for o in world.objects.values():
        if o.held_by is not None:
            continue
        dx, dy = o.x - r.x, o.y - r.y
        dist = math.hypot(dx, dy)
        if dist > cfg.detection_range + 1e-9:
            continue
        readable = dist <= cfg.label_range + 1e-9
        detections.append(
            Detection(
                o.id,
                o.shape,
                o.label if readable else None,
                tuple(sorted(o.features.items())) if readable else (),
                dx,
                dy,
            )
        )
    detections.sort(key=lambda d: (round(d.distance, 9), d.object_id))
    return PerceptionFrame(tick, r.x, r.y, r.heading, r.speed, tuple(detections), world.collision, r.gripper)


# --------------------------------------------------------------------------
# Skills
# --------------------------------------------------------------------------


def _toward(x: float, y: float, tx: float, ty: float, budget: float) -> tuple[float, float, float]:
    """Displacement toward (tx, ty) of at most ``budget``; returns (dx, dy, used)."""
    d = math.hypot(tx - x, ty - y)
    if d <= budget:
        return tx - x, ty - y, d
    return (tx - x) * budget / d, (ty - y) * budget / d, budget


def _follow(x: float, y: float, path: list[tuple[float, float]], budget: float) -> tuple[float, float]:
    """Consume ``path`` in place for up to ``budget`` metres; returns the displacement."""
    cx, cy = x, y
    while path and budget > 1e-12:
        dx, dy, used = _toward(cx, cy, path[0][0], path[0][1], budget)
        cx, cy = cx + dx, cy + dy
        budget -= used
        if math.hypot(path[0][0] - cx, path[0][1] - cy) <= 1e-9:
            path.pop(0)
    return cx - x, cy - y


@dataclass
class TickContext:
    world: World
    blackboard: Blackboard
    tick: int
    actuation: Actuation = Actuation()


class Skill:
    name = "skill"

    def __init__(self, params: dict, world: World):
        self.params = params

    def step(self, ctx: TickContext) -> tuple[Actuation, SkillState, dict]:
        raise NotImplementedError


class WaypointSkill(Skill):
    name = "waypoint"

    def __init__(self, params: dict, world: World):
        super().__init__(params, world)
        goal = params["waypoint"] if "waypoint" in params else (float(params["x"]), float(params["y"]))
        if isinstance(goal, tuple) and not world.nav.is_free(*goal):
            raise CommandError(f"coordinates {goal} are outside the ship")
        try:
            self.path = world.nav.route((world.robot.x, world.robot.y), goal)
        except KeyError:
            raise CommandError(f"unknown waypoint {goal!r}") from None

    def step(self, ctx):
        r = ctx.world.robot
        if not self.path:
            return Actuation(), SkillState.SUCCEEDED, {"arrived": [round(r.x, 6), round(r.y, 6)]}
        dx, dy = _follow(r.x, r.y, self.path, ctx.world.config.cruise_speed)
        return Actuation(dx, dy), SkillState.RUNNING, {}


class SearchSkill(Skill):
    """Sweep a zone, stop at the first unrejected object of the target shape,
    report it as a candidate and wait for a verdict."""

    name = "search"

    def __init__(self, params: dict, world: World):
        super().__init__(params, world)
        zone = world.zones.get(params["zone"])
        if zone is None or not zone.sweep:
            raise CommandError(f"unknown search zone {params['zone']!r}")
        self.zone = zone
        self.shape = params["object"]
        self.rejected: set[str] = set()
        r = world.robot
        if zone.contains(r.x, r.y):
            self.transit = []
        else:
            self.transit = world.nav.route((r.x, r.y), zone.entry or tuple(zone.sweep[0]))
        self.sweep = list(zone.sweep)
        self.target: str | None = None
        self.phase = "transit" if self.transit else "sweep"
        self.reported = False

    def _pick_target(self, ctx) -> str | None:
        r = ctx.world.robot
        best = None
        for det in ctx.blackboard.read("detections", ()):
            if det.shape != self.shape or det.object_id in self.rejected:
                continue
            if not self.zone.contains(r.x + det.dx, r.y + det.dy):
                continue
            if best is None or det.distance < best.distance:
                best = det
        return best.object_id if best else None

    def step(self, ctx):
        world = ctx.world
        r = world.robot
        v = world.config.cruise_speed
        if self.phase == "candidate":
            flags = ctx.blackboard.read("execution-flags", {}) or {}
            verdict = flags.get("verdict")
            if verdict is None or verdict.get("object") != self.target:
                return Actuation(), SkillState.RUNNING, {}
            if verdict.get("match"):
                return Actuation(), SkillState.SUCCEEDED, {"object": self.target}
            self.rejected.add(self.target)
            self.target, self.reported = None, False
            self.phase = "sweep"
        if self.phase in ("transit", "sweep") and self.zone.contains(r.x, r.y):
            target = self._pick_target(ctx)
            if target is not None:
                self.target, self.phase = target, "approach"
        if self.phase == "approach":
            tx, ty = world.object_position(self.target)
            gap = math.hypot(tx - r.x, ty - r.y) - world.config.search_standoff
            if gap <= 1e-9:
                self.phase = "candidate"
                det = next(d for d in ctx.blackboard.read("detections", ()) if d.object_id == self.target)
                vmr = {"object": det.object_id, "shape": det.shape, "label": det.label, "features": dict(det.features)}
                self.reported = True
                return Actuation(), SkillState.RUNNING, {"candidate": vmr}
            dx, dy, _ = _toward(r.x, r.y, tx, ty, min(v, gap))
            return Actuation(dx, dy), SkillState.RUNNING, {}
        if self.phase == "transit":
            dx, dy = _follow(r.x, r.y, self.transit, v)
            if not self.transit:
                self.phase = "sweep"
            return Actuation(dx, dy), SkillState.RUNNING, {}
        if self.phase == "sweep":
            if not self.sweep:
                return Actuation(), SkillState.FAILED, {"reason": "sweep exhausted"}
            dx, dy = _follow(r.x, r.y, self.sweep, v)
            return Actuation(dx, dy), SkillState.RUNNING, {}
        return Actuation(), SkillState.RUNNING, {}


def _resolve_object(world: World, ref: str) -> str | None:
    """An object id, or the nearest free object whose label or shape is ``ref``."""
    if ref in world.objects:
        return ref
    r = world.robot
    matches = [
        o for o in world.objects.values() if o.held_by is None and (o.label == ref or o.shape == ref)
    ]
    if not matches:
        return None
    return min(matches, key=lambda o: (math.dist((o.x, o.y), (r.x, r.y)), o.id)).id


class PickupSkill(Skill):
    name = "pickup"

    def step(self, ctx):
        world = ctx.world
        r = world.robot
        if r.gripper is not None:
            return Actuation(), SkillState.FAILED, {"reason": "gripper occupied"}
        oid = _resolve_object(world, self.params["object"])
        if oid is None or world.objects[oid].held_by is not None:
            return Actuation(), SkillState.FAILED, {"reason": f"no object {self.params['object']!r}"}
        o = world.objects[oid]
        dist = math.dist((o.x, o.y), (r.x, r.y))
        if dist > world.config.grasp_radius + 1e-9:
            return Actuation(), SkillState.FAILED, {"reason": "grasp-radius violation", "distance": round(dist, 6)}
        return Actuation(grasp=oid), SkillState.SUCCEEDED, {"object": oid}


class DropSkill(Skill):
    name = "dropobject"

    def step(self, ctx):
        held = ctx.world.robot.gripper
        if held is None:
            return Actuation(), SkillState.FAILED, {"reason": "empty-gripper drop"}
        return Actuation(release=True), SkillState.SUCCEEDED, {"object": held}


class GripperSkill(Skill):
    name = "gripper"

    def step(self, ctx):
        if self.params["state"] == "open":
            return Actuation(release=True), SkillState.SUCCEEDED, {"state": "open"}
        ctx.world.robot.gripper_open = False
        return Actuation(), SkillState.SUCCEEDED, {"state": "close"}


class RandomWalkSkill(Skill):
    name = "randomwalk"

    def __init__(self, params: dict, world: World):
        super().__init__(params, world)
        self.remaining = int(params.get("ticks", 20))

    def step(self, ctx):
        if self.remaining <= 0:
            return Actuation(), SkillState.SUCCEEDED, {}
        self.remaining -= 1
        angle = ctx.world.rng.uniform(0.0, 2 * math.pi)
        v = ctx.world.config.cruise_speed
        return Actuation(v * math.cos(angle), v * math.sin(angle)), SkillState.RUNNING, {}


SKILLS: dict[str, type[Skill]] = {
    "SEARCH": SearchSkill,
    "WAYPOINT": WaypointSkill,
    "PICKUP": PickupSkill,
    "DROPOBJECT": DropSkill,
    "GRIPPER": GripperSkill,
    "RANDOMWALK": RandomWalkSkill,
}


# --------------------------------------------------------------------------
# Controller
# --------------------------------------------------------------------------


class TacticalController:
    """Runs the behavior tree once per control cycle.

    The tree is ``Selector(Sequence(collision?, halt), active-skill)``: the
    safety branch is evaluated before the active skill every tick.
    """

    def __init__(self):
        self.blackboard = Blackboard()
        self.skill: Skill | None = None
        self.skill_command: int | None = None
        self._events: list[SkillStatus] = []
        self.tree = Selector(
            Sequence(Condition(lambda c: bool(c.blackboard.read("collision")), "collision?"), Action(self._halt, "halt")),
            Action(self._run_skill, "active-skill"),
        )

    # -- downstream ---------------------------------------------------------

    def decode_command(self, cmd: Command, tick: int, world: World, command_id: int | None = None) -> list[SkillStatus]:
        """Install ``cmd`` as the active skill; returns statuses for preempted skills.

        Raises :class:`CommandError` for unknown commands, schema violations or
        unresolvable parameters; the previous skill keeps running in that case.
        """
        params = {k: (dict(v) if isinstance(v, tuple) else v) for k, v in cmd.params}
        validate_params(cmd.name, params)
        new_skill = None if cmd.name == "STOP" else SKILLS[cmd.name](params, world)
        events = []
        if self.skill is not None:
            events.append(SkillStatus(self.skill.name, SkillState.IDLE, {"preempted": True}, self.skill_command))
        self.skill = new_skill
        self.skill_command = command_id
        self.blackboard.write_many(
            "decoder",
            {
                "active-skill": new_skill.name if new_skill else "idle",
                "skill-params": params,
                "execution-flags": {"gripper": params.get("state")} if cmd.name == "GRIPPER" else {},
            },
            tick,
        )
        if cmd.name == "STOP":
            events.append(SkillStatus("stop", SkillState.SUCCEEDED, {}, command_id))
        return events

    def deliver_verdict(self, object_id: str, match: bool, tick: int) -> None:
        flags = dict(self.blackboard.read("execution-flags", {}) or {})
        flags["verdict"] = {"object": object_id, "match": bool(match)}
        self.blackboard.write("decoder", "execution-flags", flags, tick)

    # -- upstream -----------------------------------------------------------

    def encode(self, world: World, tick: int) -> PerceptionFrame:
        frame = encode_frame(world, tick)
        self.blackboard.write_many(
            "encoder",
            {
                "pose": (frame.x, frame.y, frame.heading),
                "speed": frame.speed,
                "detections": frame.detections,
                "collision": frame.collision,
                "gripper-contents": frame.gripper,
            },
            tick,
        )
        return frame

    # -- control cycle --------------------------------------------------------

    def _halt(self, ctx: TickContext) -> Status:
        ctx.actuation = Actuation()
        return Status.SUCCESS

    def _run_skill(self, ctx: TickContext) -> Status:
        if self.skill is None:
            ctx.actuation = Actuation()
            return Status.SUCCESS
        act, state, detail = self.skill.step(ctx)
        ctx.actuation = act
        status = SkillStatus(self.skill.name, state, detail, self.skill_command)
        self.blackboard.write("skill", "skill-status", status, ctx.tick)
        if state is not SkillState.RUNNING or detail:
            self._events.append(status)
        if state in (SkillState.SUCCEEDED, SkillState.FAILED):
            self.skill = None
            self.skill_command = None
            return Status.SUCCESS if state is SkillState.SUCCEEDED else Status.FAILURE
        return Status.RUNNING

    def tick(self, world: World, tick: int) -> tuple[Actuation, list[SkillStatus]]:
        """One full tree tick; returns the actuation and any reportable statuses."""
        self._events = []
        ctx = TickContext(world, self.blackboard, tick)
        self.tree.tick(ctx)
        return ctx.actuation, self._events

    @property
    def active_skill(self) -> str:
        return self.skill.name if self.skill else "idle"


def tick_controller(controller: TacticalController, world: World, tick: int):
    return controller.tick(world, tick)
