"""Deterministic kinematic 2D shipboard world."""

from __future__ import annotations

import copy
import datetime as dt
import hashlib
import json
import math
import random
from dataclasses import dataclass, field

import networkx as nx

from .frames import FrameSyntaxError, logical_lines


class FixtureError(ValueError):
    pass


@dataclass(frozen=True)
class WorldConfig:
    tick_seconds: float = 0.5
    cruise_speed: float = 1.0  # metres per tick
    grasp_radius: float = 0.5
    detection_range: float = 3.0
    label_range: float = 1.5
    delivery_radius: float = 1.0
    tick_budget: int = 600
    robot_radius: float = 0.25
    search_standoff: float = 0.3
    scenario_date: dt.date = dt.date(2026, 3, 10)
    target_object: str = "part-42"  # the object whose delivery completes the task


@dataclass(frozen=True)
class Zone:
    name: str
    rect: tuple[float, float, float, float]
    sweep: tuple[tuple[float, float], ...] = ()
    entry: str | None = None

    def contains(self, x: float, y: float, eps: float = 1e-9) -> bool:
        x0, y0, x1, y1 = self.rect
        return x0 - eps <= x <= x1 + eps and y0 - eps <= y <= y1 + eps


@dataclass
class WorldObject:
    id: str
    shape: str
    x: float | None
    y: float | None
    label: str | None = None
    features: dict = field(default_factory=dict)
    radius: float = 0.1
    solid: bool = False
    held_by: str | None = None

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "x": _r(self.x),
            "y": _r(self.y),
            "held_by": self.held_by,
        }


@dataclass
class Robot:
    x: float
    y: float
    heading: float = 0.0
    speed: float = 0.0
    gripper: str | None = None
    gripper_open: bool = True


@dataclass(frozen=True)
class Actuation:
    """One tick of motor output: a displacement plus optional gripper action."""

    dx: float = 0.0
    dy: float = 0.0
    grasp: str | None = None
    release: bool = False

    @property
    def is_zero(self) -> bool:
        return self.dx == 0.0 and self.dy == 0.0 and self.grasp is None and not self.release


def _r(v: float | None) -> float | None:
    return None if v is None else round(v, 6)


class NavMap:
    """Waypoint graph with zone rectangles; routes with Dijkstra."""

    def __init__(self, zones: dict[str, Zone], waypoints: dict[str, tuple[float, float]], links: list[tuple[str, str]]):
        self.zones = zones
        self.waypoints = waypoints
        self.graph = nx.Graph()
        for name, (x, y) in waypoints.items():
            self.graph.add_node(name)
        for a, b in links:
            if a not in waypoints or b not in waypoints:
                raise FixtureError(f"link {a}-{b} names an unknown waypoint")
            self.graph.add_edge(a, b, weight=math.dist(waypoints[a], waypoints[b]))

    def zone_at(self, x: float, y: float) -> str | None:
        for zone in self.zones.values():
            if zone.contains(x, y):
                return zone.name
        return None

    def is_free(self, x: float, y: float) -> bool:
        return any(z.contains(x, y) for z in self.zones.values())

    def _entry_nodes(self, x: float, y: float) -> list[str]:
        zone = self.zone_at(x, y)
        nodes = [n for n, p in self.waypoints.items() if zone is not None and self.zones[zone].contains(*p)]
        return nodes or list(self.waypoints)

    def route(self, start: tuple[float, float], goal: str | tuple[float, float]) -> list[tuple[float, float]]:
        """Polyline from ``start`` to a waypoint name or coordinates."""
        if isinstance(goal, str):
            if goal not in self.waypoints:
                raise KeyError(goal)
            goal_nodes, tail = [goal], []
        else:
            goal_nodes, tail = self._entry_nodes(*goal), [tuple(goal)]
        if isinstance(goal, tuple) and self.zone_at(*start) is not None and self.zone_at(*start) == self.zone_at(*goal):
            return [tuple(goal)]
        best: tuple[float, list[str]] | None = None
        for entry in self._entry_nodes(*start):
            for target in goal_nodes:
                try:
                    cost, path = nx.single_source_dijkstra(self.graph, entry, target, weight="weight")
                except nx.NetworkXNoPath:
                    continue
                cost += math.dist(start, self.waypoints[entry])
                if tail:
                    cost += math.dist(self.waypoints[target], tail[0])
                if best is None or cost < best[0] - 1e-12:
                    best = (cost, path)
        if best is None:
            raise KeyError(f"no route to {goal}")
        points = [self.waypoints[n] for n in best[1]] + tail
        if points and math.dist(points[0], start) < 1e-9:
            points = points[1:]
        return points


class World:
    def __init__(
        self,
        config: WorldConfig,
        navmap: NavMap,
        objects: list[WorldObject],
        robot: Robot,
        daniel: tuple[float, float],
        seed: int = 0,
    ):
        self.config = config
        self.nav = navmap
        self.objects = {o.id: o for o in objects}
        self.robot = robot
        self.daniel = daniel
        self.seed = seed
        self.rng = random.Random(seed)
        self.tick = 0
        self.collision = False
        self._check()

    @property
    def zones(self) -> dict[str, Zone]:
        return self.nav.zones

    def _check(self) -> None:
        for o in self.objects.values():
            if (o.held_by is None) == (o.x is None):
                raise FixtureError(f"object {o.id} must be either placed or held")

    def clone(self) -> "World":
        return copy.deepcopy(self)

    # -- kinematics ---------------------------------------------------------

    def _blocked(self, x: float, y: float) -> bool:
        if not self.nav.is_free(x, y):
            return True
        for o in self.objects.values():
            if o.solid and o.x is not None and math.dist((x, y), (o.x, o.y)) < o.radius + self.config.robot_radius:
                return True
        return False

    def step(self, act: Actuation) -> "World":
        """Integrate one tick of ``act``; the result is this (mutated) world."""
        r = self.robot
        length = math.hypot(act.dx, act.dy)
        limit = self.config.cruise_speed
        dx, dy = act.dx, act.dy
        if length > limit + 1e-9:
            dx, dy = dx * limit / length, dy * limit / length
            length = limit
        self.collision = False
        if length > 0:
            nx_, ny_ = r.x + dx, r.y + dy
            if self._blocked(nx_, ny_):
                lo, hi = 0.0, 1.0
                for _ in range(40):
                    mid = (lo + hi) / 2
                    if self._blocked(r.x + dx * mid, r.y + dy * mid):
                        hi = mid
                    else:
                        lo = mid
                nx_, ny_ = r.x + dx * lo, r.y + dy * lo
                self.collision = True
            moved = math.hypot(nx_ - r.x, ny_ - r.y)
            r.heading = math.atan2(dy, dx)
            r.x, r.y = nx_, ny_
            r.speed = moved
        else:
            r.speed = 0.0
        if act.grasp is not None:
            obj = self.objects[act.grasp]
            if r.gripper is not None or obj.held_by is not None:
                raise ValueError(f"cannot grasp {obj.id}")
            obj.held_by, obj.x, obj.y = "robot", None, None
            r.gripper, r.gripper_open = obj.id, False
        if act.release:
            if r.gripper is not None:
                obj = self.objects[r.gripper]
                obj.held_by, obj.x, obj.y = None, r.x, r.y
                r.gripper = None
            r.gripper_open = True
        self.tick += 1
        return self

    # -- ground truth ---------------------------------------------------------

    def object_position(self, oid: str) -> tuple[float, float]:
        o = self.objects[oid]
        if o.held_by is not None:
            return (self.robot.x, self.robot.y)
        return (o.x, o.y)

    def object_location_of(self, oid: str) -> str | None:
        return self.nav.zone_at(*self.object_position(oid))

    def object_features_of(self, oid: str) -> dict:
        o = self.objects[oid]
        out = {"shape": o.shape, **o.features}
        if o.label is not None:
            out["label"] = o.label
        return out

    def is_delivered(self, oid: str | None = None) -> bool:
        o = self.objects.get(oid or self.config.target_object)
        if o is None or o.held_by is not None:
            return False
        return math.dist((o.x, o.y), self.daniel) <= self.config.delivery_radius + 1e-9

    def snapshot(self) -> dict:
        r = self.robot
        return {
            "tick": self.tick,
            "robot": {
                "x": _r(r.x),
                "y": _r(r.y),
                "heading": _r(r.heading),
                "speed": _r(r.speed),
                "gripper": r.gripper,
            },
            "objects": [o.snapshot() for o in self.objects.values()],
            "collision": self.collision,
        }

    def state_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.snapshot(), sort_keys=True).encode()).hexdigest()


def step_world(world: World, actuation: Actuation) -> World:
    return world.step(actuation)


# --------------------------------------------------------------------------
# Fixture loading
# --------------------------------------------------------------------------


def _floats(raw: str, n: int, where) -> tuple[float, ...]:
    parts = raw.replace(",", " ").split()
    if len(parts) != n:
        raise FrameSyntaxError(f"expected {n} numbers, got {raw!r}", where.lineno, where.col)
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise FrameSyntaxError(f"bad number in {raw!r}", where.lineno, where.col) from None


def parse_world(text: str) -> tuple[WorldConfig, NavMap, list[WorldObject], Robot, tuple[float, float]]:
    records: list[tuple[list[str], object, dict[str, tuple[str, object]]]] = []
    for line in logical_lines(text):
        if line.col == 1:
            records.append((line.content.split(), line, {}))
            continue
        if not records:
            raise FrameSyntaxError("field outside a record", line.lineno, line.col)
        parts = line.content.split(None, 1)
        if len(parts) != 2:
            raise FrameSyntaxError(f"field needs a value: {line.content!r}", line.lineno, line.col)
        records[-1][2][parts[0]] = (parts[1], line)

    params: dict = {}
    zones: dict[str, Zone] = {}
    waypoints: dict[str, tuple[float, float]] = {}
    links: list[tuple[str, str]] = []
    objects: list[WorldObject] = []
    robot: Robot | None = None
    daniel: tuple[float, float] | None = None
    for head, where, fields in records:
        kind = head[0]
        if kind == "PARAMS":
            for key, (raw, _) in fields.items():
                attr = key.replace("-", "_")
                if attr not in WorldConfig.__dataclass_fields__:
                    raise FrameSyntaxError(f"unknown parameter {key}", where.lineno, where.col)
                if attr == "scenario_date":
                    params[attr] = dt.date.fromisoformat(raw)
                elif attr == "target_object":
                    params[attr] = raw
                elif attr == "tick_budget":
                    params[attr] = int(raw)
                else:
                    params[attr] = float(raw)
        elif kind == "ZONE":
            rect = _floats(fields["rect"][0], 4, where)
            sweep = ()
            if "sweep" in fields:
                sweep = tuple(_floats(p, 2, where) for p in fields["sweep"][0].split())
            entry = fields.get("entry", (None,))[0]
            zones[head[1]] = Zone(head[1], rect, sweep, entry)
        elif kind == "WAYPOINT":
            waypoints[head[1]] = _floats(fields["at"][0], 2, where)
        elif kind == "LINK":
            links.append((head[1], head[2]))
        elif kind == "ROBOT":
            x, y = _floats(fields["at"][0], 2, where)
            heading = float(fields.get("heading", ("0",))[0])
            robot = Robot(x, y, heading)
        elif kind == "DANIEL":
            daniel = _floats(fields["at"][0], 2, where)
        elif kind == "OBJECT":
            x, y = _floats(fields["at"][0], 2, where)
            extra = {k: v for k, (v, _) in fields.items() if k not in ("shape", "label", "at", "radius", "solid")}
            features = {}
            for k, v in extra.items():
                try:
                    features[k] = float(v)
                except ValueError:
                    features[k] = v
            objects.append(
                WorldObject(
                    id=head[1],
                    shape=fields["shape"][0],
                    x=x,
                    y=y,
                    label=fields.get("label", (None,))[0],
                    features=features,
                    radius=float(fields.get("radius", ("0.1",))[0]),
                    solid=fields.get("solid", ("false",))[0] == "true",
                )
            )
        else:
            raise FrameSyntaxError(f"unknown record {kind}", where.lineno, where.col)
    if "stores-zone" not in zones:
        raise FixtureError("fixture has no stores-zone")
    if robot is None or daniel is None:
        raise FixtureError("fixture needs ROBOT and DANIEL records")
    for z in zones.values():
        if z.entry is not None and z.entry not in waypoints:
            raise FixtureError(f"zone {z.name} entry {z.entry} is not a waypoint")
    for a, b in links:
        for end in (a, b):
            if end not in waypoints:
                raise FixtureError(f"link endpoint {end} is not a waypoint")
    nav = NavMap(zones, waypoints, links)
    placed = [("robot", (robot.x, robot.y)), ("daniel", daniel)]
    placed += [(f"waypoint {k}", v) for k, v in waypoints.items()]
    placed += [(f"object {o.id}", (o.x, o.y)) for o in objects]
    for what, (x, y) in placed:
        if not nav.is_free(x, y):
            raise FixtureError(f"{what} at ({x}, {y}) lies outside every zone")
    return WorldConfig(**params), nav, objects, robot, daniel


def load_world_text(name: str = "world.kb") -> str:
    from .knowledge import data_text

    return data_text(name)


def spawn(seed: int = 0, fixture_text: str | None = None, **overrides) -> World:
    """Build the canonical world (or one from ``fixture_text``) with a seeded RNG."""
    config, nav, objects, robot, daniel = parse_world(fixture_text if fixture_text is not None else load_world_text())
    if overrides:
        config = WorldConfig(**{**config.__dict__, **overrides})
    return World(config, nav, objects, robot, daniel, seed)
