"""The shared strategic-to-tactical command vocabulary and its schemas."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Mapping

import jsonschema

COMMAND_NAMES = ("SEARCH", "WAYPOINT", "PICKUP", "DROPOBJECT", "GRIPPER", "STOP", "RANDOMWALK")
PHYSICAL_COMMANDS = ("SEARCH", "WAYPOINT", "PICKUP", "RANDOMWALK", "GRIPPER")
NAVIGATION_COMMANDS = ("SEARCH", "WAYPOINT", "RANDOMWALK")

_FEATURES = {
    "type": "object",
    "additionalProperties": {"type": ["string", "number"]},
}

COMMAND_SCHEMAS: dict[str, dict] = {
    "SEARCH": {
        "type": "object",
        "properties": {
            "zone": {"type": "string", "minLength": 1},
            "object": {"type": "string", "minLength": 1},
            "features": _FEATURES,
        },
        "required": ["zone", "object"],
        "additionalProperties": False,
    },
    "WAYPOINT": {
        "type": "object",
        "properties": {
            "waypoint": {"type": "string", "minLength": 1},
            "x": {"type": "number"},
            "y": {"type": "number"},
        },
        "oneOf": [{"required": ["waypoint"]}, {"required": ["x", "y"]}],
        "additionalProperties": False,
    },
    "PICKUP": {
        "type": "object",
        "properties": {"object": {"type": "string", "minLength": 1}},
        "required": ["object"],
        "additionalProperties": False,
    },
    "DROPOBJECT": {
        "type": "object",
        "properties": {"location": {"type": "string", "enum": ["floor", "here"]}},
        "required": ["location"],
        "additionalProperties": False,
    },
    "GRIPPER": {
        "type": "object",
        "properties": {"state": {"type": "string", "enum": ["open", "close"]}},
        "required": ["state"],
        "additionalProperties": False,
    },
    "STOP": {"type": "object", "properties": {}, "additionalProperties": False},
    "RANDOMWALK": {
        "type": "object",
        "properties": {"ticks": {"type": "integer", "minimum": 1, "maximum": 200}},
        "additionalProperties": False,
    },
}

COMMAND_DESCRIPTIONS = {
    "SEARCH": (
        "Search a zone for an object of the given type. The robot sweeps the zone and stops "
        "automatically as soon as it sees a candidate, then reports the candidate's features "
        "and waits for confirmation. Perception is integrated into the motion, so the robot "
        "stops next to the object."
    ),
    "WAYPOINT": (
        "Drive to a stored waypoint (or x/y coordinates) along a fixed path. There is no "
        "integrated perception: the robot does not stop when it sees objects, and only a "
        "later STOP command halts it early."
    ),
    "PICKUP": "Grasp the named object. The object must be within grasp radius and the gripper empty.",
    "DROPOBJECT": "Release the held object at a location relative to the robot (the floor).",
    "GRIPPER": "Open or close the gripper. Opening releases any held object.",
    "STOP": "Halt all motion and cancel the running skill.",
    "RANDOMWALK": "Wander randomly for a number of ticks.",
}


class CommandError(ValueError):
    pass


@dataclass(frozen=True)
class Command:
    name: str
    params: tuple[tuple[str, Any], ...] = ()

    def param(self, key: str, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default

    def as_dict(self) -> dict:
        return {"name": self.name, "params": {k: _thaw(v) for k, v in self.params}}

    def render(self) -> str:
        args = ", ".join(f"{k}={json.dumps(_thaw(v), sort_keys=True)}" for k, v in self.params)
        return f"{self.name}({args})"

    @property
    def is_physical(self) -> bool:
        return self.name in PHYSICAL_COMMANDS


def _freeze(value):
    if isinstance(value, Mapping):
        return tuple((k, _freeze(v)) for k, v in value.items())
    return value


def _thaw(value):
    if isinstance(value, tuple):
        return {k: _thaw(v) for k, v in value}
    return value


def validate_params(name: str, params: Mapping[str, Any]) -> None:
    if name not in COMMAND_SCHEMAS:
        raise CommandError(f"unknown command {name!r}")
    try:
        jsonschema.validate(dict(params), COMMAND_SCHEMAS[name])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path)
        raise CommandError(f"{name}: {exc.message}" + (f" at {where}" if where else "")) from None


def make_command(name: str, params: Mapping[str, Any] | None = None) -> Command:
    """Validate and build a command; parameter order follows the schema."""
    params = dict(params or {})
    validate_params(name, params)
    order = list(COMMAND_SCHEMAS[name].get("properties", {}))
    items = sorted(params.items(), key=lambda kv: order.index(kv[0]))
    return Command(name, tuple((k, _freeze(v)) for k, v in items))


def command_from_dict(data: Mapping[str, Any]) -> Command:
    return make_command(data["name"], data.get("params", {}))
