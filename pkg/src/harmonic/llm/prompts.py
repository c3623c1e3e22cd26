"""System prompts, tool schemas and procedure narratives."""

from __future__ import annotations

import enum

from ..commands import COMMAND_DESCRIPTIONS, COMMAND_NAMES, COMMAND_SCHEMAS
from ..knowledge import data_text

PROMPT_VERSION = "prompt-v1"
NARRATIVE_FILES = {"FETCH-OBJECT": "narratives/fetch-object.txt", "DIAGNOSE": "narratives/diagnose.txt"}
INFO_TOOLS = ("SEARCHLOGS", "FETCHPLAN")


class Condition(str, enum.Enum):
    IK = "ik"
    KE = "ke"


class ToolNotAvailable(LookupError):
    pass


class UnknownProcedure(LookupError):
    pass


SEARCHLOGS_SCHEMA = {
    "type": "object",
    "properties": {"query": {"type": "string"}},
    "required": ["query"],
    "additionalProperties": False,
}
FETCHPLAN_SCHEMA = {
    "type": "object",
    "properties": {"procedure": {"type": "string", "enum": sorted(NARRATIVE_FILES)}},
    "required": ["procedure"],
    "additionalProperties": False,
}


def tool_schemas(condition: Condition | str) -> list[dict]:
    """Vendor-neutral tool list: the seven actions, SEARCHLOGS and, under KE, FETCHPLAN."""
    condition = Condition(condition)
    tools = [
        {"name": name, "description": COMMAND_DESCRIPTIONS[name], "input_schema": COMMAND_SCHEMAS[name]}
        for name in COMMAND_NAMES
    ]
    tools.append(
        {"name": "SEARCHLOGS", "description": "Search the engine service log.", "input_schema": SEARCHLOGS_SCHEMA}
    )
    if condition is Condition.KE:
        tools.append(
            {
                "name": "FETCHPLAN",
                "description": "Retrieve the written procedure for a task (FETCH-OBJECT or DIAGNOSE).",
                "input_schema": FETCHPLAN_SCHEMA,
            }
        )
    return tools


def _signature(name: str) -> str:
    schema = COMMAND_SCHEMAS[name]
    if name == "WAYPOINT":
        return "WAYPOINT(waypoint | x, y)"
    required = set(schema.get("required", ()))
    args = [p if p in required else p + "?" for p in schema.get("properties", {})]
    return f"{name}({', '.join(args)})"


def render_actions() -> str:
    return "\n".join(f"- {_signature(n)}: {COMMAND_DESCRIPTIONS[n]}" for n in COMMAND_NAMES)


def fetchplan_block() -> str:
    return data_text("prompts/fetchplan.txt")


def build_system_prompt(condition: Condition | str) -> str:
    """The shared base prompt; KE adds only the FETCHPLAN block."""
    condition = Condition(condition)
    base = data_text("prompts/base.txt")
    block = fetchplan_block() if condition is Condition.KE else ""
    return base.replace("{actions}", render_actions()).replace("{fetchplan_block}\n", block)


def fetchplan(procedure: str, condition: Condition | str = Condition.KE) -> str:
    """Narrative text for ``procedure``; only available under KE."""
    if Condition(condition) is not Condition.KE:
        raise ToolNotAvailable("FETCHPLAN is not available in this condition")
    key = str(procedure).strip().upper()
    if key not in NARRATIVE_FILES:
        raise UnknownProcedure(f"unknown procedure {procedure!r}")
    return data_text(NARRATIVE_FILES[key])
