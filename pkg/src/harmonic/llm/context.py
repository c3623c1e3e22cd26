"""Per-cycle prompt context, rebuilt deterministically from transcript events."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Any, Iterable

from ..transcript import Event


@dataclass(frozen=True)
class ActionRecord:
    """An action or information-tool call and, once known, its outcome."""

    tick: int
    name: str
    params: dict
    status: str | None = None
    detail: Any = None
    kind: str = "action"  # action | tool

    @property
    def call(self) -> str:
        return _call(self.name, self.params)

    @property
    def outcome(self) -> str | None:
        if self.status is None:
            return None
        if self.kind == "tool":
            return self.status + ": " + json.dumps(self.detail, sort_keys=True)
        return self.status + (f" {json.dumps(self.detail, sort_keys=True)}" if self.detail else "")


@dataclass(frozen=True)
class SeenObject:
    object_id: str
    shape: str
    label: str | None
    first_seen: int


@dataclass(frozen=True)
class PromptContext:
    system: str
    dialogue: tuple[tuple[int, str, str], ...]
    actions: tuple[ActionRecord, ...]
    episodic: tuple[SeenObject, ...]
    frame: dict
    memory: tuple[str, ...] = ()

    def render(self) -> str:
        out = ["DIALOGUE"]
        out += [f"[{t}] {who}: {text}" for t, who, text in self.dialogue] or ["(none)"]
        out.append("ACTIONS")
        out += [
            f"[{a.tick}] {a.call} -> {a.outcome if a.outcome is not None else 'running'}" for a in self.actions
        ] or ["(none)"]
        out.append("MEMORY")
        out += [f"- {m}" for m in self.memory]
        out += [
            f"- [{o.first_seen}] {o.object_id}: {o.shape}" + (f", label {o.label}" if o.label else "")
            for o in self.episodic
        ]
        if not self.memory and not self.episodic:
            out.append("(none)")
        out.append("PERCEPTION")
        out.append(render_frame(self.frame))
        return "\n".join(out) + "\n"

    def messages(self) -> list[dict]:
        return [{"role": "user", "content": self.render()}]


def render_frame(frame: dict) -> str:
    x, y, heading = frame["pose"]
    lines = [
        f"tick {frame['tick']}; pose x={x:.2f} y={y:.2f} heading={heading:.2f}; speed {frame['speed']:.2f}",
        f"gripper: {frame['gripper'] or 'empty'}; collision: {'yes' if frame['collision'] else 'no'}",
    ]
    dets = frame.get("detections") or []
    if not dets:
        lines.append("detections: none")
    for d in dets:
        desc = f"{d['id']}: {d['shape']}"
        if d.get("label"):
            desc += f", label {d['label']}"
        lines.append(f"detection {desc} at dx={d['dx']:.2f} dy={d['dy']:.2f}")
    return "\n".join(lines)


def _call(name: str, params: dict) -> str:
    args = ", ".join(f"{k}={json.dumps(v, sort_keys=True)}" for k, v in params.items())
    return f"{name}({args})"


def build_context(events: Iterable[Event], frame: dict, system: str, memory: Iterable[str] = ()) -> PromptContext:
    """Context from a transcript prefix and the current perception frame."""
    dialogue: list[tuple[int, str, str]] = []
    actions: list[ActionRecord] = []
    index: dict[int, int] = {}
    seen: dict[str, SeenObject] = {}
    for e in events:
        p = e.payload
        if e.channel == "dialogue":
            dialogue.append((e.tick, "Daniel" if p.get("speaker") != "robot" else "You", p["text"]))
        elif e.channel == "action":
            index[p["id"]] = len(actions)
            cmd = p["command"]
            actions.append(ActionRecord(e.tick, cmd["name"], dict(cmd.get("params") or {})))
        elif e.channel == "outcome" and "id" in p:
            k = index.get(p["id"])
            if k is not None:
                actions[k] = replace(actions[k], status=p["status"], detail=p.get("detail") or {})
        elif e.channel == "tool":
            if p.get("error"):
                status, detail = "error", p["error"]
            else:
                status, detail = "result", p.get("result")
            actions.append(ActionRecord(e.tick, p["name"], dict(p.get("args") or {}), status, detail, "tool"))
        elif e.channel == "perception":
            dets = list(p.get("detections") or [])
            cand = (p.get("skill-status") or {}).get("detail", {}).get("candidate")
            if cand:
                dets.append({"id": cand["object"], "shape": cand["shape"], "label": cand.get("label")})
            for d in dets:
                old = seen.get(d["id"])
                if old is None:
                    seen[d["id"]] = SeenObject(d["id"], d["shape"], d.get("label"), e.tick)
                elif d.get("label") and not old.label:
                    seen[d["id"]] = SeenObject(old.object_id, old.shape, d["label"], old.first_seen)
    return PromptContext(
        system,
        tuple(dialogue),
        tuple(actions),
        tuple(sorted(seen.values(), key=lambda o: (o.first_seen, o.object_id))),
        frame,
        tuple(memory),
    )
