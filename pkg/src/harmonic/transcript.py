"""Trial transcripts: an append-only, canonical JSON-lines event log.

The first line is the header; every following line is one event
``{"channel": ..., "payload": ..., "tick": ...}``. Serialization uses sorted
keys and compact separators, so equal content gives equal bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Iterable, Iterator

CHANNELS = ("dialogue", "action", "outcome", "perception", "tool", "reasoning", "exchange")
HEADER_FIELDS = ("agent", "model", "condition", "seed", "fixture_version")


class TranscriptError(ValueError):
    pass


def canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class Event:
    tick: int
    channel: str
    payload: dict

    def as_dict(self) -> dict:
        return {"tick": self.tick, "channel": self.channel, "payload": self.payload}


@dataclass
class Transcript:
    header: dict
    events: list[Event] = field(default_factory=list)
    sink: IO[str] | None = None

    def __post_init__(self):
        missing = [k for k in HEADER_FIELDS if k not in self.header]
        if missing:
            raise TranscriptError(f"header lacks {', '.join(missing)}")
        if self.sink is not None:
            self.sink.write(canonical(self.header) + "\n")
            self.sink.flush()

    def append(self, tick: int, channel: str, payload: dict) -> Event:
        if channel not in CHANNELS:
            raise TranscriptError(f"unknown channel {channel!r}")
        if self.events and tick < self.events[-1].tick:
            raise TranscriptError(f"tick {tick} precedes {self.events[-1].tick}")
        # round trip through JSON so the in-memory form equals the loaded form
        payload = json.loads(canonical(payload))
        event = Event(tick, channel, payload)
        self.events.append(event)
        if self.sink is not None:
            self.sink.write(canonical(event.as_dict()) + "\n")
            self.sink.flush()
        return event

    # -- views ----------------------------------------------------------------

    def channel(self, name: str) -> list[Event]:
        return [e for e in self.events if e.channel == name]

    def dialogue(self) -> list[tuple[int, str, str]]:
        return [(e.tick, e.payload["speaker"], e.payload["text"]) for e in self.channel("dialogue")]

    def actions(self) -> list[Event]:
        return self.channel("action")

    def outcome_for(self, action_id: int) -> Event | None:
        for e in self.channel("outcome"):
            if e.payload.get("id") == action_id:
                return e
        return None

    @property
    def end(self) -> dict | None:
        for e in reversed(self.events):
            if e.channel == "outcome" and e.payload.get("kind") == "trial-end":
                return e.payload
        return None

    def dumps(self) -> str:
        lines = [canonical(self.header)] + [canonical(e.as_dict()) for e in self.events]
        return "\n".join(lines) + "\n"

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")


def check_transcript(t: Transcript) -> None:
    """Raise :class:`TranscriptError` unless ``t`` satisfies the format invariants."""
    last = None
    open_actions: dict[int, int] = {}
    closed: set[int] = set()
    for i, e in enumerate(t.events):
        if e.channel not in CHANNELS:
            raise TranscriptError(f"event {i}: unknown channel {e.channel!r}")
        if last is not None and e.tick < last:
            raise TranscriptError(f"event {i}: tick {e.tick} precedes {last}")
        last = e.tick
        if e.channel == "action":
            aid = e.payload.get("id")
            if not isinstance(aid, int) or aid in open_actions or aid in closed:
                raise TranscriptError(f"event {i}: bad or repeated action id {aid!r}")
            open_actions[aid] = i
        elif e.channel == "outcome" and "id" in e.payload:
            aid = e.payload["id"]
            if aid not in open_actions:
                raise TranscriptError(f"event {i}: outcome for unknown or closed action {aid!r}")
            del open_actions[aid]
            closed.add(aid)
    if open_actions:
        raise TranscriptError(f"actions without outcome: {sorted(open_actions)}")


def parse_transcript(text: str, name: str = "<transcript>") -> Transcript:
    # only "\n" separates records; payload text may hold other line breaks
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise TranscriptError(f"{name}: empty transcript")
    try:
        header = json.loads(lines[0])
        raw = [json.loads(ln) for ln in lines[1:]]
        events = [Event(int(r["tick"]), r["channel"], r["payload"]) for r in raw]
        t = Transcript(header)
        t.events = events
        check_transcript(t)
    except (ValueError, KeyError, TypeError) as exc:
        raise TranscriptError(f"{name}: {exc}") from None
    return t


def load_transcript(path: str | Path) -> Transcript:
    path = Path(path)
    return parse_transcript(path.read_text(encoding="utf-8"), str(path))


def load_dir(directory: str | Path) -> list[tuple[Path, Transcript]]:
    directory = Path(directory)
    files = sorted(directory.rglob("*.jsonl"))
    if not files:
        raise TranscriptError(f"{directory}: no transcripts")
    return [(p, load_transcript(p)) for p in files]


def iter_events(t: Transcript, channels: Iterable[str] | None = None, ticks: range | None = None) -> Iterator[Event]:
    wanted = set(channels) if channels else None
    for e in t.events:
        if wanted is not None and e.channel not in wanted:
            continue
        if ticks is not None and e.tick not in ticks:
            continue
        yield e
