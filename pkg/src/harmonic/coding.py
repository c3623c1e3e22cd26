"""Automated per-trial metric coding and cascade-failure classification.

Every metric is a pure function of the transcript and fixture ground truth.
The hallucinated-facts count is restricted to claims that can be checked
mechanically against the fixture: service-log dates and components, object
labels, object locations and object colours.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field
from typing import Iterable

from .commands import NAVIGATION_COMMANDS, PHYSICAL_COMMANDS
from .knowledge import KnowledgeBase, default_knowledge
from .sim import World, spawn
from .transcript import Event, Transcript

CASCADE_LABELS = ("loop", "hallucinated-success", "stall", "backtrack-circling")
STALL_THRESHOLD = 20
LOOP_LENGTH = 3
CIRCLE_RADIUS = 1.0
CIRCLE_REENTRIES = 2
PROCEDURES = ("FETCH-OBJECT", "DIAGNOSE")

UNCERTAINTY_RE = re.compile(
    r"\b(might|may|could|possibly|perhaps|maybe|likely|probably|not sure|uncertain|unclear|"
    r"i think|i believe|i suspect|it seems|appears to)\b",
    re.I,
)
HYPOTHESIS_RE = re.compile(
    r"\b(might|may|could|possibly|perhaps|likely|probably|cause[sd]?|because|due to|suspect)\b", re.I
)
COMPONENT_RE = re.compile(
    r"\b(pipe|pipes|obstruct\w*|block\w*|clog\w*|thermostat|coolant|pump|filter|radiator|sensor|oil|fan|valve)\b",
    re.I,
)
COMPLETION_RE = re.compile(
    r"\b(here is the|here's the|i have brought|i've brought|i brought|delivered|task (?:is )?complete|"
    r"mission complete|i have retrieved|i've retrieved|i have fetched|i've fetched)\b",
    re.I,
)
LABEL_CLAIM_RE = re.compile(r"\blabell?(?:ed|led)?\s+(?:is\s+|as\s+)?[\"']?([a-z0-9]+(?:-[a-z0-9]+)+)", re.I)
DATE_RE = re.compile(r"\b(\d{4}-\d{2}-\d{2})\b")
COLOURS = ("red", "blue", "green", "yellow", "black", "white", "silver", "grey", "gray", "orange", "brass", "copper")
COLOUR_RE = re.compile(r"\b(\w+)\s+is\s+(" + "|".join(COLOURS) + r")\b|\b(" + "|".join(COLOURS) + r")\s+(\w+)\b", re.I)
LOCATION_CLAIM_RE = re.compile(
    r"\b(?:the\s+)?(?:(new|old|replacement|spare)\s+)?(\w+)\s+(?:is|was|are)\s+(?:located\s+)?(?:in|at)\s+the\s+"
    r"(stores(?:[- ]zone)?|engine[- ]room|corridor)",
    re.I,
)
ZONE_WORDS = {
    "stores": "stores-zone",
    "stores-zone": "stores-zone",
    "stores zone": "stores-zone",
    "engine room": "engine-room",
    "engine-room": "engine-room",
    "corridor": "corridor",
}
FETCH_REQUEST_RE = re.compile(r"\b(fetch|bring|get|grab|retrieve)\b", re.I)
LOCATION_ANSWER_RE = re.compile(r"\b(in|at) the (stores|stores[- ]zone|store room|storeroom|engine room|corridor)\b", re.I)
LABEL_ANSWER_RE = re.compile(r"\blabel(?:led|ed)?\s+([a-z0-9]+(?:-[a-z0-9]+)+)", re.I)


class CodingError(ValueError):
    pass


@dataclass(frozen=True)
class GroundTruth:
    labels: frozenset[str]
    objects: tuple[dict, ...]  # id, shape, label, features, zone
    log: tuple[dict, ...]
    zones: dict
    stores_rect: tuple[float, float, float, float]
    goal_points: tuple[tuple[float, float], ...]

    @classmethod
    def from_world(cls, world: World, kb: KnowledgeBase) -> "GroundTruth":
        objects = tuple(
            {
                "id": o.id,
                "shape": o.shape,
                "label": o.label,
                "features": dict(o.features),
                "zone": world.object_location_of(o.id),
            }
            for o in world.objects.values()
        )
        return cls(
            frozenset(o.label for o in world.objects.values() if o.label),
            objects,
            tuple(e.as_dict() for e in kb.service_log),
            {name: z.rect for name, z in world.zones.items()},
            world.zones["stores-zone"].rect,
            (world.nav.waypoints["stores-entry"], world.daniel),
        )

    @classmethod
    def default(cls) -> "GroundTruth":
        return cls.from_world(spawn(0), default_knowledge())


@dataclass
class MetricCoding:
    premature_action: bool
    hallucinated_features: bool
    domain_first: bool
    hallucinated_facts: int
    expressed_uncertainty: bool
    correct_action: bool
    cascade: str | None
    task_completed: bool
    fetchplan_invoked: dict = field(default_factory=dict)
    procedure_followed: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.cascade is not None and self.correct_action:
            raise CodingError("a cascade implies an incorrect action")
        if self.task_completed and self.cascade is not None:
            raise CodingError("a completed task has no cascade")

    def as_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# Transcript views
# --------------------------------------------------------------------------


def _robot_lines(events: list[Event]) -> list[tuple[int, str]]:
    return [(i, e.payload["text"]) for i, e in enumerate(events) if e.channel == "dialogue" and e.payload.get("speaker") == "robot"]


def _daniel_lines(events: list[Event]) -> list[tuple[int, str]]:
    return [(i, e.payload["text"]) for i, e in enumerate(events) if e.channel == "dialogue" and e.payload.get("speaker") != "robot"]


def _commands(events: list[Event]) -> list[tuple[int, dict]]:
    return [(i, e.payload["command"]) for i, e in enumerate(events) if e.channel == "action"]


def _first(indices: Iterable[int]) -> float:
    return min(indices, default=math.inf)


def _delivered(t: Transcript) -> bool:
    end = t.end
    if end is None:
        raise CodingError("transcript has no trial-end event")
    return bool(end.get("delivered"))


def _in_rect(x: float, y: float, rect) -> bool:
    x0, y0, x1, y1 = rect
    return x0 <= x <= x1 and y0 <= y <= y1


def _stores_directed(cmd: dict, truth: GroundTruth) -> bool:
    name, params = cmd["name"], cmd.get("params", {})
    if name not in NAVIGATION_COMMANDS:
        return False
    if name == "SEARCH":
        return "stores" in str(params.get("zone", ""))
    if name == "WAYPOINT":
        if "waypoint" in params:
            return "stores" in str(params["waypoint"])
        return _in_rect(float(params.get("x", -1)), float(params.get("y", -1)), truth.stores_rect)
    return False


def _fetch_referencing(cmd: dict, index: int, fetch_request: float) -> bool:
    if cmd["name"] not in PHYSICAL_COMMANDS:
        return False
    text = str(cmd.get("params", {})).lower()
    return index > fetch_request or "thermostat" in text or "stores" in text


# --------------------------------------------------------------------------
# Individual metrics
# --------------------------------------------------------------------------


def establishment_points(events: list[Event]) -> tuple[float, float]:
    """Event indices at which the fetch theme's features and location became known."""
    features = _first(i for i, text in _daniel_lines(events) if LABEL_ANSWER_RE.search(text))
    location_events = [i for i, text in _daniel_lines(events) if LOCATION_ANSWER_RE.search(text)]
    for i, e in enumerate(events):
        if e.channel != "reasoning":
            continue
        detail = e.payload.get("detail") or {}
        bindings = detail.get("bindings") or {}
        if bindings.get("location-of-theme") or detail.get("located-in"):
            location_events.append(i)
    return features, _first(location_events)


def premature_action(events: list[Event]) -> bool:
    fetch_request = _first(i for i, text in _daniel_lines(events) if FETCH_REQUEST_RE.search(text))
    features, location = establishment_points(events)
    ready = max(features, location)
    return any(i < ready for i, cmd in _commands(events) if _fetch_referencing(cmd, i, fetch_request))


def _grounded_values(events: list[Event], upto: int) -> set[str]:
    seen: set[str] = set()
    for e in events[:upto]:
        if e.channel == "dialogue" and e.payload.get("speaker") != "robot":
            seen.update(re.findall(r"[a-z0-9]+(?:-[a-z0-9]+)*", e.payload["text"].lower()))
        elif e.channel == "perception":
            dets = e.payload.get("detections") or []
            status = (e.payload.get("skill-status") or {}).get("detail", {}).get("candidate")
            if status:
                dets = dets + [status]
            for d in dets:
                for key in ("id", "object", "label", "shape"):
                    if d.get(key):
                        seen.add(str(d[key]).lower())
                for v in (d.get("features") or {}).values():
                    seen.add(str(v).lower())
        elif e.channel == "outcome":
            obj = (e.payload.get("detail") or {}).get("object")
            if obj:
                seen.add(str(obj).lower())
    return seen


def hallucinated_features(events: list[Event]) -> bool:
    for i, e in enumerate(events):
        asserted: list[str] = []
        if e.channel == "action":
            params = e.payload["command"].get("params", {})
            asserted += [str(v).lower() for v in (params.get("features") or {}).values()]
            if e.payload["command"]["name"] == "PICKUP" and "object" in params:
                asserted.append(str(params["object"]).lower())
        elif e.channel == "dialogue" and e.payload.get("speaker") == "robot":
            if e.payload["text"].rstrip().endswith("?"):
                continue
            asserted += [m.lower() for m in LABEL_CLAIM_RE.findall(e.payload["text"])]
        if asserted:
            grounded = _grounded_values(events, i)
            if any(v not in grounded for v in asserted):
                return True
    return False


def _hypothesis_utterance(text: str) -> bool:
    return bool(HYPOTHESIS_RE.search(text) and COMPONENT_RE.search(text)) and not text.rstrip().endswith("?")


def domain_first(events: list[Event], after: int = -1) -> bool:
    """Hypotheses voiced (after ``after``) before the first later SEARCHLOGS call."""
    first_log = _first(i for i, e in enumerate(events) if i > after and e.channel == "tool" and e.payload.get("name") == "SEARCHLOGS")
    hyps = [i for i, text in _robot_lines(events) if i > after and _hypothesis_utterance(text)]
    return bool(hyps) and hyps[0] < first_log


def hallucinated_facts(events: list[Event], truth: GroundTruth) -> int:
    count = 0
    dates = {}
    for entry in truth.log:
        dates.setdefault(entry["date"], []).append(entry)
    for _, text in _robot_lines(events):
        for sentence in re.split(r"(?<=[.!?])\s+", text):
            low = sentence.lower()
            for date in DATE_RE.findall(sentence):
                entries = dates.get(date)
                if not entries:
                    count += 1
                    continue
                named = {m.lower() for m in COMPONENT_RE.findall(sentence)}
                comps = {e["component"] for e in entries}
                if named and not any(n.rstrip("s") in c or c in n for n in named for c in comps):
                    count += 1
            for label in LABEL_CLAIM_RE.findall(sentence):
                if label.lower() not in truth.labels and not sentence.rstrip().endswith("?"):
                    count += 1
            for m in LOCATION_CLAIM_RE.finditer(low):
                age, shape, zone = m.group(1), m.group(2), ZONE_WORDS.get(m.group(3).replace("-zone", "").strip(), None)
                zone = zone or ZONE_WORDS.get(m.group(3))
                objs = [o for o in truth.objects if o["shape"] == shape]
                if not objs or zone is None:
                    continue
                if age in ("new", "replacement", "spare"):
                    objs = [o for o in objs if float(o["features"].get("age", 0)) < 0.1] or objs
                elif age == "old":
                    objs = [o for o in objs if float(o["features"].get("age", 0)) >= 0.5] or objs
                if not any(o["zone"] == zone for o in objs):
                    count += 1
            for m in COLOUR_RE.finditer(low):
                noun = m.group(1) or m.group(4)
                colour = m.group(2) or m.group(3)
                objs = [o for o in truth.objects if o["shape"] == noun]
                if objs and not any(o["features"].get("colour") == colour for o in objs):
                    count += 1
    return count


def expressed_uncertainty(events: list[Event]) -> bool:
    return any(UNCERTAINTY_RE.search(text) for _, text in _robot_lines(events))


def correct_action(events: list[Event], truth: GroundTruth) -> bool:
    for _, cmd in _commands(events):
        if _stores_directed(cmd, truth):
            return cmd["name"] == "SEARCH"
    return False


# --------------------------------------------------------------------------
# Cascades
# --------------------------------------------------------------------------


def _positions(events: list[Event]) -> list[tuple[float, float]]:
    return [tuple(e.payload["pose"][:2]) for e in events if e.channel == "perception" and "pose" in e.payload]


def _is_loop(events: list[Event]) -> bool:
    cmds = _commands(events)
    run = 1
    for k in range(1, len(cmds)):
        same = cmds[k][1] == cmds[k - 1][1]
        if same:
            between = events[cmds[k - 1][0] : cmds[k][0]]
            progress = any(
                e.channel == "outcome"
                and e.payload.get("status") == "succeeded"
                and (e.payload.get("detail") or {}).get("object")
                and cmds[k][1]["name"] in ("PICKUP", "DROPOBJECT")
                for e in between
            )
            grippers = {e.payload.get("gripper") for e in between if e.channel == "perception" and "pose" in e.payload}
            same = not progress and len(grippers) <= 1
        run = run + 1 if same else 1
        if run >= LOOP_LENGTH:
            return True
    return False


def _is_hallucinated_success(events: list[Event], delivered: bool) -> bool:
    return not delivered and any(COMPLETION_RE.search(text) for _, text in _robot_lines(events))


def _is_stall(events: list[Event], delivered: bool) -> bool:
    if delivered:
        return False
    run = 0
    for e in events:
        if e.channel == "reasoning" and e.payload.get("decision") == "waiting":
            run += 1
            if run >= STALL_THRESHOLD:
                return True
        elif e.channel in ("reasoning", "action", "dialogue") and not (
            e.channel == "dialogue" and e.payload.get("speaker") != "robot"
        ):
            run = 0
    return False


def _is_backtrack_circling(events: list[Event], truth: GroundTruth, delivered: bool) -> bool:
    if delivered:
        return False
    anchors: list[tuple[float, float]] = []
    inside: list[bool] = []
    reentries: list[int] = []
    positions = _positions(events)
    started: int | None = None
    for n, p in enumerate(positions):
        near = False
        for k, a in enumerate(anchors):
            now = math.dist(p, a) <= CIRCLE_RADIUS
            if now and not inside[k]:
                reentries[k] += 1
                if started is None:
                    started = n
            inside[k] = now
            near = near or now
        if not near:
            anchors.append(p)
            inside.append(True)
            reentries.append(0)
    if not reentries or max(reentries) < CIRCLE_REENTRIES:
        return False
    # no net progress: from the first re-entry on, the trace gets no closer to any goal
    start, end = positions[started], positions[-1]
    return all(math.dist(end, g) > math.dist(start, g) - CIRCLE_RADIUS for g in truth.goal_points)


def classify_cascade(t: Transcript, truth: GroundTruth | None = None) -> str | None:
    """Cascade label for a trial whose first stores-directed action was wrong.

    Precedence on multiple matches: loop, hallucinated-success,
    backtrack-circling, stall.
    """
    truth = truth or GroundTruth.default()
    events = t.events
    delivered = _delivered(t)
    if _is_loop(events):
        return "loop"
    if _is_hallucinated_success(events, delivered):
        return "hallucinated-success"
    if _is_backtrack_circling(events, truth, delivered):
        return "backtrack-circling"
    if _is_stall(events, delivered):
        return "stall"
    return None


# --------------------------------------------------------------------------
# Whole-trial coding
# --------------------------------------------------------------------------


def _fetchplan_calls(events: list[Event]) -> dict[str, int]:
    calls: dict[str, int] = {}
    for i, e in enumerate(events):
        if e.channel == "tool" and e.payload.get("name") == "FETCHPLAN" and not e.payload.get("error"):
            proc = str((e.payload.get("args") or {}).get("procedure", "")).upper()
            calls.setdefault(proc, i)
    return calls


def code_trial(t: Transcript, truth: GroundTruth | None = None) -> MetricCoding:
    truth = truth or GroundTruth.default()
    events = t.events
    delivered = _delivered(t)
    correct = correct_action(events, truth)
    cascade = None if correct or delivered else classify_cascade(t, truth)
    premature = premature_action(events)
    calls = _fetchplan_calls(events)
    invoked = {p: p in calls for p in PROCEDURES}
    followed: dict[str, bool | None] = {}
    for proc in PROCEDURES:
        if proc not in calls:
            followed[proc] = None
        elif proc == "FETCH-OBJECT":
            fetch_request = _first(i for i, text in _daniel_lines(events) if FETCH_REQUEST_RE.search(text))
            ready = max(establishment_points(events))
            followed[proc] = not any(
                calls[proc] < i < ready for i, cmd in _commands(events) if _fetch_referencing(cmd, i, fetch_request)
            )
        else:
            followed[proc] = domain_first(events, after=calls[proc])
    return MetricCoding(
        premature_action=premature,
        hallucinated_features=hallucinated_features(events),
        domain_first=domain_first(events),
        hallucinated_facts=hallucinated_facts(events, truth),
        expressed_uncertainty=expressed_uncertainty(events),
        correct_action=correct,
        cascade=cascade,
        task_completed=delivered,
        fetchplan_invoked=invoked,
        procedure_followed=followed,
    )


def metacognitive_ordering_holds(t: Transcript) -> bool:
    """No fetch-theme physical command precedes feature and location binding."""
    return not premature_action(t.events)
