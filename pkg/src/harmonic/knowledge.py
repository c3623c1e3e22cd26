"""Knowledge resources: ontology with causal links, scripts, episodic memory, service log.

The on-disk form extends the frame notation with section headers at column 0::

    @OVERHEAT                      concept definition
      IS-A   MALFUNCTION
      theme  @MACHINE              slot definition (filler constraint)
    CAUSED-BY overheat-obstruct    causal link; embedded #X.n frame is the cause template
      symptom    @OVERHEAT
      applies-to @ENGINE
      cause      #OBSTRUCT.1
    #OBSTRUCT.1
      theme @PIPE
    SCRIPT fetch                   procedural script
    PRECONDITION fetch.location    knowledge requirement owned by script ``fetch``
    STEP fetch.1                   script step (order = declaration order)
    EPISODE 12                     episodic record at tick 12

The service log is tab separated: ``date<TAB>component<TAB>action<TAB>note``.
"""

from __future__ import annotations

import datetime as dt
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable

from .frames import (
    ConceptRef,
    Filler,
    FrameInstance,
    FrameSyntaxError,
    InstanceRef,
    LogicalLine,
    Text,
    Variable,
    logical_lines,
    parse_filler,
    render_filler,
    split_lines,
    split_slot_line,
    _HEADER_RE,
)


class KnowledgeError(ValueError):
    pass


class UnknownConceptError(KnowledgeError):
    pass


class CycleError(KnowledgeError):
    pass


class NoScriptError(KnowledgeError):
    pass


RESOLUTION_SOURCES = ("situation-model", "episodic-memory", "ask-teammate")
STEP_KINDS = ("command", "tool", "speech", "subplan")


@dataclass(frozen=True)
class CauseLink:
    id: str
    symptom: str
    cause: FrameInstance
    applies_to: str | None = None


@dataclass(frozen=True)
class Concept:
    name: str
    parents: tuple[str, ...] = ()
    slot_defs: tuple[tuple[str, Filler], ...] = ()
    causal_links: tuple[CauseLink, ...] = ()

    def attr(self, name: str, default=None):
        for key, value in self.slot_defs:
            if key == name:
                return value
        return default


@dataclass(frozen=True)
class KnowledgeRequirement:
    id: str
    subject: str
    slot: str
    resolution_order: tuple[str, ...]

    def __post_init__(self):
        if not self.resolution_order:
            raise KnowledgeError(f"requirement {self.id}: empty resolution order")
        for source in self.resolution_order:
            if source not in RESOLUTION_SOURCES:
                raise KnowledgeError(f"requirement {self.id}: unknown source {source!r}")
        if "ask-teammate" in self.resolution_order[:-1]:
            raise KnowledgeError(f"requirement {self.id}: ask-teammate must be the last source")


@dataclass(frozen=True)
class Step:
    """One script step.

    ``kind`` is ``command`` (atomic command template), ``tool``, ``speech``
    or ``subplan``; ``action`` names the command, tool, speech act or script.
    """

    id: str
    kind: str
    action: str
    label: str | None = None
    params: tuple[tuple[str, Filler], ...] = ()
    binds: tuple[str, ...] = ()
    alternatives: tuple[str, ...] = ()
    purpose: str | None = None
    awaits: str | None = None

    def param(self, name: str, default=None):
        for key, value in self.params:
            if key == name:
                return value
        return default

    def free_variables(self) -> set[str]:
        names = {v.name for _, v in self.params if isinstance(v, Variable)}
        if self.awaits:
            names.add(self.awaits)
        return names


@dataclass(frozen=True)
class Script:
    id: str
    goal_concept: str
    preconditions: tuple[KnowledgeRequirement, ...] = ()
    steps: tuple[Step, ...] = ()
    inputs: tuple[str, ...] = ()
    is_metascript: bool = False
    metascript_trigger: str | None = None
    on_complete: str | None = None

    @property
    def is_physical(self) -> bool:
        return any(step.kind == "command" for step in self.steps)


@dataclass(frozen=True)
class EpisodicRecord:
    timestamp: int
    content: FrameInstance


@dataclass(frozen=True)
class ServiceLogEntry:
    date: dt.date
    component: str
    action: str
    note: str

    def as_dict(self) -> dict:
        return {"date": self.date.isoformat(), "component": self.component, "action": self.action, "note": self.note}


# --------------------------------------------------------------------------
# Section reader
# --------------------------------------------------------------------------

_SECTION_KEYWORDS = ("CAUSED-BY", "SCRIPT", "PRECONDITION", "STEP", "EPISODE")


@dataclass
class _Section:
    kind: str
    name: str
    line: LogicalLine
    attrs: list[tuple[str, str, LogicalLine]] = field(default_factory=list)
    frames: list[FrameInstance] = field(default_factory=list)

    def values(self, key: str) -> list[str]:
        return [raw for k, raw, _ in self.attrs if k == key]

    def one(self, key: str, default: str | None = None) -> str | None:
        found = self.values(key)
        if len(found) > 1:
            raise FrameSyntaxError(f"{self.kind} {self.name}: repeated {key!r}", self.line.lineno, self.line.col)
        return found[0] if found else default


def _read_sections(text: str) -> list[_Section]:
    sections: list[_Section] = []
    frame_slots: list | None = None
    frame_head: tuple[str, int] | None = None

    def flush_frame():
        nonlocal frame_slots, frame_head
        if frame_head is not None:
            sections[-1].frames.append(FrameInstance(frame_head[0], frame_head[1], tuple(frame_slots)))
        frame_slots, frame_head = None, None

    for line in logical_lines(text):
        content = line.content
        first = content.split(None, 1)[0]
        if content.startswith("@") and " " not in content:
            flush_frame()
            sections.append(_Section("CONCEPT", content[1:], line))
            continue
        if first in _SECTION_KEYWORDS:
            flush_frame()
            parts = content.split(None, 1)
            if len(parts) != 2:
                raise FrameSyntaxError(f"{first} section needs a name", line.lineno, line.col)
            sections.append(_Section(first, parts[1].strip(), line))
            continue
        if m := _HEADER_RE.fullmatch(content):
            if not sections:
                raise FrameSyntaxError("embedded frame outside a section", line.lineno, line.col)
            flush_frame()
            frame_head = (m.group(1), int(m.group(2)))
            frame_slots = []
            continue
        if not sections:
            raise FrameSyntaxError(f"content outside a section: {content!r}", line.lineno, line.col)
        key, raw = split_slot_line(line)
        if frame_head is not None:
            try:
                frame_slots.append((key, parse_filler(raw)))
            except ValueError as exc:
                raise FrameSyntaxError(str(exc), line.lineno, line.col) from None
        else:
            sections[-1].attrs.append((key, raw, line))
    flush_frame()
    return sections


def _filler(raw: str, line: LogicalLine) -> Filler:
    try:
        return parse_filler(raw)
    except ValueError as exc:
        raise FrameSyntaxError(str(exc), line.lineno, line.col) from None


def _concept_name(raw: str, line: LogicalLine) -> str:
    value = _filler(raw, line)
    if isinstance(value, ConceptRef):
        return value.concept
    if isinstance(value, Text) and value.value.isupper():
        return value.value
    raise FrameSyntaxError(f"expected a concept name, got {raw!r}", line.lineno, line.col)


def _variable(raw: str, line: LogicalLine) -> str:
    value = _filler(raw, line)
    if not isinstance(value, Variable):
        raise FrameSyntaxError(f"expected a ?variable, got {raw!r}", line.lineno, line.col)
    return value.name


# --------------------------------------------------------------------------
# Knowledge base
# --------------------------------------------------------------------------


class KnowledgeBase:
    """The ontology, scripts, episodic memory and service log, resolved."""

    def __init__(
        self,
        concepts: dict[str, Concept],
        cause_links: list[CauseLink],
        scripts: dict[str, Script],
        service_log: list[ServiceLogEntry],
        episodic: Iterable[EpisodicRecord] = (),
    ):
        self.concepts = concepts
        self.cause_links = list(cause_links)
        self.scripts = scripts
        self.service_log = sorted(service_log, key=lambda e: e.date)
        self._episodic: list[EpisodicRecord] = list(episodic)
        self._validate()

    # -- validation -------------------------------------------------------

    def _validate(self) -> None:
        for concept in self.concepts.values():
            for parent in concept.parents:
                if parent not in self.concepts:
                    raise UnknownConceptError(f"{concept.name} IS-A unknown concept {parent}")
        self._check_acyclic()
        for link in self.cause_links:
            self._require(link.symptom, f"cause link {link.id}")
            self._require(link.cause.concept, f"cause link {link.id}")
            if link.applies_to:
                self._require(link.applies_to, f"cause link {link.id}")
            for _, filler in link.cause.slots:
                if isinstance(filler, ConceptRef):
                    self._require(filler.concept, f"cause link {link.id}")
        goals: dict[str, str] = {}
        triggers: dict[str, str] = {}
        for script in self.scripts.values():
            self._require(script.goal_concept, f"script {script.id}")
            if not script.is_metascript:
                if script.goal_concept in goals:
                    raise KnowledgeError(
                        f"goal {script.goal_concept} has two scripts: {goals[script.goal_concept]}, {script.id}"
                    )
                goals[script.goal_concept] = script.id
            else:
                if script.metascript_trigger in triggers:
                    raise KnowledgeError(
                        f"requirement kind {script.metascript_trigger} has two metascripts: "
                        f"{triggers[script.metascript_trigger]}, {script.id}"
                    )
                triggers[script.metascript_trigger] = script.id
            for step in script.steps:
                if step.kind == "subplan" and step.action not in self.scripts:
                    raise KnowledgeError(f"step {step.id}: unknown subplan {step.action}")
            self._check_bindings(script)
        for record in self._episodic:
            self._require(record.content.concept, "episodic record")

    def _require(self, name: str, where: str) -> None:
        if name not in self.concepts:
            raise UnknownConceptError(f"{where}: unknown concept {name}")

    def _check_acyclic(self) -> None:
        state: dict[str, int] = {}

        def visit(name: str, path: list[str]) -> None:
            mark = state.get(name, 0)
            if mark == 1:
                cycle = path[path.index(name):] + [name]
                raise CycleError("IS-A cycle: " + " -> ".join(cycle))
            if mark == 2:
                return
            state[name] = 1
            for parent in self.concepts[name].parents:
                visit(parent, path + [name])
            state[name] = 2

        for name in self.concepts:
            visit(name, [])

    def _check_bindings(self, script: Script) -> None:
        bound = set(script.inputs) | {req.subject for req in script.preconditions}
        if script.metascript_trigger:
            bound.add(script.metascript_trigger)
        for step in self.expand_steps(script):
            free = step.free_variables() - bound
            if free:
                raise KnowledgeError(f"step {step.id}: unbound variables {sorted(free)}")
            bound |= set(step.binds)

    # -- ontology -----------------------------------------------------------

    def concept(self, name: str) -> Concept:
        try:
            return self.concepts[name]
        except KeyError:
            raise UnknownConceptError(f"unknown concept {name}") from None

    def ancestors(self, name: str) -> list[str]:
        """``name`` followed by its IS-A ancestors, breadth first."""
        seen = [name]
        queue = deque([name])
        while queue:
            for parent in self.concept(queue.popleft()).parents:
                if parent not in seen:
                    seen.append(parent)
                    queue.append(parent)
        return seen

    def is_a(self, name: str, ancestor: str) -> bool:
        if name not in self.concepts:
            return name == ancestor
        return ancestor in self.ancestors(name)

    def attr(self, concept: str, name: str, default=None):
        """Attribute value declared on ``concept`` or inherited from an ancestor."""
        for candidate in self.ancestors(concept):
            value = self.concepts[candidate].attr(name)
            if value is not None:
                return value
        return default

    def links_for(self, symptom: str) -> list[CauseLink]:
        return [link for link in self.cause_links if link.symptom == symptom]

    def find_causes(
        self, symptom: str, theme: str | None, *, transitive: bool = False, inherit: bool = False
    ) -> list[CauseLink]:
        """Cause links for ``symptom`` whose applicability admits ``theme``.

        With ``inherit`` links declared on IS-A ancestors of the symptom also
        apply. With ``transitive`` the causes of each cause are followed
        breadth first; later hops check applicability against the cause
        template's own theme/domain concept.
        """
        self.concept(symptom)
        symptoms = self.ancestors(symptom) if inherit else [symptom]
        direct = [
            link
            for sym in symptoms
            for link in self.links_for(sym)
            if link.applies_to is None or (theme is not None and self.is_a(theme, link.applies_to))
        ]
        if not transitive:
            return direct
        found = list(direct)
        seen = {link.id for link in found}
        queue = deque(direct)
        while queue:
            link = queue.popleft()
            subject = _template_subject(link.cause)
            for nxt in self.links_for(link.cause.concept):
                if nxt.id in seen:
                    continue
                if nxt.applies_to is not None and not (subject and self.is_a(subject, nxt.applies_to)):
                    continue
                seen.add(nxt.id)
                found.append(nxt)
                queue.append(nxt)
        return found

    def cause_link(self, link_id: str) -> CauseLink:
        for link in self.cause_links:
            if link.id == link_id:
                return link
        raise KeyError(link_id)

    # -- procedural ---------------------------------------------------------

    def script_for_goal(self, goal_concept: str) -> Script:
        for script in self.scripts.values():
            if script.goal_concept == goal_concept and not script.is_metascript:
                return script
        raise NoScriptError(f"no script for goal {goal_concept}")

    def metascript_for(self, requirement_subject: str) -> Script:
        for script in self.scripts.values():
            if script.is_metascript and script.metascript_trigger == requirement_subject:
                return script
        raise NoScriptError(f"no metascript resolves {requirement_subject}")

    def expand_steps(self, script: Script, _depth: int = 0) -> list[Step]:
        """Steps with subplans inlined."""
        if _depth > 16:
            raise KnowledgeError(f"subplan nesting too deep at {script.id}")
        steps: list[Step] = []
        for step in script.steps:
            if step.kind == "subplan":
                steps.extend(self.expand_steps(self.scripts[step.action], _depth + 1))
            else:
                steps.append(step)
        return steps

    # -- episodic -----------------------------------------------------------

    @property
    def episodic(self) -> list[EpisodicRecord]:
        return list(self._episodic)

    def remember(self, record: EpisodicRecord) -> None:
        if self._episodic and record.timestamp < self._episodic[-1].timestamp:
            raise KnowledgeError("episodic records must be stored in timestamp order")
        self._require(record.content.concept, "episodic record")
        self._episodic.append(record)

    def episodic_lookup(self, pattern: FrameInstance) -> EpisodicRecord | None:
        """Most recent record unifying with ``pattern`` (later store order wins ties)."""
        best: EpisodicRecord | None = None
        for record in self._episodic:
            if _unifies(pattern, record.content) and (best is None or record.timestamp >= best.timestamp):
                best = record
        return best

    # -- service log --------------------------------------------------------

    def search_logs(self, query: str) -> list[ServiceLogEntry]:
        q = query.strip().lower()
        return [
            e
            for e in self.service_log
            if not q or q in e.component.lower() or q in e.action.lower() or q in e.note.lower()
        ]


def _template_subject(template: FrameInstance) -> str | None:
    for key in ("theme", "domain"):
        value = template.get(key)
        if isinstance(value, ConceptRef):
            return value.concept
    return None


def _unifies(pattern: FrameInstance, content: FrameInstance) -> bool:
    if pattern.concept != content.concept:
        return False
    for key, value in pattern.slots:
        if key not in content:
            return False
        if not isinstance(value, Variable) and content.get(key) != value:
            return False
    return True


# --------------------------------------------------------------------------
# Loading and rendering
# --------------------------------------------------------------------------


def _build_concepts(sections: list[_Section]) -> tuple[dict[str, Concept], list[CauseLink]]:
    concepts: dict[str, Concept] = {}
    links: list[CauseLink] = []
    for sec in sections:
        if sec.kind == "CONCEPT":
            if sec.name in concepts:
                raise KnowledgeError(f"duplicate concept {sec.name}")
            parents = []
            slot_defs = []
            for key, raw, line in sec.attrs:
                if key == "IS-A":
                    parents.extend(raw.split())
                else:
                    slot_defs.append((key, _filler(raw, line)))
            concepts[sec.name] = Concept(sec.name, tuple(parents), tuple(slot_defs))
        elif sec.kind == "CAUSED-BY":
            cause_ref = sec.one("cause")
            symptom = sec.one("symptom")
            if cause_ref is None or symptom is None:
                raise FrameSyntaxError(f"cause link {sec.name} needs symptom and cause", sec.line.lineno, sec.line.col)
            ref = _filler(cause_ref, sec.line)
            template = next((f for f in sec.frames if isinstance(ref, InstanceRef) and f.id == ref.id), None)
            if template is None:
                raise KnowledgeError(f"cause link {sec.name}: cause template {cause_ref} not defined")
            applies = sec.one("applies-to")
            links.append(
                CauseLink(
                    sec.name,
                    _concept_name(symptom, sec.line),
                    template,
                    _concept_name(applies, sec.line) if applies else None,
                )
            )
    for link in links:
        if link.symptom in concepts:
            c = concepts[link.symptom]
            concepts[link.symptom] = Concept(c.name, c.parents, c.slot_defs, c.causal_links + (link,))
    return concepts, links


def _build_scripts(sections: list[_Section]) -> dict[str, Script]:
    scripts: dict[str, dict] = {}
    order: list[str] = []
    for sec in sections:
        if sec.kind == "SCRIPT":
            if sec.name in scripts:
                raise KnowledgeError(f"duplicate script {sec.name}")
            goal = sec.one("goal")
            if goal is None:
                raise FrameSyntaxError(f"script {sec.name} needs a goal", sec.line.lineno, sec.line.col)
            trigger = sec.one("metascript-for")
            scripts[sec.name] = {
                "id": sec.name,
                "goal_concept": _concept_name(goal, sec.line),
                "inputs": tuple(_variable(raw, line) for k, raw, line in sec.attrs if k == "input"),
                "is_metascript": trigger is not None,
                "metascript_trigger": trigger,
                "on_complete": sec.one("on-complete"),
                "preconditions": [],
                "steps": [],
            }
            order.append(sec.name)
            continue
        if sec.kind not in ("PRECONDITION", "STEP"):
            continue
        owner = sec.name.rsplit(".", 1)[0]
        if owner not in scripts:
            raise KnowledgeError(f"{sec.kind} {sec.name}: unknown script {owner}")
        if sec.kind == "PRECONDITION":
            subject = sec.one("subject")
            slot = sec.one("slot")
            resolve = sec.one("resolve")
            if not (subject and slot and resolve):
                raise FrameSyntaxError(
                    f"precondition {sec.name} needs subject, slot and resolve", sec.line.lineno, sec.line.col
                )
            scripts[owner]["preconditions"].append(
                KnowledgeRequirement(sec.name, subject, slot, tuple(resolve.split()))
            )
        else:
            kinds = [k for k in STEP_KINDS if sec.one(k) is not None]
            if len(kinds) != 1:
                raise FrameSyntaxError(
                    f"step {sec.name} needs exactly one of {', '.join(STEP_KINDS)}", sec.line.lineno, sec.line.col
                )
            kind = kinds[0]
            reserved = set(STEP_KINDS) | {"label", "binds", "alternative", "purpose", "awaits"}
            awaits = sec.one("awaits")
            scripts[owner]["steps"].append(
                Step(
                    id=sec.name,
                    kind=kind,
                    action=sec.one(kind),
                    label=sec.one("label"),
                    params=tuple((k, _filler(raw, line)) for k, raw, line in sec.attrs if k not in reserved),
                    binds=tuple(_variable(raw, line) for k, raw, line in sec.attrs if k == "binds"),
                    alternatives=tuple(sec.values("alternative")),
                    purpose=sec.one("purpose"),
                    awaits=_variable(awaits, sec.line) if awaits else None,
                )
            )
    out = {}
    for name in order:
        spec = scripts[name]
        spec["preconditions"] = tuple(spec["preconditions"])
        spec["steps"] = tuple(spec["steps"])
        out[name] = Script(**spec)
    return out


def _build_episodes(sections: list[_Section]) -> list[EpisodicRecord]:
    records = []
    for sec in sections:
        if sec.kind != "EPISODE":
            continue
        try:
            tick = int(sec.name)
        except ValueError:
            raise FrameSyntaxError(f"episode tick must be an integer: {sec.name!r}", sec.line.lineno, sec.line.col)
        concept = sec.one("concept")
        if concept is None:
            raise FrameSyntaxError("episode needs a concept", sec.line.lineno, sec.line.col)
        slots = tuple((k, _filler(raw, line)) for k, raw, line in sec.attrs if k != "concept")
        if records and tick < records[-1].timestamp:
            raise KnowledgeError("episodic records must be stored in timestamp order")
        records.append(EpisodicRecord(tick, FrameInstance(_concept_name(concept, sec.line), 1, slots)))
    return records


def parse_service_log(text: str) -> list[ServiceLogEntry]:
    entries = []
    for lineno, line in enumerate(split_lines(text), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise FrameSyntaxError(f"service log entry needs 4 tab-separated fields, got {len(parts)}", lineno, 1)
        try:
            date = dt.date.fromisoformat(parts[0].strip())
        except ValueError:
            raise FrameSyntaxError(f"bad ISO date {parts[0]!r}", lineno, 1) from None
        entries.append(ServiceLogEntry(date, parts[1].strip(), parts[2].strip(), parts[3].strip()))
    return entries


def load_knowledge(ontology_text: str, scripts_text: str, log_text: str, episodic_text: str = "") -> KnowledgeBase:
    """Parse and cross-check the four knowledge resources."""
    onto_sections = _read_sections(ontology_text)
    concepts, links = _build_concepts(onto_sections)
    script_sections = _read_sections(scripts_text)
    scripts = _build_scripts(script_sections)
    episodes = _build_episodes(_read_sections(episodic_text) + [s for s in script_sections if s.kind == "EPISODE"])
    return KnowledgeBase(concepts, links, scripts, parse_service_log(log_text), episodes)


def _frame_lines(fr: FrameInstance, indent: str = "  ") -> list[str]:
    return [f"#{fr.id}"] + [f"{indent}{k} {render_filler(v)}" for k, v in fr.slots]


def render_knowledge(kb: KnowledgeBase) -> tuple[str, str, str, str]:
    """Inverse of :func:`load_knowledge`: (ontology, scripts, log, episodic) texts."""
    onto: list[str] = []
    for c in kb.concepts.values():
        onto.append(f"@{c.name}")
        onto.extend(f"  IS-A {p}" for p in c.parents)
        onto.extend(f"  {k} {render_filler(v)}" for k, v in c.slot_defs)
    for link in kb.cause_links:
        onto.append(f"CAUSED-BY {link.id}")
        onto.append(f"  symptom @{link.symptom}")
        if link.applies_to:
            onto.append(f"  applies-to @{link.applies_to}")
        onto.append(f"  cause #{link.cause.id}")
        onto.extend(_frame_lines(link.cause))
    scr: list[str] = []
    for s in kb.scripts.values():
        scr.append(f"SCRIPT {s.id}")
        scr.append(f"  goal @{s.goal_concept}")
        scr.extend(f"  input ?{name}" for name in s.inputs)
        if s.metascript_trigger:
            scr.append(f"  metascript-for {s.metascript_trigger}")
        if s.on_complete:
            scr.append(f"  on-complete {s.on_complete}")
        for req in s.preconditions:
            scr.append(f"PRECONDITION {req.id}")
            scr.append(f"  subject {req.subject}")
            scr.append(f"  slot {req.slot}")
            scr.append(f"  resolve {' '.join(req.resolution_order)}")
        for st in s.steps:
            scr.append(f"STEP {st.id}")
            scr.append(f"  {st.kind} {st.action}")
            if st.label:
                scr.append(f"  label {st.label}")
            if st.purpose:
                scr.append(f"  purpose {st.purpose}")
            scr.extend(f"  alternative {a}" for a in st.alternatives)
            scr.extend(f"  {k} {render_filler(v)}" for k, v in st.params)
            scr.extend(f"  binds ?{b}" for b in st.binds)
            if st.awaits:
                scr.append(f"  awaits ?{st.awaits}")
    log = [f"{e.date.isoformat()}\t{e.component}\t{e.action}\t{e.note}" for e in kb.service_log]
    epi: list[str] = []
    for r in kb.episodic:
        epi.append(f"EPISODE {r.timestamp}")
        epi.append(f"  concept @{r.content.concept}")
        epi.extend(f"  {k} {render_filler(v)}" for k, v in r.content.slots)

    def join(lines: list[str]) -> str:
        return "\n".join(lines) + ("\n" if lines else "")

    return join(onto), join(scr), join(log), join(epi)


def data_text(name: str) -> str:
    """Read a bundled fixture file from ``harmonic/data``."""
    return resources.files("harmonic").joinpath("data", name).read_text(encoding="utf-8")


def default_knowledge(episodic_text: str | None = None) -> KnowledgeBase:
    """The canonical shipboard-maintenance knowledge base."""
    return load_knowledge(
        data_text("ontology.kb"),
        data_text("scripts.kb"),
        data_text("service_log.tsv"),
        data_text("episodic.kb") if episodic_text is None else episodic_text,
    )
