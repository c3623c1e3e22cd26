"""Knowledge-based strategic agent.

Each step interprets new inputs against the situation model, posts goals
named by the ontology, instantiates their scripts as plans, checks plan
preconditions (asking the teammate when memory cannot supply them), and runs
plan steps: internal tools, speech acts and tactical commands. Every output
is preceded by a reasoning note naming the script, cause link or
requirement behind it.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Any

from . import language
from .agent import Dispatch, Note, Outcome, Say, StepInput, ToolUse, Verdict
from .commands import Command, CommandError, make_command
from .frames import (
    ConceptRef,
    CoRef,
    Filler,
    FrameDocument,
    FrameInstance,
    InstanceRef,
    Number,
    NumericRange,
    Provenance,
    Text,
    Variable,
    render_filler,
    render_frames,
)
from .knowledge import (
    CauseLink,
    KnowledgeBase,
    KnowledgeRequirement,
    NoScriptError,
    Script,
    Step,
)
from .situation import HUMAN, ROBOT, SituationModel, fillers_compatible
from .tactical import PerceptionFrame

PENDING, ACTIVE, BLOCKED, DONE, FAILED = "pending", "active", "blocked", "done", "failed"


class ActionabilityError(RuntimeError):
    pass


@dataclass
class PlanInstance:
    script_id: str
    steps: tuple[Step, ...]
    bindings: dict[str, Any] = field(default_factory=dict)
    cursor: int = 0
    missing: list[KnowledgeRequirement] = field(default_factory=list)


@dataclass
class AgendaEntry:
    goal: FrameInstance
    plan: PlanInstance
    status: str = PENDING
    key: tuple = ()
    parent: "AgendaEntry | None" = None
    requirement: KnowledgeRequirement | None = None
    awaiting: str | None = None  # "outcome" | "answer"
    command_id: int | None = None
    reason: str | None = None
    description: tuple = ()
    physical: bool = False

    @property
    def id(self) -> str:
        return self.goal.id


# --------------------------------------------------------------------------
# Pure reasoning helpers
# --------------------------------------------------------------------------


def diagnose_with_trace(
    symptom: FrameInstance, situation: SituationModel, kb: KnowledgeBase
) -> tuple[FrameDocument, list[CauseLink]]:
    """GMR of hypotheses for ``symptom`` plus the cause links behind them."""
    if not kb.is_a(symptom.concept, "MALFUNCTION"):
        raise ValueError(f"{symptom.concept} is not a malfunction")
    theme = situation.resolve(symptom.get("theme")) if situation is not None else None
    theme_concept = theme.concept if theme is not None else _concept_of(symptom.get("theme"))
    links = kb.find_causes(symptom.concept, theme_concept)
    if not links:
        gmr = language.build(
            "report-no-cause",
            situation,
            device=theme_concept or "ENGINE",
            symptom=symptom.concept,
        )
        return gmr, []
    gmr = language.hypotheses_gmr([link.cause for link in links])
    return gmr.with_provenance(Provenance.GMR, situation.tick if situation else None), links


def diagnose(symptom: FrameInstance, situation: SituationModel, kb: KnowledgeBase) -> FrameDocument:
    return diagnose_with_trace(symptom, situation, kb)[0]


def _concept_of(filler: Filler | None) -> str | None:
    if isinstance(filler, (InstanceRef, CoRef, ConceptRef)):
        return filler.concept
    return None


def ground_vmr(vmr: FrameDocument, expected: dict[str, Filler]) -> str:
    """``match`` iff every expected feature is satisfied by the VMR's root frame."""
    if vmr.root is None:
        if expected:
            raise ValueError("malformed VMR: no frames")
        return "match"
    seen = vmr.root
    for name, wanted in expected.items():
        have = seen.get(name)
        if have is None or not fillers_compatible(have, wanted):
            return "mismatch"
    return "match"


def vmr_from_candidate(candidate: dict, concept: str) -> FrameDocument:
    slots: list[tuple[str, Filler]] = []
    if candidate.get("label") is not None:
        slots.append(("label", Text(candidate["label"])))
    for key, value in sorted((candidate.get("features") or {}).items()):
        slots.append((key, Number(float(value)) if isinstance(value, (int, float)) else Text(str(value))))
    return FrameDocument((FrameInstance(concept, 1, tuple(slots)),)).with_provenance(Provenance.VMR)


def _json_value(value: Any) -> Any:
    if isinstance(value, ConceptRef):
        return value.concept.lower()
    if isinstance(value, Text):
        return value.value
    if isinstance(value, Number):
        return value.value
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (NumericRange,)):
        return render_filler(value)
    return value


# --------------------------------------------------------------------------
# The agent
# --------------------------------------------------------------------------


class OntoAgent:
    kind = "ontoagent"
    model = None
    condition = None

    def __init__(
        self,
        kb: KnowledgeBase,
        *,
        latency: int = 0,
        cruise_speed: float = 1.0,
        grasp_radius: float = 0.5,
        perception_period: int = 1,
        scenario_date: dt.date = dt.date(2026, 3, 10),
        zones: tuple[str, ...] = ("stores-zone", "engine-room", "corridor"),
        waypoints: tuple[str, ...] = ("daniel-location",),
        requester_location: str = "daniel-location",
    ):
        self.kb = kb
        self.latency = latency
        self.cruise_speed = cruise_speed
        self.grasp_radius = grasp_radius
        self.perception_period = perception_period
        self.scenario_date = scenario_date
        self.zones = set(zones)
        self.waypoints = set(waypoints)
        self.situation = SituationModel.initial(requester_location)
        self.agenda: list[AgendaEntry] = []
        self.asked: set[tuple[str, str]] = set()
        self.frame: PerceptionFrame | None = None
        self.dispatched = 0
        self.reported_completion = False
        self.last_mapping: dict[str, str] = {}

    # -- public surface -------------------------------------------------------

    @property
    def finished(self) -> bool:
        return self.reported_completion and all(e.status in (DONE, FAILED) for e in self.agenda)

    @property
    def active(self) -> AgendaEntry | None:
        for e in self.agenda:
            if e.status == ACTIVE:
                return e
        return None

    def step(self, event: StepInput) -> list:
        """Process one event bundle; deterministic in (state, event)."""
        self.situation.tick = event.tick
        self.frame = event.frame
        out: list = []
        for text in event.dialogue:
            out += self._hear(text)
        for outcome in event.outcomes:
            out += self._on_outcome(outcome)
        for candidate in event.candidates:
            out += self._on_candidate(candidate.detail["candidate"])
        out += self._advance()
        return out

    # -- understanding --------------------------------------------------------

    def _hear(self, text: str) -> list:
        try:
            tmr = language.utterance_to_tmr(text, self.situation)
        except (language.NoTemplateMatch, language.AmbiguousReference) as exc:
            gmr = language.build("request-clarification", self.situation)
            return [
                Note("clarify", ("template:none",), {"utterance": text, "error": str(exc)}),
                self._say(gmr),
            ]
        out = [Note("understood", (f"@{tmr.root.concept}",), {"utterance": text, "tmr": render_frames(tmr)})]
        return out + self.ingest(tmr)

    def ingest(self, tmr: FrameDocument) -> list:
        """Integrate a TMR: post goals, refine the situation, unblock plans."""
        root = tmr.root
        goal_ref = self.kb.attr(root.concept, "goal") if root.concept in self.kb.concepts else None
        is_inform = root.concept in self.kb.concepts and self.kb.is_a(root.concept, "INFORM")
        if goal_ref is None and not is_inform:
            return [Note("unintegrable", (f"@{root.concept}",), {"reason": "no goal or plan uses this input"})]
        mapping = self.situation.integrate(tmr, Provenance.TMR, self.situation.tick)
        sit_root = self.situation[mapping[root.id]]
        if is_inform:
            theme_id = mapping.get(root.get("theme").id) if isinstance(root.get("theme"), InstanceRef) else None
            out = [Note("situation-refined", (f"@{root.concept}",), {"instance": theme_id})]
            return out + self._check_answers()
        return self._post_goal(goal_ref.concept, root, sit_root, mapping, tmr)

    def _post_goal(self, goal_concept: str, root: FrameInstance, sit_root: FrameInstance, mapping, tmr) -> list:
        source = self.kb.attr(root.concept, "goal-theme")
        source = source.value if isinstance(source, Text) else "theme"
        if source == "current-problem":
            problems = [f for f in self.situation.frames() if self.kb.is_a(f.concept, "MALFUNCTION")]
            theme_id = problems[-1].id if problems else None
        else:
            ref = sit_root.get("theme")
            theme_id = ref.id if isinstance(ref, InstanceRef) else None
        if theme_id is None:
            return [Note("unintegrable", (f"@{root.concept}",), {"reason": "goal has no theme"})]
        theme = self.situation[theme_id]
        tmr_theme = tmr.resolve(root.get("theme"))
        description = ()
        if tmr_theme is not None:
            description = tuple(
                (k, v) for k, v in tmr_theme.slots if k != "corefer" and not isinstance(v, (InstanceRef, CoRef))
            )
        key = (goal_concept, theme.concept, description)
        for e in self.agenda:
            if e.key == key and e.status in (PENDING, ACTIVE, BLOCKED):
                return [Note("duplicate-goal", (f"@{goal_concept}",), {"existing": e.id})]
        try:
            script = self.kb.script_for_goal(goal_concept)
        except NoScriptError as exc:
            return [Note("no-script", (f"@{goal_concept}",), {"error": str(exc)}), self._inability(str(exc))]
        index = sum(1 for e in self.agenda if e.goal.concept == goal_concept) + 1
        goal = FrameInstance(
            goal_concept,
            index,
            (("agent", InstanceRef("LEIA", 1)), ("beneficiary", InstanceRef("HUMAN", 1)), ("theme", InstanceRef(theme.concept, theme.index))),
            Provenance.SITUATION,
            self.situation.tick,
        )
        plan = self._instantiate(script, theme)
        entry = AgendaEntry(goal, plan, key=key, description=description, physical=script.is_physical)
        self.agenda.append(entry)
        if theme.concept not in ("SERVICE-LOG",) and not self.kb.is_a(theme.concept, "MALFUNCTION"):
            self.situation.focus = theme.id
        return [
            Note(
                "goal-posted",
                (f"@{root.concept}", f"script:{script.id}"),
                {"goal": goal.id, "theme": theme.id, "plan": render_frames(FrameDocument((goal,), "Plan.%d" % len(self.agenda)))},
            )
        ]

    def _instantiate(self, script: Script, theme: FrameInstance) -> PlanInstance:
        bindings: dict[str, Any] = {}
        for name in script.inputs:
            if name == "theme":
                bindings[name] = theme.id
            elif name == "theme-type":
                shape = self.kb.attr(theme.concept, "shape-class")
                bindings[name] = shape.value if isinstance(shape, Text) else theme.concept.lower()
            elif name == "requester-location":
                loc = self.situation[HUMAN].get("location")
                bindings[name] = loc.value if isinstance(loc, Text) else None
        return PlanInstance(script.id, tuple(self.kb.expand_steps(script)), bindings)

    # -- preconditions and metascripts -----------------------------------------

    def _resolve_requirement(self, req: KnowledgeRequirement, plan: PlanInstance) -> tuple[Any, str] | None:
        theme = self.situation.get(plan.bindings.get("theme"))
        for source in req.resolution_order:
            if source == "situation-model" and theme is not None:
                value = theme.get(req.slot)
                if value is not None:
                    return self._requirement_value(req, theme, value), source
            elif source == "episodic-memory" and theme is not None:
                pattern = FrameInstance(theme.concept, 1, ((req.slot, Variable("value")),))
                record = self.kb.episodic_lookup(pattern)
                if record is not None:
                    value = record.content.get(req.slot)
                    self.situation.refine(theme.id, req.slot, value)
                    return self._requirement_value(req, self.situation[theme.id], value), source
        return None

    def _requirement_value(self, req: KnowledgeRequirement, theme: FrameInstance, value: Filler) -> Any:
        if req.subject == "features-of-theme":
            return {k: v for k, v in theme.slots if k in ("label",)}
        if req.subject == "hypotheses-of-problem":
            hyp_root = self.situation.resolve(value)
            return self._hypothesis_components(hyp_root)
        return value

    def _hypothesis_components(self, root: FrameInstance | None) -> list[str]:
        if root is None:
            return []
        mods = [self.situation.resolve(v) for k, v in root.slots] if root.concept == "ALTERNATIVE" else [root]
        comps: list[str] = []
        for m in mods:
            if m is None:
                continue
            hyp = self.situation.resolve(m.get("scope"))
            if hyp is None:
                continue
            for _, v in hyp.slots:
                if isinstance(v, ConceptRef) and v.concept not in comps:
                    comps.append(v.concept)
        return comps

    def verify_preconditions(self, entry: AgendaEntry) -> list[KnowledgeRequirement]:
        """Bind every resolvable requirement; return the ones still missing."""
        script = self.kb.scripts[entry.plan.script_id]
        missing = []
        for req in script.preconditions:
            found = self._resolve_requirement(req, entry.plan)
            if found is None:
                missing.append(req)
            else:
                entry.plan.bindings[req.subject] = found[0]
        return missing

    def activate_metascript(self, req: KnowledgeRequirement, entry: AgendaEntry) -> list:
        """Queue the metascript resolving ``req``; at most once per (plan, requirement)."""
        if (entry.id, req.id) in self.asked:
            return [Note("question-suppressed", (req.id,), {"plan": entry.id})]
        if "ask-teammate" not in req.resolution_order:
            raise NoScriptError(f"{req.subject} cannot be resolved by asking")
        meta = self.kb.metascript_for(req.subject)
        self.asked.add((entry.id, req.id))
        theme = self.situation[entry.plan.bindings["theme"]]
        index = sum(1 for e in self.agenda if e.goal.concept == meta.goal_concept) + 1
        goal = FrameInstance(
            meta.goal_concept, index, (("theme", InstanceRef(theme.concept, theme.index)),), Provenance.SITUATION, self.situation.tick
        )
        plan = self._instantiate(meta, theme)
        child = AgendaEntry(goal, plan, parent=entry, requirement=req, key=(goal.id,))
        self.agenda.append(child)
        return [Note("metascript-activated", (req.id, f"script:{meta.id}"), {"plan": entry.id, "missing": req.subject})]

    def _check_answers(self) -> list:
        out = []
        for e in self.agenda:
            if e.awaiting != "answer":
                continue
            parent = e.parent
            if self._resolve_requirement(e.requirement, parent.plan) is not None:
                e.awaiting = None
            else:
                e.status = FAILED
                e.awaiting = None
                parent.status = FAILED
                reason = f"the answer did not tell me the {e.requirement.slot} I need"
                parent.reason = reason
                out += [Note("answer-incomplete", (e.requirement.id,), {"plan": parent.id}), self._inability(reason)]
        return out

    # -- plan execution -------------------------------------------------------

    def _advance(self) -> list:
        out: list = []
        for _ in range(100):
            active = self.active
            if active is not None:
                if active.awaiting:
                    break
                waiting_dialogue = [e for e in self.agenda if e.status == PENDING and not e.physical]
                if active.physical and waiting_dialogue:
                    active.status = PENDING
                    out.append(Note("preempted-between-steps", (f"script:{active.plan.script_id}",), {"plan": active.id}))
                    continue
                out += self._run(active)
                continue
            pending = [e for e in self.agenda if e.status == PENDING]
            if not pending:
                break
            nonphysical = [e for e in pending if not e.physical]
            entry = (nonphysical or pending)[0]
            missing = self.verify_preconditions(entry)
            if missing:
                entry.status = BLOCKED
                entry.plan.missing = missing
                out.append(
                    Note(
                        "preconditions-missing",
                        tuple(r.id for r in missing),
                        {"plan": entry.id, "bound": sorted(k for k in entry.plan.bindings)},
                    )
                )
                for req in missing:
                    try:
                        out += self.activate_metascript(req, entry)
                    except NoScriptError as exc:
                        entry.status = FAILED
                        entry.reason = str(exc)
                        out += [Note("no-metascript", (req.id,), {"error": str(exc)}), self._inability(str(exc))]
                        break
                continue
            entry.plan.missing = []
            entry.status = ACTIVE
            script = self.kb.scripts[entry.plan.script_id]
            out.append(
                Note(
                    "plan-activated",
                    (f"script:{script.id}",) + tuple(r.id for r in script.preconditions),
                    {"plan": entry.id, "bindings": {k: _json_value(v) for k, v in sorted(entry.plan.bindings.items()) if k != "log-entries"}},
                )
            )
        return out

    def _run(self, entry: AgendaEntry) -> list:
        plan = entry.plan
        if plan.cursor >= len(plan.steps):
            return self._complete(entry)
        step = plan.steps[plan.cursor]
        if step.kind == "tool":
            out = self._tool(step, entry)
            plan.cursor += 1
            return out
        if step.kind == "speech":
            if step.awaits and self._resolve_requirement(entry.requirement, entry.parent.plan) is None:
                entry.awaiting = "answer"
                return [Note("awaiting-answer", (entry.requirement.id,), {"plan": entry.id})]
            out = self._speech(step, entry)
            plan.cursor += 1
            return out
        try:
            cmd, note = self.select_action(step, plan)
        except ActionabilityError as exc:
            entry.status = BLOCKED
            entry.reason = str(exc)
            entry.plan.missing = []
            return [Note("actionability-failed", (step.id,), {"reason": str(exc)}), self._inability(str(exc))]
        self.dispatched += 1
        entry.awaiting = "outcome"
        entry.command_id = self.dispatched
        return [note, Dispatch(cmd)]

    def _complete(self, entry: AgendaEntry) -> list:
        entry.status = DONE
        out = [Note("plan-completed", (f"script:{entry.plan.script_id}",), {"plan": entry.id})]
        script = self.kb.scripts[entry.plan.script_id]
        if script.on_complete == "report-completion":
            theme = self.situation[entry.plan.bindings["theme"]]
            gmr = self._describe_theme("report-completion", theme, entry.description)
            out += [Note("report-completion", (f"script:{script.id}",), {}), self._say(gmr)]
            self.reported_completion = True
        if entry.parent is not None and entry.parent.status == BLOCKED:
            parent = entry.parent
            still = [r for r in parent.plan.missing if r != entry.requirement]
            parent.plan.missing = still
            if not any(c.parent is parent and c.status in (PENDING, ACTIVE) for c in self.agenda):
                parent.status = PENDING
        return out

    # -- tools ----------------------------------------------------------------

    def _tool(self, step: Step, entry: AgendaEntry) -> list:
        plan = entry.plan
        if step.action == "find-causes":
            symptom = self.situation[plan.bindings["theme"]]
            gmr, links = diagnose_with_trace(symptom, self.situation, self.kb)
            plan.bindings[step.binds[0]] = (gmr, links)
            return [
                Note(
                    "causes-found",
                    tuple(f"cause:{l.id}" for l in links) or (f"@{symptom.concept}",),
                    {"symptom": symptom.id, "count": len(links)},
                )
            ]
        if step.action == "search-logs":
            comps = plan.bindings.get("hypotheses-of-problem") or []
            out: list = []
            found: dict[str, list] = {}
            for comp in comps:
                query = comp.lower()
                entries = self.kb.search_logs(query)
                found[comp] = entries
                out.append(ToolUse("SEARCHLOGS", {"query": query}, [e.as_dict() for e in entries]))
            plan.bindings[step.binds[0]] = found
            out.insert(0, Note("search-logs", ("service-log", f"script:{plan.script_id}"), {"components": comps}))
            return out
        if step.action == "assess-wear":
            found = plan.bindings.get("log-entries") or {}
            worn = None
            cites = []
            for comp, entries in found.items():
                life = self.kb.attr(comp, "service-life-months")
                fitted = [e for e in entries if e.component == comp.lower() and e.action in ("installed", "replaced")]
                if life is None or not fitted:
                    continue
                last = fitted[-1]
                months = (self.scenario_date - last.date).days / 30.4375
                cites.append(f"log:{last.date.isoformat()}")
                if months >= life.value and worn is None:
                    worn = (comp, last.date)
                    cites.append(f"@{comp}.service-life-months")
            plan.bindings[step.binds[0]] = worn
            return [
                Note(
                    "wear-assessed",
                    tuple(cites) or ("service-log",),
                    {"worn": None if worn is None else {"component": worn[0], "installed": worn[1].isoformat()}},
                )
            ]
        raise NoScriptError(f"unknown tool {step.action}")

    # -- speech ----------------------------------------------------------------

    def _say(self, gmr: FrameDocument) -> Say:
        text = language.gmr_to_utterance(gmr)
        self.last_mapping = self.situation.integrate(gmr, Provenance.GMR, self.situation.tick)
        return Say(text, render_frames(gmr))

    def _inability(self, reason: str) -> Say:
        reason = reason.rstrip(".")
        return self._say(language.build("report-inability", self.situation, reason=reason))

    def _describe_theme(self, template: str, theme: FrameInstance, description: tuple, **extra) -> FrameDocument:
        age = dict(description).get("age")
        age_text = render_filler(age) if age is not None else None
        if age_text is not None and age_text in language.LEXICONS["age"].values():
            try:
                return language.build(template, self.situation, part=theme.concept, age=age_text, **extra)
            except language.LanguageError:
                pass
        return language.build(template + "-plain", self.situation, part=theme.concept, **extra)

    def _speech(self, step: Step, entry: AgendaEntry) -> list:
        plan = entry.plan
        if step.action == "report-hypotheses":
            gmr, links = plan.bindings["hypotheses"]
            say = self._say(gmr)
            if links:
                c, n = self.last_mapping[gmr.root.id].rsplit(".", 1)
                self.situation.refine(plan.bindings["theme"], "caused-by", InstanceRef(c, int(n)))
            return [Note("report", tuple(f"cause:{l.id}" for l in links) or (f"script:{plan.script_id}",), {}), say]
        if step.action == "suggest-replacement":
            worn = plan.bindings.get("worn-component")
            if worn is None:
                gmr = language.build("report-no-finding", self.situation)
            else:
                gmr = language.build("suggest-replacement", self.situation, part=worn[0], date=worn[1].isoformat())
            return [Note("report", (f"script:{plan.script_id}",), {}), self._say(gmr)]
        if step.action == "request-info":
            theme = self.situation[plan.bindings["theme"]]
            prop = step.param("property")
            prop = prop.value if isinstance(prop, Text) else str(prop)
            description = entry.parent.description if entry.parent is not None else ()
            if prop == "label":
                gmr = self._describe_theme("ask-feature", theme, description, property="label")
            else:
                gmr = self._describe_theme("ask-location", theme, description)
            return [Note("ask-teammate", (entry.requirement.id, f"script:{plan.script_id}"), {}), self._say(gmr)]
        if step.action == "acknowledge":
            return [Note("acknowledge", (entry.requirement.id,), {}), self._say(language.build("acknowledge", self.situation))]
        raise NoScriptError(f"unknown speech act {step.action}")

    # -- action selection -------------------------------------------------------

    def _param_value(self, value: Filler, plan: PlanInstance) -> Any:
        if isinstance(value, Variable):
            if plan.bindings.get(value.name) is None:
                raise ActionabilityError(f"unbound ?{value.name}")
            return _json_value(plan.bindings[value.name])
        return _json_value(value)

    def predicted_overshoot(self) -> float:
        """Distance travelled between seeing a target and a strategic STOP landing."""
        return self.cruise_speed * max(self.latency, self.perception_period)

    def select_action(self, step: Step, plan: PlanInstance) -> tuple[Command, Note]:
        """Ground a command step, choosing among alternatives by consequence.

        Raises :class:`ActionabilityError` if the step cannot be executed now.
        """
        params = {k: self._param_value(v, plan) for k, v in step.params}
        candidates = [step.action] + list(step.alternatives)
        assessed = []
        chosen = None
        for name in candidates:
            loop = self.kb.attr(name, "perception-loop")
            loop = loop.value if isinstance(loop, Text) else None
            if step.purpose == "go-to-object" and loop == "strategic":
                overshoot = self.predicted_overshoot()
                if overshoot >= self.grasp_radius:
                    assessed.append(
                        {
                            "command": name,
                            "rejected": "temporal validity failure",
                            "predicted-overshoot": overshoot,
                            "grasp-radius": self.grasp_radius,
                        }
                    )
                    continue
            assessed.append({"command": name, "accepted": True, "perception-loop": loop})
            if chosen is None:
                chosen = name
        if chosen is None:
            raise ActionabilityError(f"no executable command for step {step.label or step.id}")
        if chosen != step.action and chosen == "WAYPOINT":
            params = {"waypoint": params.get("zone")}
        gripper = self.frame.gripper if self.frame is not None else None
        if chosen == "PICKUP" and gripper is not None:
            raise ActionabilityError(f"gripper occupied by {gripper}")
        if chosen == "DROPOBJECT" and gripper is None:
            raise ActionabilityError("gripper is empty")
        if chosen == "SEARCH" and params.get("zone") not in self.zones:
            raise ActionabilityError(f"zone {params.get('zone')} is not reachable")
        if chosen == "WAYPOINT" and params.get("waypoint") not in self.waypoints | self.zones:
            raise ActionabilityError(f"waypoint {params.get('waypoint')} is not reachable")
        try:
            cmd = make_command(chosen, params)
        except CommandError as exc:
            raise ActionabilityError(str(exc)) from None
        cites = [step.id, f"@{chosen}.perception-loop"] if step.purpose else [step.id]
        note = Note("action-selected", tuple(cites), {"command": cmd.render(), "candidates": assessed})
        return cmd, note

    # -- tactical feedback -------------------------------------------------------

    def _awaiting_outcome(self, command_id: int) -> AgendaEntry | None:
        for e in self.agenda:
            if e.awaiting == "outcome" and e.command_id == command_id:
                return e
        return None

    def _on_outcome(self, outcome: Outcome) -> list:
        entry = self._awaiting_outcome(outcome.command_id)
        if entry is None:
            return [Note("unintegrable", (outcome.command.name,), {"reason": "no plan awaits this outcome"})]
        step = entry.plan.steps[entry.plan.cursor]
        entry.awaiting = None
        if outcome.status == "succeeded":
            for name in step.binds:
                entry.plan.bindings[name] = outcome.detail.get("object")
            entry.plan.cursor += 1
            return [Note("step-succeeded", (step.id,), {"command": outcome.command.render()})]
        entry.status = FAILED
        reason = outcome.detail.get("reason") or outcome.status
        entry.reason = reason
        return [Note("step-failed", (step.id,), {"status": outcome.status, "reason": reason}), self._inability(f"{step.label.lower() if step.label else step.id} {outcome.status}: {reason}")]

    def _on_candidate(self, candidate: dict) -> list:
        entry = self.active
        if entry is None or entry.awaiting != "outcome":
            return [Note("unintegrable", ("candidate",), {"object": candidate.get("object")})]
        theme = self.situation[entry.plan.bindings["theme"]]
        expected = {k: v for k, v in theme.slots if k in ("label",)}
        vmr = vmr_from_candidate(candidate, theme.concept)
        verdict = ground_vmr(vmr, expected)
        if verdict == "match":
            frame = vmr.root
            vmr = FrameDocument((FrameInstance(frame.concept, 1, (("corefer", CoRef(theme.concept, theme.index)),) + frame.slots),))
        self.situation.integrate(vmr, Provenance.VMR, self.situation.tick)
        return [
            Note(
                "vmr-grounded",
                ("fetch.features-of-theme",) if "label" in expected else (),
                {"object": candidate.get("object"), "vmr": render_frames(vmr), "verdict": verdict},
            ),
            Verdict(candidate["object"], verdict == "match"),
        ]
