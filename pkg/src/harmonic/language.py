"""Template mapping between scenario utterances and meaning frames.

Understanding matches an utterance against anchored, case-insensitive
patterns with typed captures, fills the template's frame skeleton, and
resolves definite references against the situation model. Generation runs
the other way: it unifies a GMR with a template skeleton to recover the
captures, then fills the template's surface string.

The agent builds its own GMRs through :func:`build` so that what it says can
be understood back into the same structure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Callable

from .frames import (
    ConceptRef,
    CoRef,
    Filler,
    FrameDocument,
    FrameInstance,
    InstanceRef,
    Number,
    NumericRange,
    Text,
    Variable,
    parse_filler,
    parse_frames,
    render_filler,
)
from .situation import HUMAN, PARTICIPANTS, ROBOT, SituationModel


class LanguageError(ValueError):
    pass


class NoTemplateMatch(LanguageError):
    pass


class AmbiguousReference(LanguageError):
    pass


class UncoveredConcept(LanguageError):
    pass


# --------------------------------------------------------------------------
# Lexicons: surface form -> value. The first surface per value is used when
# generating.
# --------------------------------------------------------------------------

LEXICONS: dict[str, dict[str, str]] = {
    "machine": {"engine": "ENGINE", "pump": "PUMP", "generator": "GENERATOR"},
    "part": {"thermostat": "THERMOSTAT", "pipe": "PIPE", "filter": "FILTER"},
    "age": {
        "new": "0.0001<>0.1",
        "replacement": "0.0001<>0.1",
        "spare": "0.0001<>0.1",
        "old": "0.5<>1",
        "used": "0.5<>1",
    },
    "zone": {
        "stores": "STORES-ZONE",
        "stores zone": "STORES-ZONE",
        "stores-zone": "STORES-ZONE",
        "store room": "STORES-ZONE",
        "storeroom": "STORES-ZONE",
        "engine room": "ENGINE-ROOM",
        "engine-room": "ENGINE-ROOM",
        "corridor": "CORRIDOR",
    },
    "symptom": {
        "overheating": "OVERHEAT",
        "running hot": "OVERHEAT",
        "too hot": "OVERHEAT",
        "vibrating": "VIBRATE",
    },
    "property": {"label": "label", "location": "located-in"},
}

_OPEN_TYPES = {
    "label": r"[a-z0-9]+(?:-[a-z0-9]+)*",
    "date": r"\d{4}-\d{2}-\d{2}",
    "text": r".+?",
    "anaphor": r"it",
    "hypotheses": r".+?",
}

# Capture types whose values are concept names (used in headers and @refs).
CONCEPT_TYPES = {"machine", "part", "zone", "symptom", "anaphor"}

# Hypothesis phrases for cause templates; unknown templates fall back to
# "a <subject> <concept>".
HYPOTHESIS_PHRASES: list[tuple[str, FrameInstance]] = [
    ("a pipe obstruction", FrameInstance("OBSTRUCT", 1, (("theme", ConceptRef("PIPE")),))),
    (
        "a broken thermostat",
        FrameInstance("STATE-OF-REPAIR", 1, (("domain", ConceptRef("THERMOSTAT")), ("range", parse_filler("<0.7")))),
    ),
]

_CAPTURE_RE = re.compile(r"\{(\w+):([\w-]+)\}")
_FIELD_RE = re.compile(r"\{(\w+)\}")


def surface_of(kind: str, value: str) -> str:
    for surface, v in LEXICONS[kind].items():
        if v == value:
            return surface
    raise UncoveredConcept(f"no {kind} word for {value}")


@dataclass(frozen=True)
class UtteranceTemplate:
    """One utterance form.

    ``pattern`` is a regular expression with ``{name:type}`` captures;
    ``skeleton`` is frame notation with ``{name}`` fields. ``definite`` names
    the captures that refer to entities already in the scene. Generation
    templates also carry ``surface``, a format string over the captures.
    """

    name: str
    direction: str
    pattern: str
    skeleton: str = ""
    speaker: str = HUMAN
    definite: tuple[str, ...] = ()
    surface: str | None = None
    builder: Callable[[dict], FrameDocument] | None = None
    extractor: Callable[[FrameDocument], dict | None] | None = None
    _regex: re.Pattern = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.direction not in ("understand", "generate"):
            raise ValueError(f"direction must be understand or generate, got {self.direction!r}")
        caps = self.captures
        used = set(_FIELD_RE.findall(self.skeleton))
        if not used <= set(caps):
            raise ValueError(f"template {self.name}: skeleton uses undeclared captures {sorted(used - set(caps))}")
        if self.direction == "generate":
            if self.surface is None:
                raise ValueError(f"generation template {self.name} needs a surface string")
            if not set(_FIELD_RE.findall(self.surface)) <= set(caps):
                raise ValueError(f"template {self.name}: surface uses undeclared captures")
        for d in self.definite:
            if d not in caps:
                raise ValueError(f"template {self.name}: definite capture {d} not in pattern")

        def group(m: re.Match) -> str:
            name, kind = m.group(1), m.group(2)
            if kind in LEXICONS:
                words = sorted(LEXICONS[kind], key=len, reverse=True)
                body = "|".join(re.escape(w).replace(r"\ ", r"\s+") for w in words)
            elif kind in _OPEN_TYPES:
                body = _OPEN_TYPES[kind]
            else:
                raise ValueError(f"template {self.name}: unknown capture type {kind}")
            return f"(?P<{name}>{body})"

        regex = _CAPTURE_RE.sub(group, self.pattern)
        object.__setattr__(self, "_regex", re.compile(rf"\s*(?:{regex})\s*[.!?]*\s*", re.IGNORECASE))

    @property
    def captures(self) -> dict[str, str]:
        return {m.group(1): m.group(2) for m in _CAPTURE_RE.finditer(self.pattern)}

    @property
    def root_concept(self) -> str | None:
        m = re.search(r"#([A-Z][A-Z0-9-]*)\.\d+", self.skeleton)
        return m.group(1) if m else None

    def match(self, utterance: str) -> dict[str, str] | None:
        m = self._regex.fullmatch(" ".join(utterance.split()))
        if not m:
            return None
        out = {}
        for name, kind in self.captures.items():
            raw = m.group(name)
            if raw is None:
                continue
            raw = " ".join(raw.split())
            if kind in LEXICONS:
                out[name] = LEXICONS[kind][raw.lower()]
            elif kind == "label":
                out[name] = raw.lower()
            else:
                out[name] = raw
        return out


# --------------------------------------------------------------------------
# Hypothesis lists (variable length, so built in code)
# --------------------------------------------------------------------------


def hypothesis_phrase(template: FrameInstance) -> str:
    for phrase, known in HYPOTHESIS_PHRASES:
        if known.concept == template.concept and known.slots == template.slots:
            return phrase
    subject = next((v.concept for _, v in template.slots if isinstance(v, ConceptRef)), None)
    if subject is None or len(template.slots) != 1:
        raise UncoveredConcept(f"no phrase for hypothesis {template.concept}")
    return f"a {subject.lower()} {template.concept.lower()}"


def hypothesis_template(phrase: str) -> FrameInstance:
    phrase = " ".join(phrase.split()).lower()
    for known_phrase, known in HYPOTHESIS_PHRASES:
        if phrase == known_phrase:
            return known
    m = re.fullmatch(r"an? ([a-z][a-z0-9-]*) ([a-z][a-z0-9-]*)", phrase)
    if not m:
        raise NoTemplateMatch(f"unknown hypothesis {phrase!r}")
    return FrameInstance(m.group(2).upper(), 1, (("theme", ConceptRef(m.group(1).upper())),))


def hypotheses_gmr(templates: list[FrameInstance]) -> FrameDocument:
    """ALTERNATIVE over uniform EPISTEMIC modalities, or a single modality 1.0."""
    k = len(templates)
    if k == 0:
        raise ValueError("no hypotheses")
    counts: dict[str, int] = {}
    hyps = []
    for t in templates:
        counts[t.concept] = counts.get(t.concept, 0) + 1
        hyps.append(replace(t, index=counts[t.concept], provenance=None, tick=None))
    value = Number(1.0 / k)
    mods = [
        FrameInstance("MODALITY", i + 1, (("type", Text("EPISTEMIC")), ("value", value), ("scope", h.ref)))
        for i, h in enumerate(hyps)
    ]
    if k == 1:
        return FrameDocument(tuple(mods + hyps))
    names = ["domain", "range"] + [f"option-{i}" for i in range(3, k + 1)]
    alt = FrameInstance("ALTERNATIVE", 1, tuple((n, m.ref) for n, m in zip(names, mods)))
    return FrameDocument(tuple([alt] + mods + hyps))


def _split_hypotheses(text: str) -> list[str]:
    parts = re.split(r",\s*|\s+or\s+", text.strip())
    return [p for p in parts if p]


def _hypotheses_from_gmr(doc: FrameDocument) -> list[FrameInstance] | None:
    root = doc.root
    if root is None:
        return None
    if root.concept == "ALTERNATIVE":
        mods = [doc.resolve(v) for _, v in root.slots]
    elif root.concept == "MODALITY" and len(doc.by_concept("MODALITY")) == 1:
        mods = [root]
    else:
        return None
    if any(m is None or m.concept != "MODALITY" for m in mods):
        return None
    hyps = [doc.resolve(m.get("scope")) for m in mods]
    if any(h is None for h in hyps):
        return None
    rebuilt = hypotheses_gmr(hyps)
    return hyps if rebuilt == doc else None


def _build_alternatives(caps: dict) -> FrameDocument:
    return hypotheses_gmr([hypothesis_template(p) for p in _split_hypotheses(caps["hypotheses"])])


def _extract_alternatives(doc: FrameDocument) -> dict | None:
    hyps = _hypotheses_from_gmr(doc)
    if hyps is None or len(hyps) < 2:
        return None
    phrases = [hypothesis_phrase(h) for h in hyps]
    return {"hypotheses": ", ".join(phrases[:-1]) + " or " + phrases[-1]}


def _extract_single(doc: FrameDocument) -> dict | None:
    hyps = _hypotheses_from_gmr(doc)
    if hyps is None or len(hyps) != 1:
        return None
    return {"hypotheses": hypothesis_phrase(hyps[0])}


# --------------------------------------------------------------------------
# Template registry
# --------------------------------------------------------------------------

_SPEECH_HEAD = """#{act}.1
  agent       #{agent}
  beneficiary #{beneficiary}
"""


def _act(act: str, speaker: str, body: str = "") -> str:
    listener = ROBOT if speaker == HUMAN else HUMAN
    head = _SPEECH_HEAD.replace("{act}", act).replace("{agent}", speaker).replace("{beneficiary}", listener)
    return head + body


def _both(name: str, pattern: str, skeleton: str, surface: str, **kw) -> list[UtteranceTemplate]:
    return [
        UtteranceTemplate(name, "understand", pattern, skeleton, speaker=ROBOT, **kw),
        UtteranceTemplate(name, "generate", pattern, skeleton, speaker=ROBOT, surface=surface, **kw),
    ]


TEMPLATES: list[UtteranceTemplate] = [
    # -- teammate utterances ---------------------------------------------
    UtteranceTemplate(
        "describe-problem",
        "understand",
        r"(?:i think )?(?:the|our|my) {device:machine} (?:is|seems to be|keeps) {symptom:symptom}",
        _act("DESCRIBE-MECHANICAL-PROBLEM", HUMAN, "  theme       #{symptom}.1\n")
        + "#{symptom}.1\n  theme #{device}.1\n#{device}.1\n",
        definite=("device",),
    ),
    UtteranceTemplate(
        "check-log",
        "understand",
        r"(?:(?:can|could|would) you )?(?:please )?(?:check|look at|search|go through) the "
        r"(?:service |maintenance )?logs?(?: for .+?)?(?: please)?",
        _act("REQUEST-ACTION-CHECK-LOG", HUMAN, "  theme       #SERVICE-LOG.1\n") + "#SERVICE-LOG.1\n",
    ),
    UtteranceTemplate(
        "fetch",
        "understand",
        r"(?:please |(?:can|could|would) you )*(?:fetch|bring|get|grab|retrieve)(?: me)? an? {age:age} "
        r"{part:part}(?: for me)?(?: please)?",
        _act("REQUEST-ACTION-FETCH", HUMAN, "  theme       #{part}.1\n") + "#{part}.1\n  age {age}\n",
    ),
    UtteranceTemplate(
        "fetch-any",
        "understand",
        r"(?:please |(?:can|could|would) you )*(?:fetch|bring|get|grab|retrieve)(?: me)? an? {part:part}"
        r"(?: for me)?(?: please)?",
        _act("REQUEST-ACTION-FETCH", HUMAN, "  theme       #{part}.1\n") + "#{part}.1\n",
    ),
    UtteranceTemplate(
        "inform-label",
        "understand",
        r"{obj:anaphor} (?:(?:has|carries) (?:the )?label|is labell?ed) {label:label}",
        _act("INFORM", HUMAN, "  theme       #{obj}.1\n") + "#{obj}.1\n  label {label}\n",
    ),
    UtteranceTemplate(
        "inform-label-described",
        "understand",
        r"the {age:age} {part:part} (?:has|carries) (?:the )?label {label:label}",
        _act("INFORM", HUMAN, "  theme       #{part}.1\n") + "#{part}.1\n  age   {age}\n  label {label}\n",
        definite=("part",),
    ),
    UtteranceTemplate(
        "inform-location",
        "understand",
        r"(?:{obj:anaphor} is|it's|they are|you will find it) (?:in|at) the {zone:zone}",
        _act("INFORM", HUMAN, "  theme       #{obj}.1\n") + "#{obj}.1\n  located-in @{zone}\n",
    ),
    # -- the robot's own utterances ----------------------------------------
    UtteranceTemplate(
        "report-hypotheses",
        "understand",
        r"it might be {hypotheses:hypotheses}",
        speaker=ROBOT,
        builder=_build_alternatives,
    ),
    UtteranceTemplate(
        "report-hypotheses",
        "generate",
        r"it might be {hypotheses:hypotheses}",
        speaker=ROBOT,
        surface="It might be {hypotheses}.",
        extractor=_extract_alternatives,
    ),
    UtteranceTemplate(
        "report-single-hypothesis",
        "understand",
        r"the cause is {hypotheses:hypotheses}",
        speaker=ROBOT,
        builder=_build_alternatives,
    ),
    UtteranceTemplate(
        "report-single-hypothesis",
        "generate",
        r"the cause is {hypotheses:hypotheses}",
        speaker=ROBOT,
        surface="The cause is {hypotheses}.",
        extractor=_extract_single,
    ),
    *_both(
        "suggest-replacement",
        r"the service log shows the {part:part} was installed on {date:date}\. "
        r"it is too old and should be replaced",
        _act("SUGGEST-ACTION", ROBOT, "  theme       #REPLACE.1\n")
        + "#REPLACE.1\n  theme  @{part}\n  reason #STATE-OF-REPAIR.1\n"
        + "#STATE-OF-REPAIR.1\n  domain    @{part}\n  range     <0.7\n  installed {date}\n",
        "The service log shows the {part} was installed on {date}. It is too old and should be replaced.",
    ),
    *_both(
        "report-no-finding",
        r"the service log shows nothing that explains the problem",
        _act("REPORT-NO-FINDING", ROBOT, "  theme       #SERVICE-LOG.1\n") + "#SERVICE-LOG.1\n",
        "The service log shows nothing that explains the problem.",
    ),
    # location questions come first: the generic feature question would also cover them
    *_both(
        "ask-location",
        r"where is the {age:age} {part:part}",
        _act("REQUEST-INFO", ROBOT, "  theme       #{part}.1\n  property    located-in\n")
        + "#{part}.1\n  age {age}\n",
        "Where is the {age} {part}?",
        definite=("part",),
    ),
    *_both(
        "ask-location-plain",
        r"where is the {part:part}",
        _act("REQUEST-INFO", ROBOT, "  theme       #{part}.1\n  property    located-in\n") + "#{part}.1\n",
        "Where is the {part}?",
        definite=("part",),
    ),
    *_both(
        "ask-feature",
        r"what {property:property} does the {age:age} {part:part} have",
        _act("REQUEST-INFO", ROBOT, "  theme       #{part}.1\n  property    {property}\n")
        + "#{part}.1\n  age {age}\n",
        "What {property} does the {age} {part} have?",
        definite=("part",),
    ),
    *_both(
        "ask-feature-plain",
        r"what {property:property} does the {part:part} have",
        _act("REQUEST-INFO", ROBOT, "  theme       #{part}.1\n  property    {property}\n") + "#{part}.1\n",
        "What {property} does the {part} have?",
        definite=("part",),
    ),
    *_both("acknowledge", r"okay, thank you", _act("ACKNOWLEDGE", ROBOT), "Okay, thank you."),
    *_both(
        "report-completion",
        r"here is the {age:age} {part:part}",
        _act("REPORT-COMPLETION", ROBOT, "  theme       #{part}.1\n") + "#{part}.1\n  age {age}\n",
        "Here is the {age} {part}.",
        definite=("part",),
    ),
    *_both(
        "report-completion-plain",
        r"here is the {part:part}",
        _act("REPORT-COMPLETION", ROBOT, "  theme       #{part}.1\n") + "#{part}.1\n",
        "Here is the {part}.",
        definite=("part",),
    ),
    *_both(
        "report-no-cause",
        r"i do not know what could cause the {device:machine} {symptom:symptom}",
        _act("REPORT-NO-CAUSE", ROBOT, "  theme       #{symptom}.1\n")
        + "#{symptom}.1\n  theme #{device}.1\n#{device}.1\n",
        "I do not know what could cause the {device} {symptom}.",
        definite=("device",),
    ),
    *_both(
        "request-clarification",
        r"sorry, i did not understand\. could you rephrase that",
        _act("REQUEST-CLARIFICATION", ROBOT),
        "Sorry, I did not understand. Could you rephrase that?",
    ),
    *_both(
        "report-inability",
        r"i cannot do that: {reason:text}",
        _act("REPORT-INABILITY", ROBOT, "  reason      {reason}\n"),
        "I cannot do that: {reason}.",
    ),
]


def _template(name: str, direction: str) -> UtteranceTemplate:
    for t in TEMPLATES:
        if t.name == name and t.direction == direction:
            return t
    raise KeyError(f"no {direction} template {name!r}")


# --------------------------------------------------------------------------
# Skeleton filling and reference resolution
# --------------------------------------------------------------------------


def _field_text(kind: str, value: str) -> str:
    if kind in CONCEPT_TYPES or kind in ("age", "property"):
        return value
    return render_filler(Text(value))


def _fill(template: UtteranceTemplate, caps: dict[str, str], situation: SituationModel | None) -> FrameDocument:
    if template.builder is not None:
        return template.builder(caps)
    kinds = template.captures
    values: dict[str, str] = {}
    forced: dict[str, str] = {}
    for name, kind in kinds.items():
        if name not in caps:
            continue
        if kind == "anaphor":
            focus = situation.focus if situation is not None else None
            if focus is None or focus not in situation:
                raise AmbiguousReference("no antecedent for 'it'")
            concept = focus.rsplit(".", 1)[0]
            values[name] = concept
            forced[concept] = focus
        else:
            values[name] = _field_text(kind, caps[name])
    text = _FIELD_RE.sub(lambda m: values[m.group(1)], template.skeleton)
    doc = parse_frames(text, known=PARTICIPANTS)
    definite = {values[name] for name in template.definite if name in values}
    return _resolve_references(doc, definite, forced, situation)


def _resolve_references(
    doc: FrameDocument, definite: set[str], forced: dict[str, str], situation: SituationModel | None
) -> FrameDocument:
    frames = []
    for fr in doc.frames:
        target: str | None = None
        if fr.concept in forced:
            target = forced[fr.concept]
        elif fr.concept in definite and situation is not None:
            candidates = [s for s in situation.instances_of(fr.concept) if situation.compatible(s, fr.slots)]
            if len(candidates) > 1:
                ids = ", ".join(c.id for c in candidates)
                raise AmbiguousReference(f"'{fr.concept.lower()}' could mean any of {ids}")
            if candidates:
                target = candidates[0].id
        if target is not None:
            concept, index = target.rsplit(".", 1)
            fr = replace(fr, slots=(("corefer", CoRef(concept, int(index))),) + fr.slots)
        frames.append(fr)
    return FrameDocument(tuple(frames))


# --------------------------------------------------------------------------
# Public operations
# --------------------------------------------------------------------------


def utterance_to_tmr(utterance: str, situation: SituationModel | None = None) -> FrameDocument:
    """Understand ``utterance``; frames carry TMR provenance."""
    from .frames import Provenance

    for template in TEMPLATES:
        if template.direction != "understand":
            continue
        caps = template.match(utterance)
        if caps is None:
            continue
        doc = _fill(template, caps, situation)
        tick = situation.tick if situation is not None else None
        return doc.with_provenance(Provenance.TMR, tick)
    raise NoTemplateMatch(f"no template matches {utterance!r}")


def build(name: str, situation: SituationModel | None = None, **caps: str) -> FrameDocument:
    """Build the GMR of generation template ``name`` from capture values."""
    from .frames import Provenance

    doc = _fill(_template(name, "generate"), caps, situation)
    return doc.with_provenance(Provenance.GMR, situation.tick if situation is not None else None)


def _strip_coref(doc: FrameDocument) -> FrameDocument:
    return FrameDocument(tuple(replace(f, slots=tuple((k, v) for k, v in f.slots if k != "corefer")) for f in doc))


def _unify(template: UtteranceTemplate, doc: FrameDocument) -> dict[str, str] | None:
    """Captures that make ``template``'s skeleton equal ``doc`` (corefs ignored)."""
    kinds = template.captures
    placeholders: dict[str, str] = {}
    for i, (name, kind) in enumerate(kinds.items()):
        placeholders[name] = f"CAPTURE-X{i}" if kind in CONCEPT_TYPES else f"?capture-{i}"
    text = _FIELD_RE.sub(lambda m: placeholders[m.group(1)], template.skeleton)
    pattern = parse_frames(text, known=PARTICIPANTS)
    target = _strip_coref(doc)
    if len(pattern.frames) != len(target.frames):
        return None
    by_placeholder = {v: k for k, v in placeholders.items()}
    bound: dict[str, str] = {}

    def bind(name: str, value: str) -> bool:
        if name in bound and bound[name] != value:
            return False
        bound[name] = value
        return True

    def concept_ok(pc: str, tc: str) -> bool:
        if pc in by_placeholder:
            return bind(by_placeholder[pc], tc)
        return pc == tc

    for pf, tf in zip(pattern.frames, target.frames):
        if not concept_ok(pf.concept, tf.concept) or pf.index != tf.index:
            return None
        if len(pf.slots) != len(tf.slots):
            return None
        for (pk, pv), (tk, tv) in zip(pf.slots, tf.slots):
            if pk != tk:
                return None
            if isinstance(pv, Variable):
                name = by_placeholder[f"?{pv.name}"]
                kind = kinds[name]
                if kind in ("age", "property"):
                    value = render_filler(tv)
                elif isinstance(tv, Text):
                    value = tv.value
                else:
                    return None
                if not bind(name, value):
                    return None
            elif isinstance(pv, ConceptRef) and isinstance(tv, ConceptRef):
                if not concept_ok(pv.concept, tv.concept):
                    return None
            elif isinstance(pv, InstanceRef) and isinstance(tv, InstanceRef):
                if not concept_ok(pv.concept, tv.concept) or pv.index != tv.index:
                    return None
            elif pv != tv:
                return None
    return bound if set(bound) >= set(_FIELD_RE.findall(template.surface or "")) else None


def gmr_to_utterance(gmr: FrameDocument) -> str:
    """Realize a GMR as text."""
    for template in TEMPLATES:
        if template.direction != "generate":
            continue
        if template.extractor is not None:
            caps = template.extractor(gmr)
        else:
            if gmr.root is None or template.root_concept != gmr.root.concept:
                continue
            caps = _unify(template, gmr)
        if caps is None:
            continue
        try:
            words = {}
            for name, value in caps.items():
                kind = template.captures[name]
                words[name] = surface_of(kind, value) if kind in LEXICONS else value
        except UncoveredConcept:
            continue
        return template.surface.format(**words)
    root = gmr.root.concept if gmr.root is not None else "(empty)"
    raise UncoveredConcept(f"no generation template covers {root}")
