from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from harmonic.frames import (
    CoRef,
    Comparison,
    ConceptRef,
    DanglingReferenceError,
    Directive,
    DuplicateInstanceError,
    FrameDocument,
    FrameInstance,
    FrameSyntaxError,
    InstanceRef,
    Number,
    NumericRange,
    Text,
    Variable,
    check_document,
    parse_filler,
    parse_frames,
    render_filler,
    render_frames,
    skeleton,
)

LISTINGS = Path(__file__).parent / "fixtures" / "listings"
PARTICIPANTS = ("HUMAN.1", "LEIA.1", "ENGINE.1", "OVERHEAT.1")


def listing(name: str) -> str:
    return (LISTINGS / f"{name}.txt").read_text()


# -- printed listings -------------------------------------------------------


def test_listing_problem_report_parses():
    doc = parse_frames(listing("request-describe-problem"), known=PARTICIPANTS)
    assert [f.id for f in doc] == ["DESCRIBE-MECHANICAL-PROBLEM.1", "OVERHEAT.1", "ENGINE.1"]
    assert doc.root.get("theme") == InstanceRef("OVERHEAT", 1)
    assert doc["ENGINE.1"].get("corefer") == CoRef("ENGINE", 1)


def test_listing_plan_parses_with_label_and_joined_directive():
    doc = parse_frames(listing("plan-diagnose"), known=PARTICIPANTS)
    assert doc.label == "Plan.1"
    assert len(doc) == 1
    assert doc.root.get("*take-this-action") == Directive("take-this-action", "search ontology for causes; report.")


def test_listing_hypotheses_parses():
    doc = parse_frames(listing("hypotheses"))
    assert [f.concept for f in doc] == ["ALTERNATIVE", "MODALITY", "MODALITY", "OBSTRUCT", "STATE-OF-REPAIR"]
    assert doc["MODALITY.1"].get("value") == Number(0.5)
    assert doc["MODALITY.1"].get("type") == Text("EPISTEMIC")
    assert doc["STATE-OF-REPAIR.1"].get("range") == Comparison("<", 0.7)


def test_listing_fetch_request_parses():
    doc = parse_frames(listing("request-fetch"), known=PARTICIPANTS)
    assert doc.root.get("theme") == InstanceRef("THERMOSTAT", 1)
    assert doc["THERMOSTAT.1"].get("age") == NumericRange(0.0001, 0.1)


@pytest.mark.parametrize("name", ["request-describe-problem", "plan-diagnose", "hypotheses", "request-fetch"])
def test_listings_round_trip(name):
    doc = parse_frames(listing(name), known=PARTICIPANTS)
    assert parse_frames(render_frames(doc), known=PARTICIPANTS) == doc


# -- fillers and errors ------------------------------------------------------


def test_range_admits_bounds():
    r = NumericRange(0.0001, 0.1)
    assert r.admits(0.0001) and r.admits(0.1) and r.admits(0.05)
    assert not r.admits(0.2) and not r.admits(0.0)


def test_range_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        NumericRange(2, 1)


@pytest.mark.parametrize("op,value,inside,outside", [("<", 0.7, 0.69, 0.7), ("<=", 0.7, 0.7, 0.71), (">", 1, 2, 1), (">=", 1, 1, 0.9)])
def test_comparison_admits(op, value, inside, outside):
    c = Comparison(op, value)
    assert c.admits(inside) and not c.admits(outside)


def test_parse_filler_kinds():
    assert parse_filler("#A.2") == InstanceRef("A", 2)
    assert parse_filler("->A.2") == CoRef("A", 2)
    assert parse_filler("@PIPE") == ConceptRef("PIPE")
    assert parse_filler("?where") == Variable("where")
    assert parse_filler("1<>2") == NumericRange(1, 2)
    assert parse_filler("-3.5") == Number(-3.5)
    assert parse_filler('"a // b"') == Text("a // b")


def test_dangling_reference_reports_location():
    with pytest.raises(DanglingReferenceError) as info:
        parse_frames("#A.1\n  theme #B.1\n")
    assert info.value.line == 1


def test_participants_resolve_via_known():
    text = "#A.1\n  agent #HUMAN.1\n"
    with pytest.raises(DanglingReferenceError):
        parse_frames(text)
    assert parse_frames(text, known=["HUMAN.1"]).root.get("agent") == InstanceRef("HUMAN", 1)


def test_duplicate_instance_rejected():
    with pytest.raises(DuplicateInstanceError):
        parse_frames("#A.1\n  x 1\n#A.1\n  y 2\n")


def test_malformed_filler_reports_line_and_column():
    with pytest.raises(FrameSyntaxError) as info:
        parse_frames("#A.1\n  x 1\n  y #bad\n")
    assert (info.value.line, info.value.col) == (3, 5)


def test_unterminated_quote():
    with pytest.raises(FrameSyntaxError):
        parse_frames('#A.1\n  x "open\n')


def test_slot_line_outside_frame():
    with pytest.raises(FrameSyntaxError):
        parse_frames("  theme @X\n")


def test_check_document_flags_dangling():
    doc = FrameDocument((FrameInstance("A", 1, (("x", InstanceRef("B", 1)),)),))
    with pytest.raises(DanglingReferenceError):
        check_document(doc)
    check_document(doc, known=["B.1"])


def test_skeleton_ignores_numbering():
    a = parse_frames("#X.1\n  r #Y.4\n#Y.4\n  v 1\n")
    b = parse_frames("#X.7\n  r #Y.2\n#Y.2\n  v 1\n")
    c = parse_frames("#X.1\n  r #Y.4\n#Y.4\n  v 2\n")
    assert skeleton(a) == skeleton(b) != skeleton(c)


# -- generated documents -----------------------------------------------------

UPPER, LOWER, DIGITS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz", "0123456789"


def _names(head: str, tail: str, parts: int):
    word = st.text(alphabet=tail, min_size=1, max_size=4)
    return st.builds(
        lambda h, first, rest: "-".join([h + first, *rest]),
        st.sampled_from(head),
        st.text(alphabet=tail, max_size=5),
        st.lists(word, max_size=parts),
    )


concepts = _names(UPPER, UPPER + DIGITS, 2)
slot_names = _names(LOWER, LOWER + DIGITS, 1)
numbers = st.floats(allow_nan=False, allow_infinity=False, width=64)
texts = st.text(
    alphabet=st.characters(codec="utf-8", exclude_categories=("Cs", "Cc")) | st.sampled_from('\\"/\n\t {}\x85\u2028\r'),
    max_size=20,
)


@st.composite
def ranges(draw):
    a, b = draw(numbers), draw(numbers)
    return NumericRange(min(a, b), max(a, b))


def literal_fillers():
    return st.one_of(
        concepts.map(ConceptRef),
        slot_names.map(Variable),
        numbers.map(Number),
        ranges(),
        st.builds(Comparison, st.sampled_from(["<", "<=", ">", ">="]), numbers),
        texts.map(Text),
        st.builds(CoRef, concepts, st.integers(0, 999)),
    )


@st.composite
def documents(draw):
    ids = draw(st.lists(st.tuples(concepts, st.integers(0, 99)), min_size=1, max_size=6, unique=True))
    refs = [InstanceRef(c, i) for c, i in ids]
    frames = []
    for concept, index in ids:
        names = draw(st.lists(slot_names, max_size=5, unique=True))
        slots = [(n, draw(literal_fillers() | st.sampled_from(refs))) for n in names]
        if draw(st.booleans()):
            dname = draw(slot_names)
            slots.append(("*" + dname, Directive(dname, draw(texts))))
        frames.append(FrameInstance(concept, index, tuple(slots)))
    label = draw(st.none() | st.from_regex(r"[A-Z][a-z]{0,5}\.[0-9]{1,2}", fullmatch=True))
    return FrameDocument(tuple(frames), label)


@settings(max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(documents())
def test_parse_render_round_trip_on_generated_documents(doc):
    text = render_frames(doc)
    again = parse_frames(text)
    assert again == doc
    assert render_frames(again) == text


@given(literal_fillers())
def test_filler_round_trip(filler):
    assert parse_filler(render_filler(filler)) == filler
