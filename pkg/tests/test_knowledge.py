from __future__ import annotations

import datetime as dt
from collections import deque

import pytest
from hypothesis import given, strategies as st

from harmonic.frames import ConceptRef, Comparison, FrameInstance, Variable, frame
from harmonic.knowledge import (
    CycleError,
    EpisodicRecord,
    KnowledgeError,
    NoScriptError,
    UnknownConceptError,
    data_text,
    load_knowledge,
    render_knowledge,
)

ONTO = data_text("ontology.kb")
SCRIPTS = data_text("scripts.kb")
LOG = data_text("service_log.tsv")

SMALL_ONTO = """\
@ALL
@EVENT
  IS-A ALL
@MACHINE
  IS-A ALL
@ENGINE
  IS-A MACHINE
@PUMP
  IS-A MACHINE
@A
  IS-A EVENT
@B
  IS-A EVENT
@C
  IS-A EVENT
CAUSED-BY a-from-b
  symptom @A
  cause   #B.1
#B.1
  theme @ENGINE
CAUSED-BY b-from-c
  symptom @B
  cause   #C.1
#C.1
  theme @ENGINE
CAUSED-BY c-from-a
  symptom @C
  cause   #A.1
#A.1
  theme @ENGINE
"""


def test_fixture_overheat_has_two_cause_links(kb):
    links = kb.links_for("OVERHEAT")
    assert [link.id for link in links] == ["overheat-pipe-obstruction", "overheat-worn-thermostat"]


def test_empty_scripts_section_loads():
    kb = load_knowledge(ONTO, "", LOG)
    assert kb.scripts == {}


def test_isa_cycle_is_rejected():
    with pytest.raises(CycleError):
        load_knowledge("@A\n  IS-A B\n@B\n  IS-A A\n", "", "")


def test_unknown_parent_is_rejected():
    with pytest.raises(UnknownConceptError):
        load_knowledge("@A\n  IS-A NOWHERE\n", "", "")


def test_parse_error_carries_location():
    with pytest.raises(Exception) as info:
        load_knowledge(ONTO, SCRIPTS, "2024-01-01\tpipe\tonly three fields\n")
    assert "line 1" in str(info.value)


def test_find_causes_overheat_engine(kb):
    causes = kb.find_causes("OVERHEAT", "ENGINE")
    assert [c.cause.concept for c in causes] == ["OBSTRUCT", "STATE-OF-REPAIR"]
    assert causes[0].cause.get("theme") == ConceptRef("PIPE")
    assert causes[1].cause.get("domain") == ConceptRef("THERMOSTAT")
    assert causes[1].cause.get("range") == Comparison("<", 0.7)


def test_find_causes_applicability_filters_pump(kb):
    assert kb.find_causes("OVERHEAT", "PUMP") == []


def test_find_causes_unknown_symptom(kb):
    with pytest.raises(UnknownConceptError):
        kb.find_causes("MELTDOWN", "ENGINE")


def test_find_causes_is_pure(kb):
    assert kb.find_causes("OVERHEAT", "ENGINE") == kb.find_causes("OVERHEAT", "ENGINE")


def _bfs_closure(kb, symptom):
    # independent oracle: breadth-first over every cause link, no applicability
    out, seen, queue = [], set(), deque([symptom])
    while queue:
        sym = queue.popleft()
        for link in kb.cause_links:
            if link.symptom == sym and link.id not in seen:
                seen.add(link.id)
                out.append(link.id)
                queue.append(link.cause.concept)
    return out


def test_transitive_mode_matches_bfs_oracle_and_direct_mode_is_one_hop():
    kb = load_knowledge(SMALL_ONTO, "", "")
    assert [link.id for link in kb.find_causes("A", "ENGINE")] == ["a-from-b"]
    got = [link.id for link in kb.find_causes("A", "ENGINE", transitive=True)]
    assert got == _bfs_closure(kb, "A") == ["a-from-b", "b-from-c", "c-from-a"]


def test_inherit_mode_applies_ancestor_links():
    onto = SMALL_ONTO + "@D\n  IS-A A\n"
    kb = load_knowledge(onto, "", "")
    assert kb.find_causes("D", "ENGINE") == []
    assert [link.id for link in kb.find_causes("D", "ENGINE", inherit=True)] == ["a-from-b"]


def test_script_for_diagnosis_goal(kb):
    s = kb.script_for_goal("HYPOTHESIZE-MECHANICAL-PROBLEM-CAUSE")
    assert [step.action for step in s.steps] == ["find-causes", "report-hypotheses"]
    assert s.preconditions == ()


def test_script_for_fetch_goal(kb):
    s = kb.script_for_goal("FETCH")
    assert {r.subject for r in s.preconditions} == {"features-of-theme", "location-of-theme"}
    assert [step.label for step in s.steps] == ["SEARCH", "HOLD", "RETURN", "DROP"]
    assert [step.action for step in s.steps] == ["SEARCH", "PICKUP", "WAYPOINT", "DROPOBJECT"]


def test_script_for_unknown_goal(kb):
    with pytest.raises(NoScriptError):
        kb.script_for_goal("UNKNOWN-GOAL")


def test_one_metascript_per_requirement_kind(kb):
    kinds = [s.metascript_trigger for s in kb.scripts.values() if s.is_metascript]
    assert sorted(kinds) == sorted(set(kinds))
    for s in kb.scripts.values():
        for req in s.preconditions:
            if "ask-teammate" in req.resolution_order:
                assert kb.metascript_for(req.subject).metascript_trigger == req.subject


def test_requirements_keep_ask_teammate_last(kb):
    for s in kb.scripts.values():
        for req in s.preconditions:
            assert req.resolution_order
            if "ask-teammate" in req.resolution_order:
                assert req.resolution_order[-1] == "ask-teammate"


def test_unbound_step_variable_is_rejected():
    bad = SCRIPTS.replace("  object      ?theme-type\n", "  object      ?never-bound\n")
    with pytest.raises(KnowledgeError):
        load_knowledge(ONTO, bad, LOG)


def test_search_logs_empty_query_returns_all_sixteen_in_date_order(kb):
    entries = kb.search_logs("")
    assert len(entries) == 16
    assert [e.date for e in entries] == sorted(e.date for e in entries)
    span = (entries[-1].date - entries[0].date).days
    assert 700 <= span <= 760


def test_search_logs_thermostat_matches_substring_oracle(kb):
    lines = [ln.split("\t") for ln in LOG.splitlines() if ln.strip()]
    oracle = [f for f in lines if any("thermostat" in field.lower() for field in f[1:])]
    got = kb.search_logs("thermostat")
    assert [(e.date.isoformat(), e.component, e.action, e.note) for e in got] == [tuple(f) for f in oracle]
    assert len(got) == 2


def test_search_logs_absent_term(kb):
    assert kb.search_logs("warp-drive") == []


@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz -", max_size=6))
def test_search_logs_agrees_with_scan(query):
    from harmonic.knowledge import default_knowledge

    kb = default_knowledge()
    q = query.strip().lower()
    expected = [e for e in kb.service_log if q in e.component.lower() or q in e.action.lower() or q in e.note.lower()]
    assert kb.search_logs(query) == expected


def test_fixture_supports_thermostat_replacement(kb):
    installs = [e for e in kb.search_logs("thermostat") if e.action == "installed"]
    assert installs
    age_months = (dt.date(2026, 3, 10) - installs[0].date).days / 30.4375
    assert age_months >= kb.attr("THERMOSTAT", "service-life-months").value


def test_episodic_lookup_thermostat_location(kb):
    rec = kb.episodic_lookup(frame("THERMOSTAT", 1, ("located-in", Variable("where"))))
    assert rec is not None
    assert rec.content.get("located-in") == ConceptRef("STORES-ZONE")


def test_episodic_lookup_empty_store():
    kb = load_knowledge(ONTO, SCRIPTS, LOG, "")
    assert kb.episodic_lookup(frame("THERMOSTAT", 1, ("located-in", Variable("where")))) is None


@given(st.lists(st.integers(min_value=0, max_value=50), min_size=1, max_size=8))
def test_episodic_lookup_picks_latest(timestamps):
    kb = load_knowledge(ONTO, SCRIPTS, LOG, "")
    zones = ["ENGINE-ROOM", "CORRIDOR", "STORES-ZONE"]
    records = []
    for k, ts in enumerate(sorted(timestamps)):
        rec = EpisodicRecord(ts, frame("THERMOSTAT", 1, ("located-in", ConceptRef(zones[k % 3]))))
        kb.remember(rec)
        records.append(rec)
    # oracle: max timestamp, later store order wins ties
    best = max(range(len(records)), key=lambda i: (records[i].timestamp, i))
    assert kb.episodic_lookup(frame("THERMOSTAT", 1, ("located-in", Variable("w")))) is records[best]


def test_episodic_store_rejects_out_of_order():
    kb = load_knowledge(ONTO, SCRIPTS, LOG, "EPISODE 9\n  concept @THERMOSTAT\n  located-in @STORES-ZONE\n")
    with pytest.raises(KnowledgeError):
        kb.remember(EpisodicRecord(5, frame("THERMOSTAT", 1, ("located-in", ConceptRef("CORRIDOR")))))


def test_render_then_load_round_trips(kb):
    again = load_knowledge(*render_knowledge(kb))
    assert again.concepts == kb.concepts
    assert again.cause_links == kb.cause_links
    assert again.scripts == kb.scripts
    assert again.service_log == kb.service_log
    assert again.episodic == kb.episodic
