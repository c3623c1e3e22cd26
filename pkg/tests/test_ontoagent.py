from __future__ import annotations

import pytest

from harmonic.agent import Dispatch, Note, Say
from harmonic.frames import Comparison, ConceptRef, FrameDocument, Number, Text, parse_frames, skeleton
from harmonic.knowledge import data_text, load_knowledge
from harmonic.ontoagent import ActionabilityError, OntoAgent, diagnose, diagnose_with_trace, ground_vmr, vmr_from_candidate
from harmonic.runner import make_ontoagent, run_trial
from harmonic.situation import SituationModel

from conftest import FIXTURES


def _symptom():
    sit = SituationModel.initial()
    return sit, parse_frames("#OVERHEAT.1\n  theme #ENGINE.1\n", known=["ENGINE.1"]).root


def test_diagnosis_is_structurally_equal_to_printed_hypotheses(kb):
    sit, symptom = _symptom()
    gmr = diagnose(symptom, sit, kb)
    printed = parse_frames((FIXTURES / "listings" / "hypotheses.txt").read_text())
    assert skeleton(gmr) == skeleton(printed)


def test_diagnosis_modalities_are_equal(kb):
    sit, symptom = _symptom()
    gmr = diagnose(symptom, sit, kb)
    mods = gmr.by_concept("MODALITY")
    assert [m.get("value") for m in mods] == [Number(0.5), Number(0.5)]
    assert all(m.get("type") == Text("EPISTEMIC") for m in mods)
    assert gmr["STATE-OF-REPAIR.1"].get("range") == Comparison("<", 0.7)
    assert gmr["OBSTRUCT.1"].get("theme") == ConceptRef("PIPE")


def test_diagnosis_traces_cause_links(kb):
    sit, symptom = _symptom()
    _, links = diagnose_with_trace(symptom, sit, kb)
    assert [link.id for link in links] == ["overheat-pipe-obstruction", "overheat-worn-thermostat"]


def test_diagnosis_without_causes_reports_no_cause(kb):
    sit = SituationModel.initial()
    symptom = parse_frames("#OVERHEAT.1\n  theme @PUMP\n").root
    gmr = diagnose(symptom, sit, kb)
    assert gmr.root.concept == "REPORT-NO-CAUSE"


def test_diagnosis_rejects_non_malfunction(kb):
    sit = SituationModel.initial()
    with pytest.raises(ValueError):
        diagnose(parse_frames("#ENGINE.1\n").root, sit, kb)


def test_ground_vmr_match_and_mismatch():
    vmr = vmr_from_candidate({"object": "part-42", "label": "thermostat-new", "features": {"colour": "grey"}}, "THERMOSTAT")
    assert ground_vmr(vmr, {"label": Text("thermostat-new")}) == "match"
    assert ground_vmr(vmr, {"label": Text("thermostat-old")}) == "mismatch"
    assert ground_vmr(vmr, {"colour": Text("grey")}) == "match"
    assert ground_vmr(vmr, {"weight": Number(2)}) == "mismatch"


def test_ground_vmr_empty_document():
    assert ground_vmr(FrameDocument(), {}) == "match"
    with pytest.raises(ValueError):
        ground_vmr(FrameDocument(), {"label": Text("x")})


# -- whole trials -------------------------------------------------------------


def _dialogue(t, speaker):
    return [e.payload["text"] for e in t.events if e.channel == "dialogue" and e.payload["speaker"] == speaker]


def _commands(t):
    return [e.payload["command"]["name"] for e in t.events if e.channel == "action"]


def test_reference_trial_dialogue(reference_trial):
    assert _dialogue(reference_trial.transcript, "robot") == [
        "It might be a pipe obstruction or a broken thermostat.",
        "The service log shows the thermostat was installed on 2024-02-26. It is too old and should be replaced.",
        "What label does the new thermostat have?",
        "Okay, thank you.",
        "Here is the new thermostat.",
    ]


def test_reference_trial_commands_and_delivery(reference_trial):
    assert _commands(reference_trial.transcript) == ["SEARCH", "PICKUP", "WAYPOINT", "DROPOBJECT"]
    assert reference_trial.delivered and not reference_trial.aborted
    search = next(e for e in reference_trial.transcript.events if e.channel == "action")
    assert search.payload["command"]["params"] == {
        "features": {"label": "thermostat-new"},
        "object": "thermostat",
        "zone": "stores-zone",
    }


def test_every_output_has_a_preceding_reason(reference_trial):
    # each dispatch and each robot utterance follows a reasoning note at the same tick
    events = reference_trial.transcript.events
    for i, e in enumerate(events):
        robot_says = e.channel == "dialogue" and e.payload["speaker"] == "robot"
        if e.channel == "action" or robot_says:
            before = [p for p in events[:i] if p.tick == e.tick and p.channel == "reasoning"]
            assert before, f"no reasoning before {e.payload}"


def test_waypoint_alternative_rejected_for_temporal_validity(reference_trial):
    notes = [e.payload for e in reference_trial.transcript.events if e.channel == "reasoning" and e.payload["decision"] == "action-selected"]
    first = notes[0]["detail"]["candidates"]
    assert first[0]["command"] == "SEARCH" and first[0]["accepted"]
    assert first[1]["command"] == "WAYPOINT" and first[1]["rejected"] == "temporal validity failure"


def test_location_comes_from_episodic_memory_without_asking(reference_trial):
    assert not any("Where" in s for s in _dialogue(reference_trial.transcript, "robot"))


def _no_memory_factory(world, trial):
    agent = make_ontoagent(world)
    agent.kb = load_knowledge(data_text("ontology.kb"), data_text("scripts.kb"), data_text("service_log.tsv"), "")
    return agent


def test_without_episodic_memory_agent_asks_for_location():
    result = run_trial(_no_memory_factory, seed=0)
    said = _dialogue(result.transcript, "robot")
    assert "Where is the new thermostat?" in said
    assert "What label does the new thermostat have?" in said
    assert _commands(result.transcript) == ["SEARCH", "PICKUP", "WAYPOINT", "DROPOBJECT"]
    assert result.delivered


def test_actionability_rejects_unreachable_zone(kb):
    agent = OntoAgent(kb, zones=("engine-room",))
    step = kb.scripts["fetch"].steps[0]
    plan = agent._instantiate(kb.scripts["fetch"], _theme(agent))
    plan.bindings.update({"location-of-theme": ConceptRef("STORES-ZONE"), "features-of-theme": {"label": "x"}})
    with pytest.raises(ActionabilityError):
        agent.select_action(step, plan)


def test_no_command_when_every_alternative_is_rejected(kb):
    # with a grasp radius smaller than one tick of travel neither candidate is executable if SEARCH is removed
    agent = OntoAgent(kb, grasp_radius=0.1)
    fetch = kb.scripts["fetch"]
    step = fetch.steps[0]
    only_waypoint = type(step)(**{**step.__dict__, "action": "WAYPOINT", "alternatives": ()})
    plan = agent._instantiate(fetch, _theme(agent))
    plan.bindings.update({"location-of-theme": ConceptRef("STORES-ZONE")})
    with pytest.raises(ActionabilityError):
        agent.select_action(only_waypoint, plan)


def _theme(agent):
    return agent.situation.add("THERMOSTAT")


def test_agent_step_is_deterministic(kb):
    from harmonic.agent import StepInput

    outs = []
    for _ in range(2):
        agent = OntoAgent(kb)
        out = agent.step(StepInput(0, None, ("The engine is overheating.",), (), ()))
        outs.append([type(o).__name__ for o in out])
    assert outs[0] == outs[1]
    assert "Say" in outs[0] and "Note" in outs[0]
