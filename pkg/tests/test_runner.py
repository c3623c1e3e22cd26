from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from harmonic.runner import DanielScript, ScriptedInput, ontoagent_factory, overshoot_sweep, overshoot_trial, run_trial, run_trials
from harmonic.transcript import (
    Transcript,
    TranscriptError,
    check_transcript,
    iter_events,
    load_dir,
    parse_transcript,
)


def test_reference_trials_are_byte_identical(tmp_path):
    results = run_trials(ontoagent_factory(), 3, seed=0, out_dir=tmp_path)
    texts = [p.read_text() for p in sorted(tmp_path.glob("*.jsonl"))]
    assert len(texts) == 3
    # only the trial index in the header differs
    bodies = {t.split("\n", 1)[1] for t in texts}
    assert len(bodies) == 1
    assert all(r.delivered for r in results)
    assert texts[0] == results[0].transcript.dumps()


def test_header_fields(reference_trial):
    h = reference_trial.transcript.header
    assert h["agent"] == "ontoagent" and h["seed"] == 0 and h["budget"] == 600
    assert h["fixture_version"] == "thermostat-v1"


def test_trial_end_event(reference_trial):
    end = reference_trial.transcript.end
    assert end["delivered"] and not end["aborted"]
    assert end["ticks"] == reference_trial.ticks == 47


def test_perception_logged_every_tick(reference_trial):
    frames = [e for e in reference_trial.transcript.events if e.channel == "perception" and "pose" in e.payload]
    assert [e.tick for e in frames] == list(range(reference_trial.ticks))


def test_budget_exhaustion_closes_open_actions():
    result = run_trial(ontoagent_factory(), seed=0, budget=10)
    t = result.transcript
    assert not result.delivered
    check_transcript(t)
    statuses = [e.payload["status"] for e in t.events if e.channel == "outcome" and "id" in e.payload]
    assert statuses == ["aborted"]


def test_latency_delays_outputs():
    fast = run_trial(ontoagent_factory(0), seed=0)
    slow = run_trial(ontoagent_factory(2), seed=0)
    assert slow.delivered
    first = lambda r: next(e.tick for e in r.transcript.events if e.channel == "action")
    assert first(slow) > first(fast)


def test_scripted_input_feeds_turns():
    teammate = ScriptedInput(lambda tick: ["The engine is overheating."] if tick == 0 else [])
    result = run_trial(ontoagent_factory(), seed=0, teammate=teammate, budget=5)
    said = [text for _, who, text in result.transcript.dialogue() if who == "robot"]
    assert said == ["It might be a pipe obstruction or a broken thermostat."]
    assert result.ticks == 5 and not result.delivered


def test_daniel_script_answers_location_questions():
    d = DanielScript()
    assert d.due(0) == ["The engine is overheating."]
    d.observe("It might be ...", 0)
    assert d.due(1) == ["Can you check the service log?"]
    d.observe("The service log ...", 1)
    d.due(2)
    d.observe("Where is the new thermostat?", 2)
    assert "stores" in d.due(3)[0].lower()


# -- overshoot ------------------------------------------------------------------------


@pytest.mark.parametrize("latency", [1, 2, 3])
@pytest.mark.parametrize("speed", [0.5, 1.0])
def test_waypoint_stop_overshoots_and_search_does_not(latency, speed):
    wp = overshoot_trial("waypoint", latency, speed)
    se = overshoot_trial("search", latency, speed)
    assert wp.halt_distance > 0.5 and not wp.pickup_succeeded
    assert se.halt_distance <= 0.5 and se.pickup_succeeded


@pytest.mark.parametrize("latency", [1, 2, 3])
@pytest.mark.parametrize("speed", [0.5, 1.0])
def test_overshoot_matches_kinematic_oracle(latency, speed):
    # STOP is issued on the first frame at or past the target and lands L ticks
    # later, so the robot travels L more steps: past in [v*L, v*(L+1))
    wp = overshoot_trial("waypoint", latency, speed)
    assert speed * latency - 1e-9 <= wp.past_target < speed * (latency + 1)
    lateral = 0.3
    assert wp.halt_distance == pytest.approx(math.hypot(wp.past_target, lateral))


def test_sweep_covers_grid():
    pairs = overshoot_sweep()
    assert len(pairs) == 6
    assert all(not w.pickup_succeeded and s.pickup_succeeded for w, s in pairs)


def test_overshoot_rejects_zero_latency():
    with pytest.raises(ValueError):
        overshoot_trial("waypoint", 0)


# -- transcripts ----------------------------------------------------------------------


def test_transcript_round_trip(reference_trial):
    t = reference_trial.transcript
    again = parse_transcript(t.dumps())
    assert again.header == t.header and again.events == t.events
    assert again.dumps() == t.dumps()


def test_transcript_rejects_unknown_channel():
    t = Transcript({"agent": "x", "model": None, "condition": None, "seed": 0, "fixture_version": "v"})
    with pytest.raises(TranscriptError):
        t.append(0, "telemetry", {})


def test_transcript_rejects_tick_regression():
    t = Transcript({"agent": "x", "model": None, "condition": None, "seed": 0, "fixture_version": "v"})
    t.append(3, "dialogue", {"speaker": "daniel", "text": "hi"})
    with pytest.raises(TranscriptError):
        t.append(2, "dialogue", {"speaker": "daniel", "text": "hi"})


def test_transcript_requires_header_fields():
    with pytest.raises(TranscriptError):
        Transcript({"agent": "x"})


def test_parse_rejects_unclosed_action():
    head = '{"agent":"x","condition":null,"fixture_version":"v","model":null,"seed":0}\n'
    body = '{"channel":"action","payload":{"command":{"name":"STOP","params":{}},"id":1},"tick":0}\n'
    with pytest.raises(TranscriptError):
        parse_transcript(head + body)
    with pytest.raises(TranscriptError):
        parse_transcript("")


def test_iter_events_filters(reference_trial):
    got = list(iter_events(reference_trial.transcript, ["action"], range(0, 28)))
    assert [e.payload["command"]["name"] for e in got] == ["SEARCH", "PICKUP"]


def test_load_dir_recurses(tmp_path, reference_trial):
    (tmp_path / "a" / "b").mkdir(parents=True)
    reference_trial.transcript.dump(tmp_path / "a" / "b" / "t.jsonl")
    assert len(load_dir(tmp_path)) == 1
    with pytest.raises(TranscriptError):
        load_dir(tmp_path / "a" / "empty" if (tmp_path / "a" / "empty").mkdir() is None else tmp_path)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.sampled_from(["dialogue", "reasoning", "tool"]), st.text(max_size=10)), max_size=20))
def test_dumps_parse_round_trip(events):
    t = Transcript({"agent": "x", "model": None, "condition": None, "seed": 0, "fixture_version": "v"})
    tick = 0
    for dt, channel, text in events:
        tick += dt
        t.append(tick, channel, {"text": text})
    assert parse_transcript(t.dumps()).dumps() == t.dumps()
