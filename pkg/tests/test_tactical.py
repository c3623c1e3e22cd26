from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from harmonic.commands import CommandError, make_command
from harmonic.sim import spawn
from harmonic.tactical import (
    Action,
    Blackboard,
    BlackboardViolation,
    Condition,
    Inverter,
    Retry,
    Selector,
    Sequence,
    SkillState,
    Status,
    TacticalController,
    encode_frame,
)


def run(controller, world, ticks, *, verdict=None):
    """Drive the control loop; ``verdict(candidate) -> bool`` answers SEARCH candidates at once."""
    statuses = []
    for _ in range(ticks):
        t = world.tick
        controller.encode(world, t)
        act, events = controller.tick(world, t)
        world.step(act)
        statuses += events
        for ev in events:
            cand = ev.detail.get("candidate")
            if cand is not None and verdict is not None:
                controller.deliver_verdict(cand["object"], verdict(cand), world.tick)
        if any(ev.state in (SkillState.SUCCEEDED, SkillState.FAILED) for ev in events):
            break
    return statuses


# -- blackboard ------------------------------------------------------------------


def test_blackboard_single_writer_per_key():
    bb = Blackboard()
    bb.write("encoder", "pose", (0, 0, 0), 1)
    with pytest.raises(BlackboardViolation):
        bb.write("decoder", "pose", (1, 1, 0), 1)
    with pytest.raises(BlackboardViolation):
        bb.write("skill", "active-skill", "x", 1)
    with pytest.raises(BlackboardViolation):
        bb.write("strategist", "pose", None, 1)


def test_blackboard_entries_are_tick_stamped():
    bb = Blackboard()
    bb.write("encoder", "speed", 0.5, 3)
    bb.write("encoder", "speed", 0.7, 4)
    e = bb.entry("speed")
    assert (e.value, e.tick, e.writer) == (0.7, 4, "encoder")
    assert bb.read("missing", "d") == "d"


# -- behavior tree -----------------------------------------------------------------


def const(status):
    return Action(lambda ctx: status)


def test_sequence_and_selector_semantics():
    S, F, R = Status.SUCCESS, Status.FAILURE, Status.RUNNING
    assert Sequence(const(S), const(S)).tick(None) is S
    assert Sequence(const(S), const(F), const(S)).tick(None) is F
    assert Sequence(const(R), const(F)).tick(None) is R
    assert Selector(const(F), const(S)).tick(None) is S
    assert Selector(const(F), const(F)).tick(None) is F
    assert Selector(const(R), const(S)).tick(None) is R


def test_inverter_and_retry():
    assert Inverter(const(Status.SUCCESS)).tick(None) is Status.FAILURE
    assert Inverter(const(Status.RUNNING)).tick(None) is Status.RUNNING
    calls = []

    def flaky(ctx):
        calls.append(1)
        return Status.SUCCESS if len(calls) == 3 else Status.FAILURE

    assert Retry(Action(flaky), 5).tick(None) is Status.SUCCESS
    assert len(calls) == 3
    assert Condition(lambda c: False).tick(None) is Status.FAILURE


# -- skills --------------------------------------------------------------------------


def test_search_stops_at_candidate_within_grasp_radius():
    world = spawn(0)
    c = TacticalController()
    c.decode_command(make_command("SEARCH", {"zone": "stores-zone", "object": "thermostat"}), 0, world, 1)
    statuses = run(c, world, 200, verdict=lambda cand: cand["label"] == "thermostat-new")
    cands = [s.detail["candidate"]["object"] for s in statuses if "candidate" in s.detail]
    assert cands == ["part-17", "part-42"]
    assert statuses[-1].state is SkillState.SUCCEEDED
    assert statuses[-1].detail == {"object": "part-42"}
    r = world.robot
    assert math.dist((r.x, r.y), world.object_position("part-42")) <= world.config.grasp_radius


def test_candidate_report_has_shape_and_label():
    world = spawn(0)
    c = TacticalController()
    c.decode_command(make_command("SEARCH", {"zone": "stores-zone", "object": "thermostat"}), 0, world, 1)
    statuses = run(c, world, 200, verdict=lambda cand: True)
    cand = next(s.detail["candidate"] for s in statuses if "candidate" in s.detail)
    assert cand == {"object": "part-17", "shape": "thermostat", "label": "thermostat-old", "features": {"age": 0.8}}


def test_search_without_match_exhausts_sweep():
    world = spawn(0)
    c = TacticalController()
    c.decode_command(make_command("SEARCH", {"zone": "stores-zone", "object": "thermostat"}), 0, world, 1)
    statuses = run(c, world, 400, verdict=lambda cand: False)
    assert statuses[-1].state is SkillState.FAILED
    assert statuses[-1].detail["reason"] == "sweep exhausted"


def test_waypoint_ignores_objects_and_arrives():
    world = spawn(0)
    c = TacticalController()
    c.decode_command(make_command("WAYPOINT", {"waypoint": "stores-zone"}), 0, world, 1)
    statuses = run(c, world, 100)
    assert statuses[-1].state is SkillState.SUCCEEDED
    assert statuses[-1].detail["arrived"] == [23.0, 3.0]
    assert not any("candidate" in s.detail for s in statuses)


def test_pickup_out_of_reach_fails_with_grasp_radius_violation():
    world = spawn(0)
    c = TacticalController()
    c.decode_command(make_command("PICKUP", {"object": "part-42"}), 0, world, 1)
    statuses = run(c, world, 2)
    assert statuses[-1].state is SkillState.FAILED
    assert statuses[-1].detail["reason"] == "grasp-radius violation"


def test_drop_with_empty_gripper_fails():
    world = spawn(0)
    c = TacticalController()
    c.decode_command(make_command("DROPOBJECT", {"location": "floor"}), 0, world, 1)
    assert run(c, world, 2)[-1].detail == {"reason": "empty-gripper drop"}


def test_unknown_search_zone_rejected_and_previous_skill_kept():
    world = spawn(0)
    c = TacticalController()
    c.decode_command(make_command("WAYPOINT", {"waypoint": "stores-zone"}), 0, world, 1)
    with pytest.raises(CommandError):
        c.decode_command(make_command("SEARCH", {"zone": "bridge", "object": "thermostat"}), 0, world, 2)
    assert c.active_skill == "waypoint"


def test_unknown_command_rejected():
    with pytest.raises(CommandError):
        make_command("TELEPORT", {})
    with pytest.raises(CommandError):
        make_command("PICKUP", {})


def test_stop_preempts_running_skill():
    world = spawn(0)
    c = TacticalController()
    c.decode_command(make_command("WAYPOINT", {"waypoint": "stores-zone"}), 0, world, 1)
    run(c, world, 3)
    events = c.decode_command(make_command("STOP"), world.tick, world, 2)
    assert [(e.skill, e.state) for e in events] == [("waypoint", SkillState.IDLE), ("stop", SkillState.SUCCEEDED)]
    x = world.robot.x
    run(c, world, 3)
    assert world.robot.x == x


def test_collision_guard_runs_before_skill():
    world = spawn(0)
    c = TacticalController()
    c.decode_command(make_command("WAYPOINT", {"x": 1.5, "y": 3.0}), 0, world, 1)
    world.collision = True
    c.encode(world, 0)
    act, _ = c.tick(world, 0)
    assert act.is_zero


def test_encoder_hides_labels_beyond_label_range():
    world = spawn(0)
    world.robot.x, world.robot.y = 13.0, 3.3
    frame = encode_frame(world, 0)
    by_id = {d.object_id: d for d in frame.detections}
    assert by_id["part-17"].label is None and by_id["part-17"].shape == "thermostat"
    assert "part-42" not in by_id
    world.robot.x = 16.0
    by_id = {d.object_id: d for d in encode_frame(world, 0).detections}
    assert by_id["part-17"].label == "thermostat-old"
    assert by_id["part-42"].label is None and by_id["part-42"].shape == "thermostat"


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_search_is_seed_independent(seed):
    world = spawn(seed)
    c = TacticalController()
    c.decode_command(make_command("SEARCH", {"zone": "stores-zone", "object": "thermostat"}), 0, world, 1)
    statuses = run(c, world, 200, verdict=lambda cand: cand["label"] == "thermostat-new")
    assert statuses[-1].detail == {"object": "part-42"}
