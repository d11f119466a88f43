import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toponav.controller import (
    TRYOUT_OFFSETS,
    ControlTrace,
    execute_plan,
    relative_goal,
    rf_translate,
    tryout,
    wrap_angle,
)
from toponav.harness.canvas import Canvas
from toponav.world import FORWARD_STEP, ROTATE_STEP, Action, AgentState, Sliding, step

L, R, F = Action.ROTATE_LEFT, Action.ROTATE_RIGHT, Action.FORWARD


def test_rf_translate_examples():
    assert rf_translate(45.0, 1.0) == [L] * 3 + [F] * 4
    assert rf_translate(-40.0, 0.30) == [R] * 3 + [F]
    assert rf_translate(0.0, 0.0) == []
    assert rf_translate(7.5, 0.125) == [L, F]  # halves round away from zero
    with pytest.raises(ValueError):
        rf_translate(0.0, -1.0)


def test_wrap_angle():
    assert wrap_angle(180.0) == 180.0
    assert wrap_angle(-180.0) == 180.0
    assert wrap_angle(270.0) == -90.0
    assert wrap_angle(-725.0) == -5.0


@given(dtheta=st.floats(-180, 180), drho=st.floats(0, 10))
def test_rf_translate_quantization_bound(dtheta, drho):
    acts = rf_translate(dtheta, drho)
    turns = sum(1 for a in acts if a is not F)
    sign = 1 if all(a is L for a in acts if a is not F) else -1
    fwd = acts.count(F)
    assert abs(sign * turns * ROTATE_STEP - dtheta) <= ROTATE_STEP / 2 + 1e-9 or turns == 0 and abs(dtheta) <= ROTATE_STEP / 2
    assert abs(fwd * FORWARD_STEP - drho) <= FORWARD_STEP / 2 + 1e-9
    assert acts == sorted(acts, key=lambda a: a is F)  # rotations first


@pytest.fixture(scope="module")
def hall():
    return Canvas(10.0, 6.0).grid()


def test_one_metre_corridor(hall):
    s0 = AgentState(2.0, 3.0, 0.0, 0.1)
    s, trace = execute_plan(hall, s0, [(3.0, 3.0)])
    assert trace.actions == [F] * 4
    assert math.dist((s.x, s.y), (3.0, 3.0)) <= FORWARD_STEP / 2


def test_subgoal_behind_turns_twelve_times(hall):
    s, trace = execute_plan(hall, AgentState(5.0, 3.0, 0.0, 0.1), [(4.0, 3.0)])
    assert trace.rotation_count == 12
    assert trace.actions[:12] in ([L] * 12, [R] * 12)
    assert math.dist((s.x, s.y), (4.0, 3.0)) <= FORWARD_STEP / 2


@given(seed=st.integers(0, 10_000))
def test_execute_plan_accounting_and_quantization(seed):
    rng = np.random.default_rng(seed)
    world = Canvas(10.0, 10.0).grid()
    s = AgentState(5.0, 5.0, float(rng.integers(0, 24)) * 15.0, 0.1)
    goals = [tuple(rng.uniform(3.5, 6.5, 2)) for _ in range(int(rng.integers(1, 4)))]
    end, trace = execute_plan(world, s, goals)
    assert trace.action_count == len(trace.poses) == len(trace.collisions)
    assert trace.rotation_count == sum(a.is_rotation for a in trace.actions)
    assert trace.collision_count == 0
    # open space: per-leg error from quantising heading and distance
    # accumulates, but stays below half a step plus the angular chord
    err = math.dist((end.x, end.y), goals[-1])
    prev = (s.x, s.y) if len(goals) == 1 else None
    if prev is not None:
        d = math.dist(prev, goals[-1])
        bound = FORWARD_STEP / 2 + (d + FORWARD_STEP / 2) * 2 * math.sin(math.radians(ROTATE_STEP / 4))
        assert err <= bound + 1e-9


def wall_ahead(open_side):
    """Agent facing a wall face at x=2.3."""
    c = Canvas(6.0, 6.0)
    if open_side == "edge":
        c.box(2.3, 0.0, 3.0, 3.0)   # wall ends at y=3, just left of the agent's path
    else:
        c.box(2.3, 0.0, 3.0, 6.0)
    if open_side == "none":
        c.box(0.0, 0.0, 3.0, 2.8).box(0.0, 3.2, 3.0, 6.0).box(0.0, 0.0, 1.8, 6.0)
    return c.grid()


def test_tryout_escapes_on_first_offset():
    w = wall_ahead("edge")
    s = AgentState(2.05, 3.15, 0.0, 0.18)
    blocked, hit = step(w, s, F, Sliding.FORBIDDEN)
    assert hit and blocked == s
    end, escaped, trace = tryout(w, s)
    assert escaped
    assert trace.tryout_events[0].offset == 30.0 and trace.tryout_events[0].escaped
    assert len(trace.tryout_events) == 1
    assert end.heading == s.heading and (end.x, end.y) != (s.x, s.y)


def test_tryout_fails_in_alcove_after_all_offsets():
    w = wall_ahead("none")
    s = AgentState(2.05, 3.0, 0.0, 0.18)
    end, escaped, trace = tryout(w, s)
    assert not escaped
    assert [e.offset for e in trace.tryout_events] == list(TRYOUT_OFFSETS)
    assert (end.x, end.y, end.heading) == (s.x, s.y, s.heading)
    assert trace.collision_count == len(TRYOUT_OFFSETS)


def test_without_tryout_forbidden_wall_stalls():
    w = wall_ahead("open")
    s = AgentState(2.05, 3.0, 0.0, 0.18)
    end, trace = execute_plan(w, s, [(4.0, 3.0)], Sliding.FORBIDDEN, tryout_enabled=False)
    assert (end.x, end.y) == (s.x, s.y)
    assert trace.collision_count == trace.action_count == 8
    assert not trace.tryout_events


def test_tryout_never_runs_with_sliding_allowed():
    w = wall_ahead("open")
    s = AgentState(2.05, 3.0, 0.0, 0.18)
    _, trace = execute_plan(w, s, [(4.0, 3.0)], Sliding.ALLOWED, tryout_enabled=True)
    assert not trace.tryout_events


def test_execute_plan_tryout_then_continues():
    w = wall_ahead("edge")
    s = AgentState(2.05, 3.15, 0.0, 0.18)
    end, trace = execute_plan(w, s, [(4.0, 3.15)], Sliding.FORBIDDEN)
    assert trace.tryout_events[0].escaped
    assert end.x > s.x + 3 * FORWARD_STEP


def test_trace_extend_offsets_events():
    a, b = ControlTrace(), ControlTrace()
    a.record(F, AgentState(0, 0, 0), False)
    w = wall_ahead("open")
    _, _, b = tryout(w, AgentState(2.05, 3.0, 0.0, 0.18))
    a.extend(b)
    assert a.tryout_events[0].action_index == b.tryout_events[0].action_index + 1


def test_relative_goal():
    assert relative_goal(AgentState(0, 0, 90.0), (1.0, 0.0)) == (-90.0, 1.0)
    assert relative_goal(AgentState(0, 0, 0.0), (0.0, 0.0)) == (0.0, 0.0)


def test_empty_plan_rejected(hall):
    with pytest.raises(ValueError):
        execute_plan(hall, AgentState(2.0, 3.0, 0.0), [])
