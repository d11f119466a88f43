"""Rotate-then-forward plan execution with the Tryout deadlock escape."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .world import FORWARD_STEP, ROTATE_STEP, Action, AgentState, OccupancyGrid, Sliding, step

# 0 deg is skipped: it is the heading that just failed
TRYOUT_OFFSETS = (30.0, -30.0, 60.0, -60.0, 90.0, -90.0)


@dataclass
class TryoutEvent:
    action_index: int
    offset: float
    escaped: bool


@dataclass
class ControlTrace:
    actions: list[Action] = field(default_factory=list)
    poses: list[tuple[float, float, float]] = field(default_factory=list)
    collisions: list[bool] = field(default_factory=list)
    tryout_events: list[TryoutEvent] = field(default_factory=list)

    def record(self, action: Action, state: AgentState, collided: bool) -> None:
        self.actions.append(action)
        self.poses.append((state.x, state.y, state.heading))
        self.collisions.append(collided)

    def extend(self, other: ControlTrace) -> None:
        offset = len(self.actions)
        self.actions += other.actions
        self.poses += other.poses
        self.collisions += other.collisions
        self.tryout_events += [
            TryoutEvent(e.action_index + offset, e.offset, e.escaped) for e in other.tryout_events
        ]

    @property
    def action_count(self) -> int:
        return len(self.actions)

    @property
    def rotation_count(self) -> int:
        return sum(a.is_rotation for a in self.actions)

    @property
    def collision_count(self) -> int:
        return sum(self.collisions)


def _round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def wrap_angle(deg: float) -> float:
    """Wrap into (-180, 180]."""
    w = math.fmod(deg, 360.0)
    if w <= -180.0:
        w += 360.0
    elif w > 180.0:
        w -= 360.0
    return w


def rf_translate(dtheta: float, drho: float) -> list[Action]:
    if drho < 0:
        raise ValueError("drho must be non-negative")
    n_rot = _round_half_away(abs(dtheta) / ROTATE_STEP)
    turn = Action.ROTATE_LEFT if dtheta > 0 else Action.ROTATE_RIGHT
    n_fwd = _round_half_away(drho / FORWARD_STEP)
    return [turn] * n_rot + [Action.FORWARD] * n_fwd


def _rotations(delta: float) -> list[Action]:
    n = _round_half_away(delta / ROTATE_STEP)
    return [Action.ROTATE_LEFT] * n if n > 0 else [Action.ROTATE_RIGHT] * (-n)


def relative_goal(state: AgentState, goal) -> tuple[float, float]:
    dx = goal[0] - state.x
    dy = goal[1] - state.y
    drho = math.hypot(dx, dy)
    if drho == 0.0:
        return 0.0, 0.0
    return wrap_angle(math.degrees(math.atan2(dy, dx)) - state.heading), drho


def tryout(world: OccupancyGrid, state: AgentState, trace: ControlTrace | None = None,
           max_actions: int | None = None):
    """Trial-and-error escape after a FORWARD left the position unchanged.

    Tries each offset heading with one FORWARD. On the first move it turns
    back to the original heading and reports ``escaped=True``; otherwise the
    original heading is restored and ``escaped=False``.
    Returns ``(state, escaped, trace)``.
    """
    trace = trace if trace is not None else ControlTrace()
    origin = (state.x, state.y)
    offset_now = 0.0

    def act(s, a):
        s2, hit = step(world, s, a, Sliding.FORBIDDEN)
        trace.record(a, s2, hit)
        return s2

    def budget_left():
        return max_actions is None or trace.action_count < max_actions

    for offset in TRYOUT_OFFSETS:
        if not budget_left():
            break
        for a in _rotations(offset - offset_now):
            state = act(state, a)
        offset_now = offset
        first = trace.action_count
        state = act(state, Action.FORWARD)
        moved = (state.x, state.y) != origin
        trace.tryout_events.append(TryoutEvent(first, offset, moved))
        if moved:
            for a in _rotations(-offset_now):
                state = act(state, a)
            return state, True, trace
    for a in _rotations(-offset_now):
        state = act(state, a)
    return state, False, trace


def execute_plan(
    world: OccupancyGrid,
    state: AgentState,
    plan,
    sliding: Sliding = Sliding.FORBIDDEN,
    tryout_enabled: bool = True,
    max_actions: int = 500,
):
    """Drive through the plan subgoal by subgoal. Returns ``(state, trace)``.

    The relative goal is computed once per subgoal. A FORWARD that leaves
    the position unchanged in forbidden mode triggers Tryout (if enabled);
    a failed Tryout abandons the subgoal.
    """
    if not plan:
        raise ValueError("plan is empty")
    sliding = Sliding(sliding)
    trace = ControlTrace()

    for goal in plan:
        dtheta, drho = relative_goal(state, goal)
        actions = rf_translate(dtheta, drho)
        for a in actions:
            if trace.action_count >= max_actions:
                return state, trace
            before = (state.x, state.y)
            state, hit = step(world, state, a, sliding)
            trace.record(a, state, hit)
            if a is not Action.FORWARD or (state.x, state.y) != before:
                continue
            if tryout_enabled and sliding is Sliding.FORBIDDEN:
                state, escaped, _ = tryout(world, state, trace, max_actions)
                if not escaped:
                    break
        if trace.action_count >= max_actions:
            break
    return state, trace
