"""The mapping -> planning -> control decision loop for one episode."""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..controller import ControlTrace, execute_plan
from ..metrics import EpisodeResult, episode_metrics
from ..planner import (
    STOP,
    FFNWeights,
    GasaWeights,
    discretize_path,
    encode_nodes,
    gasa_forward,
    plan_path,
    score_nodes,
    select_goal,
    teacher_goal_r2r,
    teacher_goal_rxr,
)
from ..topomap import TopoGraph
from ..waypoint import HeatmapConfig, build_heatmap, panorama_descriptor, predict_waypoints
from ..world import AgentState, Sliding, panoramic_scan
from .config import RunConfig
from .scenario import Episode, Scenario

POLICIES = ("teacher", "teacher_r2r", "teacher_rxr", "gasa", "random", "adversarial")
SUBGOAL_SPACING = 1.0
DESCRIPTOR_DIM = 8


@dataclass
class DecisionRecord:
    step: int
    pose: tuple[float, float, float]
    waypoints: list[tuple[float, float]]
    graph: dict
    goal: object
    goal_position: tuple[float, float] | None = None
    goal_reachable: bool | None = None
    plan: list[tuple[float, float]] = field(default_factory=list)
    deleted: bool = False
    actions: tuple[int, int] = (0, 0)
    subgoal_error: float | None = None

    def as_record(self) -> dict:
        return {
            "type": "decision",
            "step": self.step,
            "pose": list(self.pose),
            "waypoints": [list(p) for p in self.waypoints],
            "graph": self.graph,
            "goal": self.goal,
            "goal_position": None if self.goal_position is None else list(self.goal_position),
            "goal_reachable": self.goal_reachable,
            "plan": [list(p) for p in self.plan],
            "deleted": self.deleted,
            "actions": list(self.actions),
            "subgoal_error": self.subgoal_error,
        }


@dataclass
class EpisodeTrace:
    episode_id: str
    policy: str
    start: tuple[float, float, float]
    goal: tuple[float, float]
    decisions: list[DecisionRecord] = field(default_factory=list)
    control: ControlTrace = field(default_factory=ControlTrace)
    stop_reason: str = ""
    node_count: int = 0

    @property
    def positions(self) -> list[tuple[float, float]]:
        return [tuple(self.start[:2])] + [(p[0], p[1]) for p in self.control.poses]

    def records(self) -> list[dict]:
        out = [{
            "type": "episode",
            "id": self.episode_id,
            "policy": self.policy,
            "start": list(self.start),
            "goal": list(self.goal),
            "stop_reason": self.stop_reason,
            "node_count": self.node_count,
        }]
        out += [d.as_record() for d in self.decisions]
        tryout_at = {e.action_index: e.offset for e in self.control.tryout_events}
        for i, (a, p, hit) in enumerate(zip(self.control.actions, self.control.poses, self.control.collisions)):
            out.append({
                "type": "action",
                "index": i,
                "kind": a.value,
                "x": p[0],
                "y": p[1],
                "heading": p[2],
                "collided": hit,
                "tryout": tryout_at.get(i),
            })
        return out


def episode_seed(seed: int, episode_id: str) -> int:
    return zlib.crc32(f"{seed}:{episode_id}".encode())


def resolve_policy(policy: str, sliding: Sliding) -> str:
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; choose from {', '.join(POLICIES)}")
    if policy == "teacher":
        return "teacher_rxr" if sliding is Sliding.FORBIDDEN else "teacher_r2r"
    return policy


class _GasaScorer:
    def __init__(self, seed: int):
        d = DESCRIPTOR_DIM + 4
        self.weights = GasaWeights.seeded(d, seed=seed)
        self.ffn = FFNWeights.seeded(d, seed=seed + 1)

    def __call__(self, graph: TopoGraph, pose):
        X, ids = encode_nodes(graph, pose)
        E = graph.spatial_matrix(with_stop=True)
        return score_nodes(graph, X, ids, gasa_forward(X, E, self.weights), self.ffn), ids


def _adversarial_scores(graph: TopoGraph, world, pose, radius: float):
    """Prefers ghosts the agent cannot reach, then the farthest ones; never
    volunteers STOP."""
    field_here = world.geodesic_field(pose[:2], radius, cache=False)
    ids = [STOP] + graph.node_order()
    scores = np.full(len(ids), -math.inf)
    for k, i in enumerate(ids[1:], start=1):
        if i in graph.ghosts:
            d = field_here.at(graph.nodes[i].position)
            scores[k] = 1e9 if not math.isfinite(d) else d
    return scores, ids


def _subgoal_error(world, here, goal_pos, radius: float) -> float:
    """Geodesic from where the controller left the agent to the chosen node,
    never below the straight line. A bounded search settles the usual short
    case; the full field is computed only when it comes back empty."""
    euclid = math.hypot(here[0] - goal_pos[0], here[1] - goal_pos[1])
    d = world.geodesic_field(here, radius, cache=False, limit=3.0 * euclid + 2.0).at(goal_pos)
    if not math.isfinite(d):
        d = world.geodesic_field(here, radius, cache=False).at(goal_pos)
    return max(d, euclid)


def run_episode(scenario: Scenario, episode: Episode, policy: str = "teacher", config: RunConfig = RunConfig()):
    """Run one episode; returns ``(EpisodeResult, EpisodeTrace)``."""
    regime = scenario.regime
    world = scenario.world
    sliding = Sliding(config.sliding) if config.sliding else regime.sliding
    radius = config.chassis_radius if config.chassis_radius is not None else regime.chassis_radius
    max_preds = config.max_goal_predictions or regime.max_goal_predictions
    policy = resolve_policy(policy, sliding)
    scenario.validate(radius)

    rng = np.random.default_rng(episode_seed(config.seed, episode.id))
    hm_config = HeatmapConfig(chassis_radius=radius)
    state = AgentState(episode.start[0], episode.start[1], episode.start[2] % 360.0, radius)
    graph = TopoGraph(accumulate=config.accumulate)
    trace = EpisodeTrace(episode.id, policy, tuple(episode.start), tuple(episode.goal))
    subgoals = discretize_path(episode.reference, SUBGOAL_SPACING)[1:] or [tuple(episode.goal)]
    visited = [False] * len(subgoals)
    gasa = _GasaScorer(config.seed) if policy == "gasa" else None
    subgoal_errors = []

    trace.stop_reason = "max_goal_predictions"
    for t in range(1, max_preds + 1):
        if trace.control.action_count >= config.action_budget:
            trace.stop_reason = "action_budget"
            break
        pose = (state.x, state.y, state.heading)
        scan = panoramic_scan(world, state, config.n_rays, config.max_range)
        heatmap = build_heatmap(scan, hm_config)
        wps = predict_waypoints(heatmap, config.K, (config.nms_deg, config.nms_m), t)
        world_wps = [(wp.to_world(pose), wp.descriptor) for wp in wps]
        graph.update(pose, world_wps, t, config.gamma, panorama_descriptor(heatmap))
        record = DecisionRecord(t, pose, [p for p, _ in world_wps], graph.snapshot(), None)
        trace.decisions.append(record)

        if policy == "teacher_r2r":
            goal = teacher_goal_r2r(graph, world, episode.goal, radius, agent_pos=pose[:2])
        elif policy == "teacher_rxr":
            goal, visited = teacher_goal_rxr(graph, world, subgoals, visited, radius, agent_pos=pose[:2])
        elif policy == "gasa":
            scores, ids = gasa(graph, pose)
            goal = select_goal(scores, ids, "argmax")
        elif policy == "adversarial":
            scores, ids = _adversarial_scores(graph, world, pose, radius)
            goal = select_goal(scores, ids, "argmax")
        else:
            ids = [STOP] + graph.ghosts
            goal = ids[int(rng.integers(len(ids)))]
        record.goal = goal
        if goal == STOP:
            trace.stop_reason = "stop"
            break

        goal_pos = graph.nodes[goal].position
        record.goal_position = goal_pos
        if policy == "adversarial":
            record.goal_reachable = bool(scores[ids.index(goal)] < 1e9)
        plan = plan_path(graph, graph.current_id, goal)
        record.plan = plan
        if config.delete_ghosts:
            graph.delete_ghost(goal)
            record.deleted = True
        first = trace.control.action_count
        budget = min(config.max_actions_per_plan, config.action_budget - first)
        state, ctrl = execute_plan(world, state, plan, sliding, config.tryout, budget)
        trace.control.extend(ctrl)
        record.actions = (first, trace.control.action_count)
        record.subgoal_error = _subgoal_error(world, (state.x, state.y), goal_pos, radius)
        subgoal_errors.append(record.subgoal_error)

    trace.node_count = len(graph)
    result = episode_metrics(
        trace.positions,
        world,
        episode.goal,
        discretize_path(episode.reference, 0.25),
        radius,
        actions=trace.control.actions,
        collisions=trace.control.collisions,
        subgoal_errors=subgoal_errors,
        geodesic=config.geodesic_ne,
    )
    return result, trace
