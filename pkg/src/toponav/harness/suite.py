"""Suite execution, results files and parameter sweeps.

Results files are line-oriented: one ``result:`` record per episode in
scenario order followed by one ``summary:`` record, all ``key=value``
fields. Floats are written with ``repr`` so reruns compare byte for byte.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..metrics import METRIC_NAMES, EpisodeResult, summarize
from ..waypoint import HeatmapConfig, WaypointEval, build_heatmap, evaluate_waypoints, predict_waypoints
from ..world import AgentState, panoramic_scan
from .config import RunConfig
from .episode import EpisodeTrace, run_episode
from .scenario import Scenario


@dataclass
class EpisodeOutcome:
    episode_id: str
    result: EpisodeResult | None = None
    trace: EpisodeTrace | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SuiteRun:
    scenario: str
    policy: str
    config: RunConfig
    outcomes: list[EpisodeOutcome] = field(default_factory=list)

    @property
    def results(self) -> list[EpisodeResult]:
        return [o.result for o in self.outcomes if o.ok]

    @property
    def errors(self) -> list[EpisodeOutcome]:
        return [o for o in self.outcomes if not o.ok]

    def summary(self) -> dict:
        out = summarize(self.results)
        nodes = [o.trace.node_count for o in self.outcomes if o.ok]
        out["node_count"] = float(np.mean(nodes)) if nodes else math.nan
        out["errors"] = len(self.errors)
        return out

    def lines(self) -> list[str]:
        out = []
        for o in self.outcomes:
            head = f"result: scenario={self.scenario} episode={o.episode_id}"
            if o.ok:
                metrics = " ".join(f"{k}={_fmt(getattr(o.result, k))}" for k in METRIC_NAMES)
                out.append(
                    f"{head} status=ok {metrics} node_count={o.trace.node_count} "
                    f"decisions={len(o.trace.decisions)} stop={o.trace.stop_reason}")
            else:
                out.append(f"{head} status=error error={json.dumps(o.error)}")
        s = self.summary()
        fields_ = " ".join(f"{k}={_fmt(s[k])}" for k in (*METRIC_NAMES, "node_count"))
        out.append(
            f"summary: scenario={self.scenario} policy={self.policy} episodes={len(self.outcomes)} "
            f"errors={s['errors']} {fields_}")
        return out


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _run_one(scenario: Scenario, episode, policy: str, config: RunConfig) -> EpisodeOutcome:
    try:
        result, trace = run_episode(scenario, episode, policy, config)
    except Exception as exc:  # recorded per episode; the suite carries on
        return EpisodeOutcome(episode.id, error=f"{type(exc).__name__}: {exc}")
    return EpisodeOutcome(episode.id, result, trace)


def run_suite(scenario: Scenario, policy: str = "teacher", config: RunConfig = RunConfig(),
              parallelism: int = 1) -> SuiteRun:
    """Run every episode; outcomes come back in scenario order whatever the
    scheduling. Episode failures are captured, not raised."""
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    scenario.validate(config.chassis_radius)
    run = SuiteRun(scenario.name, policy, config)
    if parallelism == 1:
        run.outcomes = [_run_one(scenario, ep, policy, config) for ep in scenario.episodes]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(_run_one, scenario, ep, policy, config) for ep in scenario.episodes]
            run.outcomes = [f.result() for f in futures]
    return run


def write_results(runs, path) -> None:
    lines = [ln for run in runs for ln in run.lines()]
    Path(path).write_text("\n".join(lines) + "\n")


def write_traces(run: SuiteRun, directory, scenario_path: str | None = None) -> list[Path]:
    """One JSON-lines file per episode."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for o in run.outcomes:
        if not o.ok:
            continue
        records = o.trace.records()
        records[0]["scenario"] = scenario_path
        path = directory / f"{run.scenario}-{o.episode_id}.jsonl"
        path.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
        written.append(path)
    return written


def gamma_sweep(scenarios, values, policy: str = "teacher", config: RunConfig = RunConfig(),
                parallelism: int = 1) -> list[tuple[float, dict]]:
    """Per gamma: pooled summary over all scenarios (episode-weighted)."""
    out = []
    for g in values:
        cfg = config.replace(gamma=float(g))
        runs = [run_suite(sc, policy, cfg, parallelism) for sc in scenarios]
        pooled = SuiteRun("+".join(r.scenario for r in runs), policy, cfg,
                          [o for r in runs for o in r.outcomes])
        out.append((float(g), pooled.summary()))
    return out


def evaluate_reference_waypoints(scenario: Scenario, config: RunConfig = RunConfig()):
    """Predict at every reference pose and score against the stored set.
    Returns ``[(episode_id, pose, WaypointEval)]``."""
    radius = config.chassis_radius if config.chassis_radius is not None else scenario.regime.chassis_radius
    hm_config = HeatmapConfig(chassis_radius=radius)
    out: list[tuple[str, tuple, WaypointEval]] = []
    for ep in scenario.episodes:
        for ws in ep.waypoint_sets:
            state = AgentState(ws.pose[0], ws.pose[1], ws.pose[2] % 360.0, radius)
            heatmap = build_heatmap(panoramic_scan(scenario.world, state, config.n_rays, config.max_range), hm_config)
            wps = predict_waypoints(heatmap, config.K, (config.nms_deg, config.nms_m))
            predicted = [wp.to_world(ws.pose) for wp in wps]
            out.append((ep.id, ws.pose, evaluate_waypoints(predicted, ws.points, scenario.world, ws.pose, radius)))
    return out
