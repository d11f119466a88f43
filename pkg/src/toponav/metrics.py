"""Episode metrics: TL, NE, SR, OSR, SPL, NDTW, SDTW and the controller
diagnostics AT, RT, CT, SG-NE."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .world import OccupancyGrid, geodesic_distance

SUCCESS_RADIUS = 3.0


@dataclass(frozen=True)
class EpisodeResult:
    TL: float
    NE: float
    SR: float
    OSR: float
    SPL: float
    NDTW: float
    SDTW: float
    AT: int
    RT: int
    CT: int
    SG_NE: float

    def as_dict(self) -> dict:
        return asdict(self)


METRIC_NAMES = tuple(f.name for f in fields(EpisodeResult))


def dtw(P, R) -> float:
    """Dynamic time warping with Euclidean point cost; both endpoints matched,
    steps match / insert / delete."""
    P = np.asarray(P, dtype=float).reshape(-1, 2)
    R = np.asarray(R, dtype=float).reshape(-1, 2)
    if len(P) == 0 or len(R) == 0:
        raise ValueError("dtw needs non-empty paths")
    dx = P[:, None, 0] - R[None, :, 0]
    dy = P[:, None, 1] - R[None, :, 1]
    cost = np.sqrt(dx * dx + dy * dy)
    n, m = cost.shape
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            acc[i, j] = cost[i - 1, j - 1] + min(acc[i - 1, j], acc[i, j - 1], acc[i - 1, j - 1])
    return float(acc[n, m])


def ndtw(P, R, d_th: float = SUCCESS_RADIUS) -> float:
    return math.exp(-dtw(P, R) / (len(R) * d_th))


def path_length(points) -> float:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def dedupe(points) -> list[tuple[float, float]]:
    out = []
    for p in points:
        p = (float(p[0]), float(p[1]))
        if not out or out[-1] != p:
            out.append(p)
    return out


def episode_metrics(
    positions,
    world: OccupancyGrid,
    goal,
    reference_path,
    chassis_radius: float,
    actions=(),
    collisions=(),
    subgoal_errors=(),
    success_radius: float = SUCCESS_RADIUS,
    geodesic: bool = True,
) -> EpisodeResult:
    """Score one episode.

    ``positions`` is the agent track starting at the start position. With
    ``geodesic=False`` NE/OSR use straight-line distance instead.
    """
    track = dedupe(positions)
    if not track:
        raise ValueError("empty trace")
    start = track[0]
    for p, what in ((start, "start"), (goal, "goal")):
        if world.disc_collides(p, chassis_radius):
            raise ValueError(f"{what} occluded")
    if geodesic:
        field = world.geodesic_field(goal, chassis_radius)

        def to_goal(p):
            return max(field.at(p), math.hypot(p[0] - goal[0], p[1] - goal[1]))
    else:
        def to_goal(p):
            return math.hypot(p[0] - goal[0], p[1] - goal[1])

    tl = path_length(track)
    ne = to_goal(track[-1])
    sr = float(ne < success_radius)
    osr = float(min(to_goal(p) for p in track) < success_radius)
    shortest = geodesic_distance(world, start, goal, chassis_radius) if geodesic else to_goal(start)
    spl = sr * shortest / max(tl, shortest) if max(tl, shortest) > 0 else sr
    fidelity = ndtw(track, reference_path, success_radius)
    return EpisodeResult(
        TL=tl,
        NE=ne,
        SR=sr,
        OSR=osr,
        SPL=spl,
        NDTW=fidelity,
        SDTW=sr * fidelity,
        AT=len(actions),
        RT=sum(1 for a in actions if getattr(a, "is_rotation", False)),
        CT=int(sum(collisions)),
        SG_NE=float(np.mean(subgoal_errors)) if len(subgoal_errors) else 0.0,
    )


def summarize(results) -> dict:
    """Per-metric means over a collection of EpisodeResult."""
    results = list(results)
    if not results:
        return {name: math.nan for name in METRIC_NAMES} | {"episodes": 0}
    out = {name: float(np.mean([getattr(r, name) for r in results])) for name in METRIC_NAMES}
    out["episodes"] = len(results)
    return out
