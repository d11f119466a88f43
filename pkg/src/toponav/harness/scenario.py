"""Scenario files: a line-oriented ``key: value`` format with the grid as a
raw ASCII block ('#' obstacle, '.' free, first row = top).

    format: toponav-scenario 1
    name: two-rooms
    resolution: 0.05
    origin: 0.0 0.0
    sliding: forbidden
    chassis_radius: 0.18
    max_goal_predictions: 25
    grid: 120 160
    <120 rows of 160 characters>
    episode: id=e0 start=1.0,1.0,0 goal=6.5,4.0 reference=1.0,1.0;6.5,4.0
    waypoints: episode=e0 pose=1.0,1.0,0 points=2.0,1.0;1.0,2.5
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..world import OccupancyGrid, Sliding, WorldError, world_from_ascii, world_to_ascii

FORMAT_TAG = "toponav-scenario 1"
HEADER_KEYS = ("name", "resolution", "origin", "sliding", "chassis_radius", "max_goal_predictions")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Regime:
    sliding: Sliding = Sliding.ALLOWED
    chassis_radius: float = 0.10
    max_goal_predictions: int = 15


@dataclass(frozen=True)
class ReferenceWaypoints:
    pose: tuple[float, float, float]
    points: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class Episode:
    id: str
    start: tuple[float, float, float]
    goal: tuple[float, float]
    reference: tuple[tuple[float, float], ...]
    waypoint_sets: tuple[ReferenceWaypoints, ...] = ()


@dataclass
class Scenario:
    name: str
    world: OccupancyGrid
    regime: Regime
    episodes: list[Episode] = field(default_factory=list)

    def validate(self, chassis_radius: float | None = None) -> None:
        r = self.regime.chassis_radius if chassis_radius is None else chassis_radius
        seen = set()
        for ep in self.episodes:
            if ep.id in seen:
                raise ScenarioError(f"duplicate episode id {ep.id!r}")
            seen.add(ep.id)
            if self.world.disc_collides(ep.start[:2], r):
                raise ScenarioError(f"episode {ep.id}: start occluded")
            if self.world.disc_collides(ep.goal, r):
                raise ScenarioError(f"episode {ep.id}: goal occluded")
            if not ep.reference:
                raise ScenarioError(f"episode {ep.id}: empty reference path")
            if tuple(ep.reference[0]) != tuple(ep.start[:2]):
                raise ScenarioError(f"episode {ep.id}: reference path must begin at start")


def _floats(text: str, n: int | None, where: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise ScenarioError(f"{where}: expected numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise ScenarioError(f"{where}: expected {n} numbers, got {len(vals)}")
    return vals


def _points(text: str, where: str) -> tuple[tuple[float, float], ...]:
    return tuple(_floats(chunk, 2, where) for chunk in text.split(";") if chunk.strip())


def _fields(body: str, allowed: set[str], where: str) -> dict[str, str]:
    out = {}
    for token in body.split():
        if "=" not in token:
            raise ScenarioError(f"{where}: expected key=value, got {token!r}")
        key, value = token.split("=", 1)
        if key not in allowed:
            raise ScenarioError(f"{where}: unknown field {key!r}")
        out[key] = value
    return out


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    lines = text.splitlines()
    header: dict[str, str] = {}
    rows: list[str] | None = None
    episodes: dict[str, dict] = {}
    order: list[str] = []
    i = 0
    if not lines or lines[0].strip() != f"format: {FORMAT_TAG}":
        raise ScenarioError(f"{source}:1: missing 'format: {FORMAT_TAG}' line")
    i = 1
    while i < len(lines):
        raw = lines[i]
        where = f"{source}:{i + 1}"
        i += 1
        if not raw.strip():
            continue
        if ":" not in raw:
            raise ScenarioError(f"{where}: expected 'key: value'")
        key, value = raw.split(":", 1)
        key, value = key.strip(), value.strip()
        if key in HEADER_KEYS:
            header[key] = value
        elif key == "grid":
            n_rows, n_cols = (int(v) for v in _floats(value, 2, where))
            rows = lines[i:i + n_rows]
            if len(rows) != n_rows:
                raise ScenarioError(f"{where}: grid declares {n_rows} rows, file has {len(rows)}")
            for k, row in enumerate(rows):
                if len(row) != n_cols:
                    raise ScenarioError(
                        f"{source}:{i + k + 1}: grid row {k} has {len(row)} columns, expected {n_cols}")
                if set(row) - {"#", "."}:
                    raise ScenarioError(f"{source}:{i + k + 1}: grid row {k} has characters other than '#' and '.'")
            i += n_rows
        elif key == "episode":
            f = _fields(value, {"id", "start", "goal", "reference"}, where)
            missing = {"id", "start", "goal", "reference"} - f.keys()
            if missing:
                raise ScenarioError(f"{where}: episode missing {sorted(missing)}")
            if f["id"] in episodes:
                raise ScenarioError(f"{where}: duplicate episode id {f['id']!r}")
            episodes[f["id"]] = {
                "start": _floats(f["start"], 3, where),
                "goal": _floats(f["goal"], 2, where),
                "reference": _points(f["reference"], where),
                "waypoints": [],
            }
            order.append(f["id"])
        elif key == "waypoints":
            f = _fields(value, {"episode", "pose", "points"}, where)
            if f.get("episode") not in episodes:
                raise ScenarioError(f"{where}: waypoints refer to unknown episode {f.get('episode')!r}")
            episodes[f["episode"]]["waypoints"].append(
                ReferenceWaypoints(_floats(f.get("pose", ""), 3, where), _points(f.get("points", ""), where)))
        else:
            raise ScenarioError(f"{where}: unknown field {key!r}")
    missing = set(HEADER_KEYS) - header.keys()
    if missing:
        raise ScenarioError(f"{source}: missing header fields {sorted(missing)}")
    if rows is None:
        raise ScenarioError(f"{source}: missing grid block")
    try:
        sliding = Sliding(header["sliding"])
    except ValueError:
        raise ScenarioError(f"{source}: sliding must be 'allowed' or 'forbidden'") from None
    try:
        world = world_from_ascii(rows, float(header["resolution"]), _floats(header["origin"], 2, "origin"))
    except WorldError as exc:
        raise ScenarioError(f"{source}: {exc}") from None
    regime = Regime(sliding, float(header["chassis_radius"]), int(header["max_goal_predictions"]))
    scenario = Scenario(
        header["name"],
        world,
        regime,
        [
            Episode(eid, e["start"], e["goal"], e["reference"], tuple(e["waypoints"]))
            for eid, e in ((eid, episodes[eid]) for eid in order)
        ],
    )
    scenario.validate()
    return scenario


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), str(path))


def _fmt(vals) -> str:
    return ",".join(repr(float(v)) for v in vals)


def dump_scenario(scenario: Scenario) -> str:
    w = scenario.world
    rows = world_to_ascii(w)
    lines = [
        f"format: {FORMAT_TAG}",
        f"name: {scenario.name}",
        f"resolution: {w.resolution!r}",
        f"origin: {w.origin[0]!r} {w.origin[1]!r}",
        f"sliding: {scenario.regime.sliding.value}",
        f"chassis_radius: {scenario.regime.chassis_radius!r}",
        f"max_goal_predictions: {scenario.regime.max_goal_predictions}",
        f"grid: {len(rows)} {len(rows[0])}",
        *rows,
    ]
    for ep in scenario.episodes:
        lines.append(
            f"episode: id={ep.id} start={_fmt(ep.start)} goal={_fmt(ep.goal)} "
            f"reference={';'.join(_fmt(p) for p in ep.reference)}")
        for ws in ep.waypoint_sets:
            lines.append(
                f"waypoints: episode={ep.id} pose={_fmt(ws.pose)} "
                f"points={';'.join(_fmt(p) for p in ws.points)}")
    return "\n".join(lines) + "\n"


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(dump_scenario(scenario))
