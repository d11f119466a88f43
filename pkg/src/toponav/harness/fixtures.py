"""Builders for the bundled fixture suites.

Each suite is one scenario whose world is a block of sealed compartments,
one episode per compartment, so episodes cannot interfere. The generated
files live in ``toponav/data``; ``python -m toponav.harness.fixtures``
rewrites them.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..world import Sliding
from .canvas import Canvas
from .scenario import Episode, ReferenceWaypoints, Regime, Scenario, load_scenario, save_scenario

CELL_W = 12.0
CELL_H = 4.6
COLUMNS = 2
SUITES = ("allowed", "forbidden", "deadlock")


@dataclass
class Room:
    """Drawing context for one compartment in local coordinates."""

    canvas: Canvas
    ox: float
    oy: float
    waypoint_sets: list = field(default_factory=list)

    def at(self, x, y):
        return (round(self.ox + x, 4), round(self.oy + y, 4))

    def pose(self, x, y, heading=0.0):
        return self.at(x, y) + (float(heading),)

    def clear(self, x0, y0, x1, y1):
        self.canvas.clear(*self.at(x0, y0), *self.at(x1, y1))

    def box(self, x0, y0, x1, y1):
        self.canvas.box(*self.at(x0, y0), *self.at(x1, y1))

    def wall(self, a, b, thickness=0.1):
        self.canvas.wall(self.at(*a), self.at(*b), thickness)

    def carve(self, a, b, width):
        self.canvas.carve(self.at(*a), self.at(*b), width)

    def open(self):
        self.clear(0.0, 0.0, CELL_W, CELL_H)


def _layout(n: int) -> tuple[Canvas, list[Room]]:
    rows = math.ceil(n / COLUMNS)
    wall = 0.1
    canvas = Canvas(COLUMNS * (CELL_W + wall) + wall, rows * (CELL_H + wall) + wall).fill()
    rooms = []
    for k in range(n):
        col, row = k % COLUMNS, k // COLUMNS
        rooms.append(Room(canvas, wall + col * (CELL_W + wall), wall + row * (CELL_H + wall)))
    return canvas, rooms


def _oblique(room: Room, angle: float, width: float, length: float = 4.0):
    """Start room, a slanted corridor through a solid block, goal room."""
    r = math.radians(angle)
    rise = length * math.sin(r)
    y0 = (CELL_H - rise) / 2.0
    a = (2.9, y0)
    b = (a[0] + length * math.cos(r), y0 + rise)
    room.clear(0.0, 0.0, 3.0, CELL_H)
    room.carve(a, b, width)
    room.clear(b[0] - 0.1, 0.0, CELL_W, CELL_H)
    start = room.pose(1.5, y0)
    goal = room.at(b[0] + 3.2, b[1])
    reference = (start[:2], room.at(*a), room.at(*b), goal)
    return start, goal, reference


def _door_wall(room: Room, x: float, door_y: float, door: float = 1.0, slit_y: float | None = None,
               slit: float = 0.15):
    room.wall((x, 0.0), (x, CELL_H), 0.2)
    room.clear(x - 0.15, door_y - door / 2, x + 0.15, door_y + door / 2)
    if slit_y is not None:
        room.clear(x - 0.15, slit_y - slit / 2, x + 0.15, slit_y + slit / 2)


def _closet(room: Room, x0: float, y0: float, x1: float, y1: float, slit_y: float, slit: float = 0.15):
    """Sealed box with a slit in its left side: visible through, never enterable."""
    t = 0.2
    room.box(x0, y0, x1, y1)
    room.clear(x0 + t, y0 + t, x1 - t, y1 - t)
    room.clear(x0 - 0.01, slit_y - slit / 2, x0 + t + 0.01, slit_y + slit / 2)


def _allowed_episode(room: Room, k: int):
    room.open()
    mid = CELL_H / 2
    start = room.pose(1.5, mid)
    goal = room.at(10.0, mid)
    via = []
    if k == 0:
        # open room; also carries a reference waypoint set
        room.waypoint_sets.append(ReferenceWaypoints(
            room.pose(6.0, mid), (room.at(8.5, mid), room.at(6.0, mid + 2.0), room.at(6.0, mid - 2.0),
                                  room.at(3.5, mid))))
    elif k == 1:
        _door_wall(room, 6.0, 3.6)
        via = [(6.0, 3.6)]
    elif k == 2:
        _door_wall(room, 6.0, 1.0)
        via = [(6.0, 1.0)]
    elif k == 3:
        # sealed chamber straddling the straight route, slit window facing the start
        _closet(room, 3.2, 1.5, 8.0, 3.1, slit_y=mid)
        via = [(4.0, 3.8)]
        room.waypoint_sets.append(ReferenceWaypoints(
            room.pose(1.5, mid), (room.at(2.6, 3.8), room.at(2.6, 0.8), room.at(0.6, mid))))
    elif k == 4:
        _door_wall(room, 4.0, 3.7)
        _door_wall(room, 8.0, 0.9)
        via = [(4.0, 3.7), (8.0, 0.9)]
    elif k == 5:
        for cx, cy in ((4.0, 1.5), (5.5, 3.2), (7.0, 1.4), (8.5, 3.0)):
            room.box(cx - 0.3, cy - 0.3, cx + 0.3, cy + 0.3)
        via = [(4.0, 2.5), (7.0, 2.3)]
    elif k == 6:
        _closet(room, 2.8, 2.0, 7.0, 4.6, slit_y=mid + 0.1)
        _door_wall(room, 8.0, 0.9)
        via = [(2.5, 1.0), (8.0, 0.9)]
    elif k == 7:
        room.box(4.5, 1.2, 7.5, 4.6)
        via = [(4.5, 0.6), (7.5, 0.6)]
    elif k == 8:
        room.wall((5.0, 0.0), (7.0, 3.5), 0.2)
        via = [(7.4, 4.0)]
    else:
        start = room.pose(10.0, mid, 180.0)
        goal = room.at(2.0, 1.0)
        _door_wall(room, 6.0, 2.3, door=1.2)
        via = [(6.0, 2.3)]
    reference = (start[:2], *[room.at(*p) for p in via], goal)
    return start, goal, reference


DEADLOCK_ANGLES = (11, 12, 19, -11, -19, 41, 26, -26, 34, -41)
DEADLOCK_WIDTH = 0.6
FORBIDDEN_SPECS = ((13, 0.5), (-13, 0.55), (27, 0.55), (-27, 0.6), (42, 0.55),
                   (11, 0.7), (-41, 0.65), (19, 0.55), (-19, 0.8), (33, 0.6))


def build_suite(kind: str) -> Scenario:
    if kind not in SUITES:
        raise ValueError(f"unknown suite {kind!r}")
    canvas, rooms = _layout(10)
    episodes = []
    for k, room in enumerate(rooms):
        if kind == "allowed":
            start, goal, reference = _allowed_episode(room, k)
        elif kind == "deadlock":
            start, goal, reference = _oblique(room, DEADLOCK_ANGLES[k], DEADLOCK_WIDTH)
        else:
            start, goal, reference = _oblique(room, *FORBIDDEN_SPECS[k])
        episodes.append(Episode(f"{kind[0]}{k:02d}", start, goal, tuple(reference), tuple(room.waypoint_sets)))
    if kind == "allowed":
        regime = Regime(Sliding.ALLOWED, 0.10, 15)
    else:
        regime = Regime(Sliding.FORBIDDEN, 0.18, 25)
    scenario = Scenario(kind, canvas.grid(), regime, episodes)
    scenario.validate()
    return scenario


def suite_path(kind: str) -> Path:
    return Path(str(resources.files("toponav") / "data" / f"{kind}.scn"))


def load_suite(kind: str) -> Scenario:
    return load_scenario(suite_path(kind))


def load_full_suite() -> list[Scenario]:
    return [load_suite(k) for k in SUITES]


def main(argv=None) -> int:
    out = Path(argv[0]) if argv else suite_path("allowed").parent
    out.mkdir(parents=True, exist_ok=True)
    for kind in SUITES:
        save_scenario(build_suite(kind), out / f"{kind}.scn")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
