"""Continuous 2D world backed by an occupancy grid.

Cells are indexed ``cells[iy, ix]`` with ``iy = 0`` the bottom row; cell
``(ix, iy)`` covers ``[ox + ix*res, ox + (ix+1)*res) x [oy + iy*res, ...)``.
Headings are degrees, 0 = +x, counterclockwise positive.
"""

from __future__ import annotations

import enum
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

FORWARD_STEP = 0.25
ROTATE_STEP = 15.0
FIELD_CACHE_SIZE = 128


class WorldError(ValueError):
    """Raised for queries that violate a world precondition."""


class Action(enum.Enum):
    FORWARD = "FORWARD"
    ROTATE_LEFT = "ROTATE_LEFT"
    ROTATE_RIGHT = "ROTATE_RIGHT"
    STOP = "STOP"

    @property
    def is_rotation(self) -> bool:
        return self in (Action.ROTATE_LEFT, Action.ROTATE_RIGHT)


class Sliding(enum.Enum):
    ALLOWED = "allowed"
    FORBIDDEN = "forbidden"


@dataclass(frozen=True)
class AgentState:
    x: float
    y: float
    heading: float
    chassis_radius: float = 0.10

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    def moved_to(self, x: float, y: float) -> AgentState:
        return AgentState(x, y, self.heading, self.chassis_radius)

    def turned_to(self, heading: float) -> AgentState:
        return AgentState(self.x, self.y, heading % 360.0, self.chassis_radius)


@dataclass(frozen=True)
class RangeScan:
    ray_headings: np.ndarray
    distances: np.ndarray
    max_range: float
    heading: float = 0.0

    def __post_init__(self):
        if len(self.ray_headings) != len(self.distances):
            raise ValueError("ray_headings and distances differ in length")


def _disc_kernel(radius_cells: float) -> np.ndarray:
    """Offsets (di, dj) whose unit square comes strictly closer than
    ``radius_cells`` to the center of cell (0, 0)."""
    n = int(math.ceil(radius_cells + 0.5))
    d = np.arange(-n, n + 1)
    gap = np.maximum(np.abs(d) - 0.5, 0.0)
    dist = np.hypot(gap[:, None], gap[None, :])
    return dist < radius_cells


class OccupancyGrid:
    """Immutable obstacle grid plus memoized derived data.

    Derived arrays (inflated grids, geodesic graphs and fields) are cached
    behind a lock so one instance can be shared by concurrent episodes.
    """

    def __init__(self, cells, resolution: float = 0.05, origin=(0.0, 0.0)):
        cells = np.array(cells, dtype=bool)
        if cells.ndim != 2 or cells.size == 0:
            raise WorldError("occupancy grid must be a non-empty 2D matrix")
        if not resolution > 0:
            raise WorldError("resolution must be positive")
        if not (cells[0].all() and cells[-1].all() and cells[:, 0].all() and cells[:, -1].all()):
            raise WorldError("boundary cells must be obstacles (world is closed)")
        cells.setflags(write=False)
        self.cells = cells
        self.resolution = float(resolution)
        self.origin = (float(origin[0]), float(origin[1]))
        self._lock = threading.Lock()
        self._inflated: dict[float, np.ndarray] = {}
        self._graphs: dict[float, tuple] = {}
        self._fields: OrderedDict[tuple, GeodesicField] = OrderedDict()

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    @property
    def extent(self) -> tuple[float, float]:
        ny, nx = self.cells.shape
        return nx * self.resolution, ny * self.resolution

    def __eq__(self, other):
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            self.resolution == other.resolution
            and self.origin == other.origin
            and np.array_equal(self.cells, other.cells)
        )

    __hash__ = object.__hash__

    def cell_of(self, p) -> tuple[int, int]:
        ix = math.floor((p[0] - self.origin[0]) / self.resolution)
        iy = math.floor((p[1] - self.origin[1]) / self.resolution)
        return ix, iy

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return (
            self.origin[0] + (ix + 0.5) * self.resolution,
            self.origin[1] + (iy + 0.5) * self.resolution,
        )

    def is_obstacle_cell(self, ix: int, iy: int) -> bool:
        ny, nx = self.cells.shape
        if ix < 0 or iy < 0 or ix >= nx or iy >= ny:
            return True
        return bool(self.cells[iy, ix])

    def point_occupied(self, p) -> bool:
        return self.is_obstacle_cell(*self.cell_of(p))

    def disc_collides(self, p, radius: float) -> bool:
        """True if the open disc of ``radius`` at ``p`` overlaps an obstacle cell."""
        return bool(self.discs_collide(np.asarray([p], dtype=float), radius)[0])

    def discs_collide(self, points: np.ndarray, radius: float) -> np.ndarray:
        res = self.resolution
        ny, nx = self.cells.shape
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        rel = (pts - np.asarray(self.origin)) / res
        rc = radius / res
        n = int(math.ceil(rc)) + 1
        offs = np.arange(-n, n + 1)
        base_x = np.floor(rel[:, 0]).astype(int)
        base_y = np.floor(rel[:, 1]).astype(int)
        ix = base_x[:, None, None] + offs[None, None, :]
        iy = base_y[:, None, None] + offs[None, :, None]
        ixc = np.clip(ix, 0, nx - 1)
        iyc = np.clip(iy, 0, ny - 1)
        outside = (ix < 0) | (ix >= nx) | (iy < 0) | (iy >= ny)
        occ = self.cells[iyc, ixc] | outside
        # distance from point to each unit square, in cells
        dx = np.maximum(np.maximum(ix - rel[:, 0, None, None], rel[:, 0, None, None] - (ix + 1)), 0.0)
        dy = np.maximum(np.maximum(iy - rel[:, 1, None, None], rel[:, 1, None, None] - (iy + 1)), 0.0)
        hit = occ & (dx * dx + dy * dy < rc * rc)
        return hit.reshape(len(pts), -1).any(axis=1)

    def segment_free(self, a, b, radius: float) -> bool:
        """Swept-disc check sampled every ``resolution / 2`` along a->b."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        length = float(np.hypot(*(b - a)))
        n = max(1, int(math.ceil(length / (self.resolution / 2))))
        t = np.linspace(0.0, 1.0, n + 1)
        pts = a[None, :] + t[:, None] * (b - a)[None, :]
        return not self.discs_collide(pts, radius).any()

    def inflated(self, radius: float) -> np.ndarray:
        """Configuration grid: True where a disc of ``radius`` centered at the
        cell center would overlap an obstacle."""
        key = round(radius, 9)
        with self._lock:
            grid = self._inflated.get(key)
        if grid is None:
            kernel = _disc_kernel(radius / self.resolution)
            grid = ndimage.binary_dilation(self.cells, structure=kernel, border_value=1)
            grid |= self.cells
            with self._lock:
                self._inflated[key] = grid
        return grid

    def _grid_graph(self, radius: float):
        key = round(radius, 9)
        with self._lock:
            cached = self._graphs.get(key)
        if cached is not None:
            return cached
        free = ~self.inflated(radius)
        ny, nx = free.shape
        idx = np.arange(ny * nx).reshape(ny, nx)
        rows, cols, weights = [], [], []
        res = self.resolution
        for dy, dx, w in ((0, 1, res), (1, 0, res), (1, 1, math.sqrt(2) * res), (1, -1, math.sqrt(2) * res)):
            ys = slice(0, ny - dy)
            ye = slice(dy, ny)
            xs = slice(max(0, -dx), nx - max(0, dx))
            xe = slice(max(0, dx), nx + min(0, dx))
            both = free[ys, xs] & free[ye, xe]
            rows.append(idx[ys, xs][both])
            cols.append(idx[ye, xe][both])
            weights.append(np.full(int(both.sum()), w))
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        w = np.concatenate(weights)
        graph = coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([r, c]), np.concatenate([c, r]))),
            shape=(ny * nx, ny * nx),
        ).tocsr()
        cached = (graph, free)
        with self._lock:
            self._graphs[key] = cached
        return cached

    def _anchor_cells(self, p, radius: float) -> list[tuple[int, int, float]]:
        """Free configuration cells standing in for point ``p``.

        The cell containing ``p`` when its center is free, else the free
        cells within two cells of it, each with the center offset distance.
        """
        _, free = self._grid_graph(radius)
        ny, nx = free.shape
        ix, iy = self.cell_of(p)
        if 0 <= ix < nx and 0 <= iy < ny and free[iy, ix]:
            return [(ix, iy, 0.0)]
        out = []
        for jy in range(iy - 2, iy + 3):
            for jx in range(ix - 2, ix + 3):
                if 0 <= jx < nx and 0 <= jy < ny and free[jy, jx]:
                    c = self.cell_center(jx, jy)
                    out.append((jx, jy, math.hypot(c[0] - p[0], c[1] - p[1])))
        return out

    def geodesic_field(self, target, radius: float, cache: bool = True, limit: float = math.inf) -> GeodesicField:
        """Grid distances from ``target`` to every configuration cell.

        Cached fields are kept in a bounded LRU; pass ``cache=False`` for
        one-off sources such as the agent's momentary position. With a finite
        ``limit`` the search stops there: closer cells are exact, farther
        ones read ``inf``.
        """
        anchors = self._anchor_cells(target, radius)
        key = (round(radius, 9), tuple(anchors), limit)
        if cache:
            with self._lock:
                fld = self._fields.get(key)
                if fld is not None:
                    self._fields.move_to_end(key)
                    return fld
        graph, free = self._grid_graph(radius)
        ny, nx = free.shape
        if not anchors:
            values = np.full((ny, nx), np.inf)
        else:
            # the graph stores both directions of every edge, so the directed
            # search is exact and skips scipy's per-call transpose
            dist = dijkstra(graph, directed=True, indices=[a[1] * nx + a[0] for a in anchors], limit=limit)
            dist = dist + np.array([a[2] for a in anchors])[:, None]
            values = dist.min(axis=0).reshape(ny, nx)
        values.setflags(write=False)
        fld = GeodesicField(self, float(radius), values)
        if cache:
            with self._lock:
                self._fields[key] = fld
                while len(self._fields) > FIELD_CACHE_SIZE:
                    self._fields.popitem(last=False)
        return fld


@dataclass(frozen=True, eq=False)
class GeodesicField:
    world: OccupancyGrid
    radius: float
    values: np.ndarray

    def at(self, p) -> float:
        """Distance at point ``p``; points whose cell center is blocked snap
        to nearby free cells. ``inf`` if unreachable."""
        best = math.inf
        for ix, iy, off in self.world._anchor_cells(p, self.radius):
            best = min(best, float(self.values[iy, ix]) + off)
        return best


def _check_free(world: OccupancyGrid, p, what: str = "origin") -> None:
    if world.point_occupied(p):
        raise WorldError(f"{what} occluded")


def ray_cast(world: OccupancyGrid, origin, heading: float, max_range: float) -> float:
    """Distance from ``origin`` to the first obstacle cell boundary along
    ``heading``, clamped to ``max_range`` (exact grid traversal)."""
    _check_free(world, origin)
    return float(_ray_cast_many(world, origin, np.array([heading], dtype=float), max_range)[0])


def _ray_cast_many(world: OccupancyGrid, origin, headings: np.ndarray, max_range: float) -> np.ndarray:
    res = world.resolution
    ny, nx = world.cells.shape
    ox = (origin[0] - world.origin[0]) / res
    oy = (origin[1] - world.origin[1]) / res
    rad = np.deg2rad(headings)
    dx = np.cos(rad)
    dy = np.sin(rad)
    # snap exact axis directions so cos(90 deg) does not leak a 6e-17 component
    dx = np.where(np.abs(dx) < 1e-12, 0.0, dx)
    dy = np.where(np.abs(dy) < 1e-12, 0.0, dy)
    n = len(headings)
    ix = np.full(n, math.floor(ox))
    iy = np.full(n, math.floor(oy))
    step_x = np.where(dx > 0, 1, -1)
    step_y = np.where(dy > 0, 1, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_delta_x = np.where(dx != 0, 1.0 / np.abs(dx), np.inf)
        t_delta_y = np.where(dy != 0, 1.0 / np.abs(dy), np.inf)
        next_x = np.where(dx > 0, ix + 1 - ox, ox - ix)
        next_y = np.where(dy > 0, iy + 1 - oy, oy - iy)
        t_max_x = np.where(dx != 0, next_x * t_delta_x, np.inf)
        t_max_y = np.where(dy != 0, next_y * t_delta_y, np.inf)
    limit = max_range / res
    dist = np.full(n, limit)
    active = np.ones(n, dtype=bool)
    while active.any():
        take_x = t_max_x < t_max_y
        t_cross = np.where(take_x, t_max_x, t_max_y)
        beyond = active & (t_cross >= limit)
        active &= ~beyond
        if not active.any():
            break
        ix = np.where(active & take_x, ix + step_x, ix)
        iy = np.where(active & ~take_x, iy + step_y, iy)
        inside = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
        occ = np.ones(n, dtype=bool)
        occ[inside] = world.cells[iy[inside], ix[inside]]
        hit = active & occ
        dist[hit] = t_cross[hit]
        active &= ~hit
        t_max_x = np.where(active & take_x, t_max_x + t_delta_x, t_max_x)
        t_max_y = np.where(active & ~take_x, t_max_y + t_delta_y, t_max_y)
    return dist * res


def panoramic_scan(world: OccupancyGrid, state: AgentState, n_rays: int = 120, max_range: float = 5.0) -> RangeScan:
    if n_rays < 12:
        raise ValueError("n_rays must be at least 12")
    _check_free(world, state.position)
    headings = (state.heading + np.arange(n_rays) * (360.0 / n_rays)) % 360.0
    dists = _ray_cast_many(world, state.position, headings, max_range)
    return RangeScan(headings, dists, float(max_range), heading=state.heading)


def step(world: OccupancyGrid, state: AgentState, action: Action, sliding: Sliding = Sliding.ALLOWED):
    """Execute one low-level action. Returns ``(new_state, collided)``.

    In forbidden mode a blocked FORWARD returns the input position
    bit-identical; the deadlock detector relies on exact equality.
    """
    sliding = Sliding(sliding)
    if action is Action.ROTATE_LEFT:
        return state.turned_to(state.heading + ROTATE_STEP), False
    if action is Action.ROTATE_RIGHT:
        return state.turned_to(state.heading - ROTATE_STEP), False
    if action is Action.STOP:
        return state, False

    r = state.chassis_radius
    h = math.radians(state.heading)
    ddx = FORWARD_STEP * math.cos(h)
    ddy = FORWARD_STEP * math.sin(h)
    start = (state.x, state.y)
    target = (state.x + ddx, state.y + ddy)
    if world.segment_free(start, target, r):
        return state.moved_to(*target), False
    if sliding is Sliding.FORBIDDEN:
        return state, True
    x, y = start
    if ddx != 0.0 and world.segment_free((x, y), (x + ddx, y), r):
        x += ddx
    if ddy != 0.0 and world.segment_free((x, y), (x, y + ddy), r):
        y += ddy
    return state.moved_to(x, y), True


def geodesic_distance(world: OccupancyGrid, a, b, radius: float) -> float:
    """Shortest obstacle-free path length for a disc of ``radius``.

    8-connected Dijkstra on the radius-inflated grid between the cells
    holding ``a`` and ``b``, floored by the straight-line distance so the
    result is a metric that never undercuts Euclidean distance. Returns
    ``inf`` when the endpoints are disconnected.
    """
    for p, what in ((a, "start"), (b, "goal")):
        if world.disc_collides(p, radius):
            raise WorldError(f"{what} occluded")
    euclid = math.hypot(b[0] - a[0], b[1] - a[1])
    if world.cell_of(a) == world.cell_of(b):
        return euclid
    return max(world.geodesic_field(b, radius).at(a), euclid)


def world_from_ascii(rows, resolution: float = 0.05, origin=(0.0, 0.0)) -> OccupancyGrid:
    """Build a grid from text rows, first row = top (largest y)."""
    rows = list(rows)
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise WorldError("ragged grid rows")
    cells = np.array([[c == "#" for c in row] for row in reversed(rows)], dtype=bool)
    return OccupancyGrid(cells, resolution, origin)


def world_to_ascii(world: OccupancyGrid) -> list[str]:
    return ["".join("#" if c else "." for c in row) for row in world.cells[::-1]]
