"""Geometric waypoint predictor: polar accessibility heatmap + greedy NMS,
and the waypoint quality metrics (count difference, %Open, Chamfer,
Hausdorff)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .world import OccupancyGrid, RangeScan

DESCRIPTOR_BINS = 8
VIEW_SECTOR = 30.0


@dataclass(frozen=True)
class HeatmapConfig:
    angular_bins: int = 120
    radial_bins: int = 12
    radial_step: float = 0.25
    chassis_radius: float = 0.10

    @property
    def angular_step(self) -> float:
        return 360.0 / self.angular_bins

    @property
    def radial_extent(self) -> float:
        return self.radial_bins * self.radial_step


@dataclass(frozen=True)
class PolarHeatmap:
    """Scores over (angle bin, range bin), angles relative to ``heading``.

    ``depths`` keeps the per-bin free range the scores were derived from;
    the predictor uses it for descriptors and to rank equal-score cells.
    """

    scores: np.ndarray
    depths: np.ndarray
    config: HeatmapConfig
    heading: float
    max_range: float

    @property
    def angular_bins(self) -> int:
        return self.scores.shape[0]

    @property
    def radial_bins(self) -> int:
        return self.scores.shape[1]

    def bin_angle(self, a: int) -> float:
        return a * self.config.angular_step

    def bin_range(self, r: int) -> float:
        return (r + 0.5) * self.config.radial_step


@dataclass(frozen=True)
class Waypoint:
    rel_heading: float
    distance: float
    descriptor: np.ndarray
    source_step: int = 0
    score: float = 1.0

    def to_world(self, pose) -> tuple[float, float]:
        """Absolute position given agent ``pose`` = (x, y, heading)."""
        h = math.radians(pose[2] + self.rel_heading)
        return (pose[0] + self.distance * math.cos(h), pose[1] + self.distance * math.sin(h))


@dataclass(frozen=True)
class WaypointEval:
    count_diff: int
    percent_open: float
    chamfer: float
    hausdorff: float


def _depth_per_bin(scan: RangeScan, n_bins: int) -> np.ndarray:
    # nearest ray to each bin center, angles relative to the scan heading
    rel = (np.asarray(scan.ray_headings) - scan.heading) % 360.0
    centers = np.arange(n_bins) * (360.0 / n_bins)
    diff = np.abs(((centers[:, None] - rel[None, :]) + 180.0) % 360.0 - 180.0)
    return np.asarray(scan.distances)[np.argmin(diff, axis=1)]


def build_heatmap(scan: RangeScan, config: HeatmapConfig = HeatmapConfig()) -> PolarHeatmap:
    """Score 1 where the cell center lies at least one chassis diameter short
    of the ray's obstacle distance, decaying linearly to 0 at the obstacle."""
    depths = _depth_per_bin(scan, config.angular_bins)
    ranges = (np.arange(config.radial_bins) + 0.5) * config.radial_step
    margin = 2.0 * config.chassis_radius
    slack = depths[:, None] - ranges[None, :]
    if margin > 0:
        scores = np.clip(slack / margin, 0.0, 1.0)
    else:
        scores = (slack > 0).astype(float)
    return PolarHeatmap(scores, depths, config, scan.heading, scan.max_range)


def sector_descriptor(heatmap: PolarHeatmap, rel_heading: float, width: float = VIEW_SECTOR) -> np.ndarray:
    """Normalized histogram of free range over the view sector centered on
    ``rel_heading``."""
    n = heatmap.angular_bins
    angles = np.arange(n) * (360.0 / n)
    diff = np.abs(((angles - rel_heading) + 180.0) % 360.0 - 180.0)
    sel = heatmap.depths[diff <= width / 2.0]
    hist, _ = np.histogram(sel, bins=DESCRIPTOR_BINS, range=(0.0, heatmap.max_range))
    hist = hist.astype(float)
    # clamped rays land exactly on max_range; np.histogram keeps them in the last bin
    total = hist.sum()
    return hist / total if total > 0 else hist


def panorama_descriptor(heatmap: PolarHeatmap, n_views: int = 12) -> np.ndarray:
    """Mean of the per-view sector descriptors (current-node representation)."""
    step = 360.0 / n_views
    return np.mean([sector_descriptor(heatmap, i * step, step) for i in range(n_views)], axis=0)


def predict_waypoints(
    heatmap: PolarHeatmap,
    K: int = 5,
    nms_window: tuple[float, float] = (30.0, 0.5),
    source_step: int = 0,
) -> list[Waypoint]:
    """Greedy non-maximum suppression over the heatmap.

    Repeatedly emits the best remaining cell and suppresses every cell within
    ``nms_window`` = (degrees, meters) of it. Equal scores are ranked by larger
    range, then deeper free space in that direction, then smaller angle index.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    scores = heatmap.scores.copy()
    n_ang, n_rad = scores.shape
    win_deg, win_m = nms_window
    angles = np.arange(n_ang) * (360.0 / n_ang)
    ranges = (np.arange(n_rad) + 0.5) * heatmap.config.radial_step

    a_idx, r_idx = np.meshgrid(np.arange(n_ang), np.arange(n_rad), indexing="ij")
    order = np.lexsort((a_idx.ravel(), -heatmap.depths[a_idx].ravel(), -r_idx.ravel(), -scores.ravel()))
    alive = scores.ravel() > 0
    out: list[Waypoint] = []
    for flat in order:
        if len(out) >= K:
            break
        if not alive[flat]:
            continue
        a, r = divmod(int(flat), n_rad)
        rel = float(angles[a])
        out.append(
            Waypoint(
                rel_heading=rel,
                distance=float(ranges[r]),
                descriptor=sector_descriptor(heatmap, rel),
                source_step=source_step,
                score=float(scores[a, r]),
            )
        )
        dang = np.abs(((angles - rel) + 180.0) % 360.0 - 180.0)
        drad = np.abs(ranges - ranges[r])
        alive &= ~((dang[:, None] <= win_deg) & (drad[None, :] <= win_m)).ravel()
    return out


def _directed_nn(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # explicit sqrt(dx*dx + dy*dy): no fused or reordered arithmetic, so the
    # value is reproducible bit for bit by a scalar loop
    dx = a[:, None, 0] - b[None, :, 0]
    dy = a[:, None, 1] - b[None, :, 1]
    return np.sqrt(dx * dx + dy * dy).min(axis=1)


def _mean(v: np.ndarray) -> float:
    return math.fsum(v.tolist()) / len(v)


def chamfer_distance(a, b) -> float:
    """Symmetric Chamfer: mean of the two directed mean nearest-neighbor distances."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    return 0.5 * (_mean(_directed_nn(a, b)) + _mean(_directed_nn(b, a)))


def hausdorff_distance(a, b) -> float:
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    return float(max(_directed_nn(a, b).max(), _directed_nn(b, a).max()))


def evaluate_waypoints(predicted, reference, world: OccupancyGrid, pose, chassis_radius: float = 0.10) -> WaypointEval:
    """Compare predicted waypoint positions against a reference set.

    %Open counts predicted points reachable from ``pose`` by a straight
    swept-disc segment. With no predictions the distances are ``inf``.
    """
    reference = [tuple(map(float, p)) for p in reference]
    predicted = [tuple(map(float, p)) for p in predicted]
    if not reference:
        raise ValueError("reference waypoint set is empty")
    count_diff = abs(len(predicted) - len(reference))
    if not predicted:
        return WaypointEval(count_diff, 0.0, math.inf, math.inf)
    origin = (float(pose[0]), float(pose[1]))
    n_open = sum(world.segment_free(origin, p, chassis_radius) for p in predicted)
    return WaypointEval(
        count_diff,
        n_open / len(predicted),
        chamfer_distance(predicted, reference),
        hausdorff_distance(predicted, reference),
    )
