"""Render an episode trace (trajectory plus final map) to a vector image."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..world import OccupancyGrid  # noqa: E402

KIND_STYLE = {
    "visited": dict(color="tab:blue", marker="o"),
    "current": dict(color="tab:green", marker="s"),
    "ghost": dict(color="tab:orange", marker="^"),
}


def read_trace(path) -> list[dict]:
    records = []
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{n}: not a JSON record ({exc.msg})") from None
    if not records or records[0].get("type") != "episode":
        raise ValueError(f"{path}: first record must be the episode header")
    return records


def plot_trace(records: list[dict], out, world: OccupancyGrid | None = None, crop: bool = True) -> Path:
    """Draw the occupancy grid (if given), the agent track, every chosen goal
    and the last graph snapshot. The format follows the file suffix."""
    head = records[0]
    decisions = [r for r in records if r["type"] == "decision"]
    track = [tuple(head["start"][:2])] + [(r["x"], r["y"]) for r in records if r["type"] == "action"]

    fig, ax = plt.subplots(figsize=(8, 5))
    if world is not None:
        ny, nx = world.cells.shape
        x0, y0 = world.origin
        extent = (x0, x0 + nx * world.resolution, y0, y0 + ny * world.resolution)
        ax.imshow(world.cells, origin="lower", extent=extent, cmap="Greys", interpolation="nearest")

    if decisions:
        snap = decisions[-1]["graph"]
        pos = {n["id"]: (n["x"], n["y"]) for n in snap["nodes"]}
        for a, b, _ in snap["edges"]:
            ax.plot([pos[a][0], pos[b][0]], [pos[a][1], pos[b][1]], color="0.6", lw=0.8, zorder=2)
        for kind, style in KIND_STYLE.items():
            pts = [pos[n["id"]] for n in snap["nodes"] if n["kind"] == kind]
            if pts:
                ax.scatter(*zip(*pts), s=22, zorder=3, label=kind, **style)
        goals = [d["goal_position"] for d in decisions if d.get("goal_position")]
        if goals:
            ax.scatter(*zip(*goals), s=40, facecolors="none", edgecolors="tab:red", zorder=4, label="chosen goal")

    xs, ys = zip(*track)
    ax.plot(xs, ys, color="tab:purple", lw=1.2, zorder=5, label="agent")
    ax.scatter([head["goal"][0]], [head["goal"][1]], marker="*", s=120, color="gold", edgecolors="k", zorder=6,
               label="target")
    if crop:
        px = list(xs) + [head["goal"][0]]
        py = list(ys) + [head["goal"][1]]
        if decisions:
            px += [n["x"] for n in decisions[-1]["graph"]["nodes"]]
            py += [n["y"] for n in decisions[-1]["graph"]["nodes"]]
        pad = 1.0
        ax.set_xlim(min(px) - pad, max(px) + pad)
        ax.set_ylim(min(py) - pad, max(py) + pad)
    ax.set_aspect("equal")
    ax.set_title(f"{head['id']} ({head['policy']}, stop: {head['stop_reason']})")
    ax.legend(loc="upper left", fontsize=7, framealpha=0.8)
    out = Path(out)
    fig.savefig(out, bbox_inches="tight")
    plt.close(fig)
    return out
