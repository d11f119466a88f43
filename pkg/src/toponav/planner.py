"""Long-term goal selection over the topological map.

Graph-aware self-attention (attention logits biased by the all-pairs path
length matrix), per-node goal scores with visited/current masking, goal
selection, Dijkstra path extraction and the two demonstrator policies.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .topomap import NodeKind, TopoGraph
from .world import OccupancyGrid

STOP = "STOP"
STOP_RADIUS = 3.0
SUBGOAL_RADIUS = 1.5


class PlanningError(ValueError):
    pass


@dataclass(frozen=True)
class GasaWeights:
    """Projection matrices (d x d) plus one distance weight per head."""

    W_q: np.ndarray
    W_k: np.ndarray
    W_v: np.ndarray
    W_e: np.ndarray

    @property
    def d(self) -> int:
        return self.W_q.shape[0]

    @property
    def n_heads(self) -> int:
        return len(self.W_e)

    def __post_init__(self):
        d = self.W_q.shape[0]
        for name in ("W_q", "W_k", "W_v"):
            m = getattr(self, name)
            if m.ndim != 2 or m.shape != (d, d):
                raise ValueError(f"{name} must be {d}x{d}, got {m.shape}")
        if self.W_e.ndim != 1 or len(self.W_e) < 1 or d % len(self.W_e):
            raise ValueError("W_e must hold one weight per head and heads must divide d")

    @classmethod
    def seeded(cls, d: int, n_heads: int = 1, seed: int = 0, distance_weight: float = -1.0) -> GasaWeights:
        rng = np.random.default_rng(seed)
        scale = 1.0 / math.sqrt(d)
        return cls(
            rng.normal(0.0, scale, (d, d)),
            rng.normal(0.0, scale, (d, d)),
            rng.normal(0.0, scale, (d, d)),
            np.full(n_heads, float(distance_weight)),
        )


@dataclass(frozen=True)
class FFNWeights:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: float = 0.0

    @classmethod
    def seeded(cls, d: int, hidden: int = 16, seed: int = 1) -> FFNWeights:
        rng = np.random.default_rng(seed)
        return cls(
            rng.normal(0.0, 1.0 / math.sqrt(d), (d, hidden)),
            np.zeros(hidden),
            rng.normal(0.0, 1.0 / math.sqrt(hidden), hidden),
            0.0,
        )

    def __call__(self, h: np.ndarray) -> np.ndarray:
        return np.maximum(h @ self.W1 + self.b1, 0.0) @ self.W2 + self.b2


def save_weights(weights: GasaWeights, path) -> None:
    """Plain-text format: per matrix a header ``name rows cols`` followed by
    one line per row of ``repr`` floats (exact round-trip)."""
    lines = [f"gasa-weights 1 d={weights.d} heads={weights.n_heads}"]
    for name in ("W_q", "W_k", "W_v", "W_e"):
        m = np.atleast_2d(getattr(weights, name))
        lines.append(f"{name} {m.shape[0]} {m.shape[1]}")
        lines += [" ".join(repr(float(v)) for v in row) for row in m]
    Path(path).write_text("\n".join(lines) + "\n")


def load_weights(path) -> GasaWeights:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("gasa-weights"):
        raise ValueError("not a gasa-weights file")
    mats = {}
    i = 1
    while i < len(lines):
        name, rows, cols = lines[i].split()
        rows, cols = int(rows), int(cols)
        body = lines[i + 1:i + 1 + rows]
        m = np.array([[float(v) for v in ln.split()] for ln in body])
        if m.shape != (rows, cols):
            raise ValueError(f"{name}: expected {rows}x{cols} values")
        mats[name] = m
        i += 1 + rows
    return GasaWeights(mats["W_q"], mats["W_k"], mats["W_v"], mats["W_e"].ravel())


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def gasa_attention(X: np.ndarray, E: np.ndarray, weights: GasaWeights) -> np.ndarray:
    """Attention weights, shape (heads, n, n); each row sums to 1."""
    X = np.asarray(X, dtype=float)
    E = np.asarray(E, dtype=float)
    n, d = X.shape
    if d != weights.d:
        raise ValueError(f"X has dimension {d}, weights expect {weights.d}")
    if E.shape != (n, n):
        raise ValueError(f"E must be {n}x{n}, got {E.shape}")
    h = weights.n_heads
    dh = d // h
    q = (X @ weights.W_q).reshape(n, h, dh).transpose(1, 0, 2)
    k = (X @ weights.W_k).reshape(n, h, dh).transpose(1, 0, 2)
    logits = q @ k.transpose(0, 2, 1) / math.sqrt(dh)
    logits = logits + E[None, :, :] * weights.W_e[:, None, None]
    return softmax(logits, axis=-1)


def gasa_forward(X: np.ndarray, E: np.ndarray, weights: GasaWeights) -> np.ndarray:
    """softmax(X Wq (X Wk)^T / sqrt(d) + E * w_e) X Wv, one distance weight per head."""
    X = np.asarray(X, dtype=float)
    attn = gasa_attention(X, E, weights)
    n, d = X.shape
    h = weights.n_heads
    v = (X @ weights.W_v).reshape(n, h, d // h).transpose(1, 0, 2)
    return (attn @ v).transpose(1, 0, 2).reshape(n, d)


def encode_nodes(graph: TopoGraph, agent_pose, stop_embedding: np.ndarray | None = None):
    """Node features: descriptor, (cos, sin, distance) relative to the agent,
    last visit step. Returns ``(X, ids)`` with the stop node at row 0
    (``ids[0] is STOP``)."""
    ids = graph.node_order()
    rows = []
    for i in ids:
        node = graph.nodes[i]
        dx = node.position[0] - agent_pose[0]
        dy = node.position[1] - agent_pose[1]
        rel = math.atan2(dy, dx) - math.radians(agent_pose[2])
        rows.append(np.concatenate([
            node.descriptor,
            [math.cos(rel), math.sin(rel), math.hypot(dx, dy), float(node.last_visit_step)],
        ]))
    d = len(rows[0]) if rows else 0
    stop = np.zeros(d) if stop_embedding is None else np.asarray(stop_embedding, dtype=float)
    return np.vstack([stop] + rows), [STOP] + ids


def score_nodes(graph: TopoGraph, X: np.ndarray, ids: list, gasa_out: np.ndarray, ffn: FFNWeights) -> np.ndarray:
    """FFN goal score per row; visited and current nodes get ``-inf``."""
    scores = np.asarray(ffn(gasa_out), dtype=float).copy()
    for k, i in enumerate(ids):
        if i is STOP:
            continue
        if graph.nodes[i].kind is not NodeKind.GHOST:
            scores[k] = -math.inf
    return scores


def select_goal(scores, ids, mode: str = "argmax", rng: np.random.Generator | None = None):
    """Pick a node id or ``STOP`` from masked scores.

    argmax breaks ties toward the smaller id with the stop node ordered
    first; sample draws from the softmax over unmasked scores.
    """
    scores = np.asarray(scores, dtype=float)
    finite = np.isfinite(scores)
    if not finite.any():
        return STOP
    if mode == "argmax":
        best = max(np.flatnonzero(finite), key=lambda k: (scores[k], -k))
        return ids[int(best)]
    if mode == "sample":
        if rng is None:
            raise ValueError("sample mode needs an rng")
        probs = np.zeros(len(scores))
        probs[finite] = softmax(scores[finite])
        return ids[int(rng.choice(len(scores), p=probs))]
    raise ValueError(f"unknown mode {mode!r}")


def shortest_path_ids(graph: TopoGraph, source: int, goal: int) -> tuple[float, list[int]]:
    """Dijkstra over stored edge lengths; equal lengths resolve to the
    lexicographically smallest id sequence."""
    if source not in graph.nodes or goal not in graph.nodes:
        raise PlanningError("unknown node")
    heap = [(0.0, (source,))]
    done = set()
    while heap:
        dist, path = heapq.heappop(heap)
        u = path[-1]
        if u in done:
            continue
        done.add(u)
        if u == goal:
            return dist, list(path)
        for v, w in graph.adj[u].items():
            if v not in done:
                heapq.heappush(heap, (dist + w, path + (v,)))
    raise PlanningError(f"goal {goal} unreachable from {source}")


def plan_path(graph: TopoGraph, current: int, goal: int) -> list[tuple[float, float]]:
    """Subgoal positions from ``current`` (excluded) to ``goal`` (included)."""
    if goal not in graph.nodes or graph.nodes[goal].kind is not NodeKind.GHOST:
        raise PlanningError(f"goal {goal} is not a ghost")
    _, path = shortest_path_ids(graph, current, goal)
    return [graph.nodes[i].position for i in path[1:]]


def _best_ghost(graph: TopoGraph, field) -> tuple[int | None, float]:
    best, best_d = None, math.inf
    for g in graph.ghosts:
        d = field.at(graph.nodes[g].position)
        if d < best_d:
            best, best_d = g, d
    return best, best_d


def teacher_goal_r2r(graph: TopoGraph, world: OccupancyGrid, target, radius: float, agent_pos=None):
    """Ghost nearest (geodesically) to the final target, or STOP once the
    agent is within the success radius."""
    field = world.geodesic_field(target, radius)
    here = agent_pos if agent_pos is not None else graph.nodes[graph.current_id].position
    if field.at(here) <= STOP_RADIUS:
        return STOP
    best, best_d = _best_ghost(graph, field)
    if best is None or not math.isfinite(best_d):
        return STOP
    return best


def teacher_goal_rxr(graph: TopoGraph, world: OccupancyGrid, subgoals, visited, radius: float, agent_pos=None):
    """Path-fidelity demonstrator. Returns ``(goal, visited_mask)``.

    Subgoals within ``SUBGOAL_RADIUS`` of the agent are marked visited
    together with every subgoal before them, so the mask stays a prefix.
    """
    here = agent_pos if agent_pos is not None else graph.nodes[graph.current_id].position
    visited = list(visited)
    # one field from the agent serves every subgoal (geodesic distance is symmetric)
    from_here = world.geodesic_field(here, radius, cache=False)
    last = -1
    for k, sg in enumerate(subgoals):
        if from_here.at(sg) <= SUBGOAL_RADIUS:
            last = k
    for k in range(last + 1):
        visited[k] = True
    if all(visited):
        if from_here.at(subgoals[-1]) <= STOP_RADIUS:
            return STOP, visited
        nxt = len(subgoals) - 1
    else:
        nxt = visited.index(False)
    best, best_d = _best_ghost(graph, world.geodesic_field(subgoals[nxt], radius))
    if best is None or not math.isfinite(best_d):
        return STOP, visited
    return best, visited


def discretize_path(points, spacing: float) -> list[tuple[float, float]]:
    """Resample a polyline so consecutive points are at most ``spacing`` apart."""
    pts = [tuple(map(float, p)) for p in points]
    out = [pts[0]]
    for a, b in zip(pts, pts[1:]):
        seg = math.hypot(b[0] - a[0], b[1] - a[1])
        n = max(1, int(math.ceil(seg / spacing - 1e-9)))
        for j in range(1, n + 1):
            t = j / n
            out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
    return out
