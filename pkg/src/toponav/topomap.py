"""Online topological map built by self-organizing predicted waypoints."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path


class NodeKind(enum.Enum):
    VISITED = "visited"
    CURRENT = "current"
    GHOST = "ghost"


class GraphError(ValueError):
    pass


@dataclass
class Node:
    id: int
    kind: NodeKind
    position: tuple[float, float]
    descriptor: np.ndarray
    accum_count: int = 1
    last_visit_step: int = 0


@dataclass
class UpdateReport:
    step: int
    current: int
    created: list[int] = field(default_factory=list)
    merged: list[int] = field(default_factory=list)
    discarded: int = 0
    edges_added: list[tuple[int, int]] = field(default_factory=list)
    removed: list[int] = field(default_factory=list)


def _dist(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


class TopoGraph:
    """Nodes keyed by integer id (never reused) and undirected weighted edges.

    Edge lengths are the Euclidean distance between endpoints when the edge
    was inserted.
    """

    def __init__(self, accumulate: bool = True):
        self.nodes: dict[int, Node] = {}
        self.adj: dict[int, dict[int, float]] = {}
        self.accumulate = accumulate
        self.current_id: int | None = None
        self._next_id = 0

    def __len__(self):
        return len(self.nodes)

    @property
    def ghosts(self) -> list[int]:
        return sorted(i for i, n in self.nodes.items() if n.kind is NodeKind.GHOST)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return sorted((a, b, w) for a, nbrs in self.adj.items() for b, w in nbrs.items() if a < b)

    def _new_node(self, kind, position, descriptor, step=0) -> Node:
        node = Node(self._next_id, kind, (float(position[0]), float(position[1])),
                    np.array(descriptor, dtype=float), 1, step)
        self.nodes[node.id] = node
        self.adj[node.id] = {}
        self._next_id += 1
        return node

    def add_edge(self, a: int, b: int) -> bool:
        if a == b or b in self.adj[a]:
            return False
        w = _dist(self.nodes[a].position, self.nodes[b].position)
        self.adj[a][b] = w
        self.adj[b][a] = w
        return True

    def localize(self, p, gamma: float, positions: dict[int, tuple[float, float]] | None = None) -> int | None:
        """Nearest node strictly within ``gamma`` of ``p``; ties -> smaller id."""
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        if positions is None:
            positions = {i: n.position for i, n in self.nodes.items()}
        best, best_d = None, math.inf
        for i in sorted(positions):
            d = _dist(positions[i], p)
            if d < best_d:
                best, best_d = i, d
        return best if best_d < gamma else None

    def update(self, pose, waypoints, step: int, gamma: float = 0.5, panorama_descriptor=None) -> UpdateReport:
        """Incorporate the agent's pose and world-frame waypoints.

        ``waypoints`` is a sequence of ``(position, descriptor)`` pairs. Every
        waypoint localizes against the node positions as they stand once the
        current node is placed, so results do not depend on waypoint order.
        """
        pos = (float(pose[0]), float(pose[1]))
        if panorama_descriptor is None:
            dim = len(waypoints[0][1]) if waypoints else 0
            panorama_descriptor = np.zeros(dim)
        prev = self.current_id
        if prev is not None:
            self.nodes[prev].kind = NodeKind.VISITED

        hit = self.localize(pos, gamma) if self.nodes else None
        if hit is None:
            cur = self._new_node(NodeKind.CURRENT, pos, panorama_descriptor, step)
            created = [cur.id]
        else:
            # revisit: reuse the visited node, or claim the ghost we stand on
            cur = self.nodes[hit]
            if cur.kind is NodeKind.GHOST:
                cur.position = pos
                cur.accum_count = 1
            cur.kind = NodeKind.CURRENT
            cur.descriptor = np.array(panorama_descriptor, dtype=float)
            created = []
        cur.last_visit_step = step
        self.current_id = cur.id
        report = UpdateReport(step=step, current=cur.id, created=created)
        if prev is not None and self.add_edge(cur.id, prev):
            report.edges_added.append((min(cur.id, prev), max(cur.id, prev)))

        snapshot = {i: n.position for i, n in self.nodes.items()}
        kinds = {i: n.kind for i, n in self.nodes.items()}
        for wp_pos, desc in waypoints:
            wp_pos = (float(wp_pos[0]), float(wp_pos[1]))
            target = self.localize(wp_pos, gamma, snapshot)
            if target == cur.id:
                report.discarded += 1
                continue
            if target is None:
                node = self._new_node(NodeKind.GHOST, wp_pos, desc)
                report.created.append(node.id)
            elif kinds[target] is NodeKind.VISITED:
                report.discarded += 1
                node = self.nodes[target]
            else:
                node = self.nodes[target]
                self._fold(node, wp_pos, desc)
                report.merged.append(node.id)
            if self.add_edge(cur.id, node.id):
                report.edges_added.append((min(cur.id, node.id), max(cur.id, node.id)))
        return report

    def _fold(self, ghost: Node, p, desc) -> None:
        if not self.accumulate:
            ghost.position = p
            ghost.descriptor = np.array(desc, dtype=float)
            return
        k = ghost.accum_count
        ghost.position = (
            (ghost.position[0] * k + p[0]) / (k + 1),
            (ghost.position[1] * k + p[1]) / (k + 1),
        )
        ghost.descriptor = (ghost.descriptor * k + np.asarray(desc, dtype=float)) / (k + 1)
        ghost.accum_count = k + 1

    def delete_ghost(self, node_id: int) -> UpdateReport:
        node = self.nodes.get(node_id)
        if node is None:
            raise GraphError(f"node {node_id} does not exist")
        if node.kind is not NodeKind.GHOST:
            raise GraphError(f"node {node_id} is {node.kind.value}, not a ghost")
        for nbr in self.adj.pop(node_id):
            del self.adj[nbr][node_id]
        del self.nodes[node_id]
        return UpdateReport(step=-1, current=self.current_id, removed=[node_id])

    def node_order(self) -> list[int]:
        return sorted(self.nodes)

    def spatial_matrix(self, with_stop: bool = False) -> np.ndarray:
        """All-pairs shortest path lengths over stored edge lengths, rows in
        ``node_order()``. With ``with_stop`` a zero row/column for the stop
        node is prepended at index 0."""
        order = self.node_order()
        if not order:
            raise GraphError("graph is empty")
        index = {n: k for k, n in enumerate(order)}
        rows, cols, vals = [], [], []
        for a, b, w in self.edges:
            rows += [index[a], index[b]]
            cols += [index[b], index[a]]
            # csgraph drops explicit zeros; coincident nodes still need a link
            vals += [max(w, 1e-300)] * 2
        mat = csr_matrix((vals, (rows, cols)), shape=(len(order), len(order)))
        dist = shortest_path(mat, method="D", directed=False)
        assert np.isfinite(dist).all(), "non-stop nodes must stay connected"
        if with_stop:
            full = np.zeros((len(order) + 1, len(order) + 1))
            full[1:, 1:] = dist
            return full
        return dist

    def snapshot(self) -> dict:
        return {
            "current": self.current_id,
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind.value,
                    "x": n.position[0],
                    "y": n.position[1],
                    "accum": n.accum_count,
                    "step": n.last_visit_step,
                }
                for n in (self.nodes[i] for i in self.node_order())
            ],
            "edges": [[a, b, w] for a, b, w in self.edges],
        }

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        start = next(iter(self.nodes))
        seen = {start}
        todo = [start]
        while todo:
            for nbr in self.adj[todo.pop()]:
                if nbr not in seen:
                    seen.add(nbr)
                    todo.append(nbr)
        return len(seen) == len(self.nodes)
