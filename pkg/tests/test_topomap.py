import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import floyd_warshall, graphs_agree, random_stream, replay_compare
from toponav.topomap import GraphError, NodeKind, TopoGraph

D = np.zeros(2)


def wp(*pts):
    return [(p, D) for p in pts]


def test_localize_examples():
    g = TopoGraph()
    g.update((0.0, 0.0, 0.0), [], 1)
    assert g.localize((0.0, 0.3), 0.5) == 0
    assert g.localize((0.0, 0.6), 0.5) is None
    g.update((0.4, 0.0, 0.0), [], 2)  # 0.4 < 0.5: reuses node 0
    assert len(g) == 1
    g2 = TopoGraph()
    g2.update((0.0, 0.0, 0.0), wp((0.4, 0.0)), 1)
    assert g2.localize((0.15, 0.0), 0.5) == 0
    with pytest.raises(ValueError):
        g2.localize((0, 0), 0.0)


def test_localize_ties_to_smaller_id():
    g = TopoGraph()
    g.update((0.0, 0.0, 0.0), wp((1.0, 0.0)), 1)
    assert g.localize((0.5, 0.0), 0.6) == 0


def test_bootstrap_update():
    g = TopoGraph()
    rep = g.update((0.0, 0.0, 0.0), wp((1.0, 0.0), (0.0, 1.0)), 1)
    assert len(g) == 3 and len(g.ghosts) == 2 and len(g.edges) == 2
    assert rep.current == 0 and rep.created == [0, 1, 2]
    assert g.nodes[0].kind is NodeKind.CURRENT and g.nodes[0].last_visit_step == 1


def test_ghost_accumulation_running_mean():
    g = TopoGraph()
    g.update((0.0, 0.0, 0.0), [((1.0, 0.0), np.array([1.0, 0.0]))], 1)
    rep = g.update((0.0, 0.0, 0.0), [((1.2, 0.0), np.array([0.0, 1.0]))], 2)
    ghost = g.nodes[1]
    assert ghost.position == pytest.approx((1.1, 0.0))
    assert ghost.accum_count == 2
    assert ghost.descriptor == pytest.approx([0.5, 0.5])
    assert rep.merged == [1]


def test_accumulation_off_replaces():
    g = TopoGraph(accumulate=False)
    g.update((0.0, 0.0, 0.0), wp((1.0, 0.0)), 1)
    g.update((0.0, 0.0, 0.0), wp((1.2, 0.0)), 2)
    assert g.nodes[1].position == (1.2, 0.0) and g.nodes[1].accum_count == 1


def test_waypoint_on_visited_node_adds_edge_only():
    g = TopoGraph()
    g.update((0.0, 0.0, 0.0), [], 1)
    g.update((2.0, 0.0, 0.0), [], 2)
    g.update((4.0, 0.0, 0.0), [], 3)
    n = len(g)
    rep = g.update((4.0, 0.0, 0.0), wp((0.1, 0.0)), 4)
    assert len(g) == n
    assert (0, 2) in rep.edges_added and rep.discarded == 1


def test_waypoint_on_current_node_discarded():
    g = TopoGraph()
    rep = g.update((0.0, 0.0, 0.0), wp((0.2, 0.0)), 1)
    assert len(g) == 1 and rep.discarded == 1 and not g.edges


def test_standing_on_ghost_claims_it():
    g = TopoGraph()
    g.update((0.0, 0.0, 0.0), wp((2.0, 0.0)), 1)
    g.update((2.1, 0.0, 0.0), [], 2)
    assert len(g) == 2 and g.current_id == 1
    assert g.nodes[1].kind is NodeKind.CURRENT and g.nodes[1].position == (2.1, 0.0)
    assert g.nodes[0].kind is NodeKind.VISITED


def test_delete_ghost():
    g = TopoGraph()
    g.update((0.0, 0.0, 0.0), wp((1.0, 0.0)), 1)
    g.delete_ghost(1)
    assert not g.ghosts and not g.edges
    with pytest.raises(GraphError):
        g.delete_ghost(0)
    with pytest.raises(GraphError):
        g.delete_ghost(99)
    g.update((0.0, 0.0, 0.0), wp((1.0, 0.0)), 2)
    (fresh,) = g.ghosts
    assert fresh != 1 and g.nodes[fresh].accum_count == 1


def test_spatial_matrix_examples():
    g = TopoGraph()
    g.update((0.0, 0.0, 0.0), [], 1)
    assert g.spatial_matrix().tolist() == [[0.0]]
    g.update((1.0, 0.0, 0.0), [], 2)
    g.update((2.0, 0.0, 0.0), [], 3)
    assert g.spatial_matrix()[0, 2] == pytest.approx(2.0)
    E = g.spatial_matrix(with_stop=True)
    assert E.shape == (4, 4) and not E[0].any() and not E[:, 0].any()


def test_spatial_matrix_triangle_against_floyd_warshall():
    g = TopoGraph()
    for i, p in enumerate([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]):
        g._new_node(NodeKind.VISITED, p, D)
    for a, b, w in ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)):
        g.adj[a][b] = g.adj[b][a] = w
    E = g.spatial_matrix()
    assert E[0, 2] == 2.0
    assert np.array_equal(E, floyd_warshall(3, g.edges))


@given(seed=st.integers(0, 100_000), gamma=st.sampled_from([0.25, 0.5, 0.75, 1.0]))
def test_matches_replay_oracle_with_deletions(seed, gamma):
    stream = random_stream(seed, deletions=True)
    graph, oracle = replay_compare(stream, gamma, TopoGraph)
    assert graphs_agree(graph, oracle)


@given(seed=st.integers(0, 100_000))
def test_map_invariants(seed):
    graph, _ = replay_compare(random_stream(seed, deletions=True), 0.5, TopoGraph)
    kinds = [n.kind for n in graph.nodes.values()]
    assert kinds.count(NodeKind.CURRENT) == 1
    assert graph.is_connected()
    for gid in graph.ghosts:
        assert graph.adj[gid]
        assert all(graph.nodes[n].kind is not NodeKind.GHOST for n in graph.adj[gid])
    for a, b, w in graph.edges:
        assert a != b and w >= 0
    E = graph.spatial_matrix()
    assert np.allclose(E, E.T) and not np.diag(E).any()
    # E[i, j] <= E[i, k] + E[k, j] for every triple, laid out as [i, k, j]
    assert np.all(E[:, None, :] <= E[:, :, None] + E[None, :, :] + 1e-9)


def test_node_count_mostly_non_increasing_in_gamma():
    """Monotone in gamma on almost every fixed stream, but not always: a
    larger gamma can let the agent claim a ghost that then no longer
    absorbs later waypoints. Seed 2850 is a known counterexample."""
    def counts(seed):
        stream = random_stream(seed)
        return [len(replay_compare(stream, g, TopoGraph)[0]) for g in (0.25, 0.5, 0.75, 1.0)]

    assert counts(2850) == [5, 4, 3, 4]
    bad = sum(any(b > a for a, b in zip(c, c[1:])) for c in map(counts, range(300)))
    assert bad <= 3


def test_update_deterministic():
    stream = random_stream(7)
    a, _ = replay_compare(stream, 0.5, TopoGraph)
    b, _ = replay_compare(stream, 0.5, TopoGraph)
    assert a.snapshot() == b.snapshot()
