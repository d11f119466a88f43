import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import enumerate_simple_paths, reference_attention
from toponav.harness.canvas import Canvas
from toponav.planner import (
    STOP,
    FFNWeights,
    GasaWeights,
    PlanningError,
    discretize_path,
    encode_nodes,
    gasa_attention,
    gasa_forward,
    load_weights,
    plan_path,
    save_weights,
    score_nodes,
    select_goal,
    shortest_path_ids,
    teacher_goal_r2r,
    teacher_goal_rxr,
)
from toponav.topomap import NodeKind, TopoGraph

D = np.zeros(2)


def sym_dist(rng, n):
    pts = rng.uniform(0, 5, (n, 2))
    return np.linalg.norm(pts[:, None] - pts[None], axis=-1)


def test_zero_bias_is_plain_attention():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(6, 8))
    w = GasaWeights.seeded(8, seed=3, distance_weight=0.0)
    out = gasa_forward(X, sym_dist(rng, 6), w)
    assert np.max(np.abs(out - reference_attention(X, w.W_q, w.W_k, w.W_v))) < 1e-12


def test_singleton_returns_value_projection():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(1, 4))
    w = GasaWeights.seeded(4, seed=1)
    assert np.allclose(gasa_forward(X, np.zeros((1, 1)), w), X @ w.W_v)


def test_bias_vanishes_both_ways():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(5, 6))
    E = sym_dist(rng, 5)
    w = GasaWeights.seeded(6, seed=2, distance_weight=-0.7)
    w0 = GasaWeights(w.W_q, w.W_k, w.W_v, np.zeros(1))
    assert np.allclose(gasa_forward(X, np.zeros((5, 5)), w), gasa_forward(X, E, w0), atol=1e-12)


def test_distance_bias_shifts_attention_toward_near_nodes():
    X = np.zeros((3, 4))  # equal content: attention decided by E alone
    E = np.array([[0, 1, 5], [1, 0, 4], [5, 4, 0]], float)
    attn = gasa_attention(X, E, GasaWeights.seeded(4, distance_weight=-1.0))[0]
    assert attn[0, 1] > attn[0, 2]


@given(seed=st.integers(0, 10_000), heads=st.sampled_from([1, 2, 4]))
def test_rows_sum_to_one_and_permutation_equivariance(seed, heads):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 17))
    d = 4 * int(rng.integers(1, 5))
    X = rng.normal(size=(n, d))
    E = sym_dist(rng, n)
    w = GasaWeights.seeded(d, n_heads=heads, seed=seed, distance_weight=float(rng.normal()))
    assert np.allclose(gasa_attention(X, E, w).sum(axis=-1), 1.0, atol=1e-12)
    perm = rng.permutation(n)
    out = gasa_forward(X, E, w)
    out_p = gasa_forward(X[perm], E[np.ix_(perm, perm)], w)
    assert np.max(np.abs(out_p - out[perm])) < 1e-9


def test_shape_errors():
    w = GasaWeights.seeded(4)
    with pytest.raises(ValueError):
        gasa_forward(np.zeros((3, 5)), np.zeros((3, 3)), w)
    with pytest.raises(ValueError):
        gasa_forward(np.zeros((3, 4)), np.zeros((2, 2)), w)
    with pytest.raises(ValueError):
        GasaWeights(np.zeros((4, 4)), np.zeros((4, 4)), np.zeros((4, 3)), np.zeros(1))
    with pytest.raises(ValueError):
        GasaWeights(np.zeros((4, 4)), np.zeros((4, 4)), np.zeros((4, 4)), np.zeros(3))


def test_weights_round_trip(tmp_path):
    w = GasaWeights.seeded(8, n_heads=2, seed=5)
    save_weights(w, tmp_path / "w.txt")
    w2 = load_weights(tmp_path / "w.txt")
    for name in ("W_q", "W_k", "W_v", "W_e"):
        assert np.array_equal(getattr(w, name), getattr(w2, name))
    (tmp_path / "bad.txt").write_text("hello\n")
    with pytest.raises(ValueError):
        load_weights(tmp_path / "bad.txt")


def small_graph():
    g = TopoGraph()
    g.update((0.0, 0.0, 0.0), [((1.0, 0.0), np.ones(8)), ((0.0, 1.0), np.ones(8))], 1)
    g.update((-1.0, 0.0, 0.0), [], 2, panorama_descriptor=np.ones(8))
    return g


def test_encode_and_mask():
    g = small_graph()
    X, ids = encode_nodes(g, (-1.0, 0.0, 0.0))
    assert ids[0] is STOP and ids[1:] == g.node_order()
    assert X.shape == (len(g) + 1, 12)
    assert not X[0].any()
    w = GasaWeights.seeded(12)
    ffn = FFNWeights.seeded(12)
    scores = score_nodes(g, X, ids, gasa_forward(X, g.spatial_matrix(with_stop=True), w), ffn)
    for k, i in enumerate(ids):
        finite = math.isfinite(scores[k])
        assert finite == (i is STOP or g.nodes[i].kind is NodeKind.GHOST)


def test_only_current_plus_ghost_unmasked():
    g = TopoGraph()
    g.update((0.0, 0.0, 0.0), [((1.0, 0.0), np.ones(8))], 1)
    X, ids = encode_nodes(g, (0.0, 0.0, 0.0))
    scores = score_nodes(g, X, ids, X, FFNWeights.seeded(12))
    assert [math.isfinite(s) for s in scores] == [True, False, True]


def test_select_goal_rules():
    ids = [STOP, 4, 7]
    assert select_goal([0.1, 0.9, -math.inf], ids) == 4
    assert select_goal([0.1, 0.9, 0.9], ids) == 4  # tie -> smaller id
    assert select_goal([-math.inf, -math.inf, -math.inf], ids) == STOP
    picks = [select_goal([0.5, 0.5], [STOP, 2], "sample", np.random.default_rng(11)) for _ in range(5)]
    again = [select_goal([0.5, 0.5], [STOP, 2], "sample", np.random.default_rng(11)) for _ in range(5)]
    assert picks == again
    with pytest.raises(ValueError):
        select_goal([0.1], [STOP], "sample")
    with pytest.raises(ValueError):
        select_goal([0.1], [STOP], "greedy")


def test_sampling_never_picks_masked():
    rng = np.random.default_rng(0)
    ids = [STOP, 1, 2, 3, 4]
    scores = np.array([0.0, -math.inf, 2.0, -math.inf, 1.0])
    probs = np.zeros(5)
    probs[[0, 2, 4]] = np.exp([0.0, 2.0, 1.0]) / np.exp([0.0, 2.0, 1.0]).sum()
    draws = rng.choice(5, size=1_000_000, p=probs)
    assert not np.isin(draws, [1, 3]).any()
    # and the library's sampler over many seeds
    chosen = {select_goal(scores, ids, "sample", np.random.default_rng(s)) for s in range(2000)}
    assert chosen <= {STOP, 2, 4}


def chain_graph(lengths):
    """Visited nodes 0..n joined in a chain with the given edge lengths."""
    g = TopoGraph()
    for k in range(len(lengths) + 1):
        g._new_node(NodeKind.VISITED, (float(k), 0.0), D)
    for k, w in enumerate(lengths):
        g.adj[k][k + 1] = g.adj[k + 1][k] = w
    return g


def test_plan_path_examples():
    g = TopoGraph()
    g.update((0.0, 0.0, 0.0), wp_list((1.0, 0.0)), 1)
    assert plan_path(g, 0, 1) == [(1.0, 0.0)]
    g = chain_graph([1.0, 1.0])
    g.nodes[2].kind = NodeKind.GHOST
    assert plan_path(g, 0, 2) == [(1.0, 0.0), (2.0, 0.0)]
    with pytest.raises(PlanningError):
        plan_path(g, 0, 1)


def wp_list(*pts):
    return [(p, np.zeros(8)) for p in pts]


def test_shorter_route_chosen_and_matches_enumeration():
    # routes 0-1-2-5 (3.0) and 0-3-4-5 (2.9)
    g = TopoGraph()
    for k in range(6):
        g._new_node(NodeKind.VISITED, (float(k), 0.0), D)
    for a, b, w in ((0, 1, 1.0), (1, 2, 1.0), (2, 5, 1.0), (0, 3, 1.0), (3, 4, 0.9), (4, 5, 1.0)):
        g.adj[a][b] = g.adj[b][a] = w
    dist, path = shortest_path_ids(g, 0, 5)
    assert path == [0, 3, 4, 5] and dist == pytest.approx(2.9)
    best = min(enumerate_simple_paths(g.adj, 0, 5))
    assert best[1] == tuple(path)


def test_equal_routes_take_lexicographically_smallest():
    g = TopoGraph()
    for k in range(4):
        g._new_node(NodeKind.VISITED, (float(k), 0.0), D)
    for a, b in ((0, 2), (2, 3), (0, 1), (1, 3)):
        g.adj[a][b] = g.adj[b][a] = 1.0
    assert shortest_path_ids(g, 0, 3)[1] == [0, 1, 3]


@given(seed=st.integers(0, 10_000))
def test_plan_length_matches_spatial_matrix_and_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    g = TopoGraph()
    for k in range(n):
        g._new_node(NodeKind.VISITED, tuple(rng.uniform(0, 3, 2)), D)
    for k in range(1, n):
        a = int(rng.integers(0, k))
        g.adj[a][k] = g.adj[k][a] = float(rng.integers(1, 4))
    for _ in range(int(rng.integers(0, 5))):
        a, b = (int(v) for v in rng.choice(n, 2, replace=False))
        g.adj[a][b] = g.adj[b][a] = float(rng.integers(1, 4))
    src, dst = 0, n - 1
    dist, path = shortest_path_ids(g, src, dst)
    assert dist == pytest.approx(g.spatial_matrix()[src, dst])
    cands = enumerate_simple_paths(g.adj, src, dst)
    best_len = min(c[0] for c in cands)
    assert dist == pytest.approx(best_len)
    assert tuple(path) == min(c[1] for c in cands if abs(c[0] - best_len) < 1e-9)


@pytest.fixture(scope="module")
def corridor_world():
    # open 12 x 4 m hall
    return Canvas(12.0, 4.0).grid()


def teacher_graph(agent, ghosts):
    g = TopoGraph()
    g.update((*agent, 0.0), wp_list(*ghosts), 1)
    return g


def test_r2r_teacher(corridor_world):
    g = teacher_graph((9.0, 2.0), [(5.0, 2.0)])
    assert teacher_goal_r2r(g, corridor_world, (10.0, 2.0), 0.1) == STOP
    g = teacher_graph((1.0, 2.0), [(3.0, 2.0), (6.0, 2.0)])
    assert teacher_goal_r2r(g, corridor_world, (8.0, 2.0), 0.1) == 2
    g = teacher_graph((1.0, 2.0), [(3.0, 2.0)])
    assert teacher_goal_r2r(g, corridor_world, (8.0, 2.0), 0.1) == 1
    g = teacher_graph((1.0, 2.0), [])
    assert teacher_goal_r2r(g, corridor_world, (8.0, 2.0), 0.1) == STOP


def test_r2r_teacher_invariant_to_relabeling(corridor_world):
    a = teacher_graph((1.0, 2.0), [(3.0, 2.0), (6.0, 3.0)])
    b = teacher_graph((1.0, 2.0), [(6.0, 3.0), (3.0, 2.0)])
    ga = teacher_goal_r2r(a, corridor_world, (8.0, 2.0), 0.1)
    gb = teacher_goal_r2r(b, corridor_world, (8.0, 2.0), 0.1)
    assert a.nodes[ga].position == b.nodes[gb].position


def test_rxr_teacher(corridor_world):
    subgoals = [(1.0, 2.0), (4.0, 2.0), (7.0, 2.0), (10.0, 2.0)]
    g = teacher_graph((1.0, 2.0), [(3.5, 2.0), (5.0, 2.0)])
    goal, mask = teacher_goal_rxr(g, corridor_world, subgoals, [False] * 4, 0.1)
    assert mask == [True, False, False, False] and goal == 1
    g = teacher_graph((10.0, 2.0), [(8.0, 2.0)])
    goal, mask = teacher_goal_rxr(g, corridor_world, subgoals, [True, True, True, False], 0.1)
    assert goal == STOP and all(mask)


def test_rxr_prefers_geodesically_nearer_ghost():
    # the subgoal sits just right of a wall; the ghost left of the wall is
    # closer in a straight line but much farther to walk
    c = Canvas(8.0, 6.0)
    c.wall((4.0, 0.0), (4.0, 5.0), 0.2)
    w = c.grid()
    sub = (4.4, 2.0)
    g = teacher_graph((6.0, 3.0), [(3.6, 2.0), (5.3, 2.0)])
    goal, _ = teacher_goal_rxr(g, w, [(6.0, 3.0), sub, (7.0, 1.0)], [False] * 3, 0.1)
    assert g.nodes[goal].position == (5.3, 2.0)


def test_discretize_path():
    pts = discretize_path([(0.0, 0.0), (2.0, 0.0), (2.0, 0.5)], 1.0)
    assert pts == [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 0.5)]
