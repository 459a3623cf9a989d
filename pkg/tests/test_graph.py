import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_graph, parse
from musae.errors import FeatureError, IsolatedNodeError, OracleCapError, ParseError
from musae.graph import (
    FeatureStore,
    Graph,
    align_feature_universe,
    dense_view,
    ego_augment,
    generate_erdos_renyi,
    generate_sbm,
    identity_features,
    is_bipartite,
    load_features,
    write_edge_list,
    write_features,
)


def features_from(graph, obj):
    return load_features(io.StringIO(json.dumps(obj)), graph)


# ---------------------------------------------------------------- edge lists

def test_path_graph_volume():
    g = parse("0,1\n1,2")
    assert g.node_count == 3
    assert g.edges().tolist() == [[0, 1], [1, 2]]
    assert g.volume == 4


def test_self_loop_and_duplicate_rules(caplog):
    g = parse("0,1\n1,0\n0,0")
    assert "self-loop" in caplog.text
    assert g.node_count == 2
    assert g.edges().tolist() == [[0, 1]]
    assert g.volume == 2
    assert g.self_loops_dropped == 1
    assert g.duplicates_merged == 1


def test_first_appearance_indexing():
    g = parse("a,b\nb,c")
    assert g.node_count == 3
    assert g.node_ids == ("a", "b", "c")
    assert g.index_of() == {"a": 0, "b": 1, "c": 2}


def test_header_comments_and_whitespace():
    g = parse("id_1,id_2\n# comment\n3 4\n\n4\t5\n")
    assert g.node_ids == ("3", "4", "5")
    assert g.edge_count == 2


def test_malformed_line_reports_line_number():
    with pytest.raises(ParseError, match="line 3"):
        parse("0,1\n1,2\n1,2,3\n")


def test_isolated_node_rejected_unless_allowed():
    with pytest.raises(IsolatedNodeError):
        Graph.from_edges(3, np.array([[0, 1]]))
    g = Graph.from_edges(3, np.array([[0, 1]]), allow_isolated=True)
    assert g.degrees.tolist() == [1, 1, 0]


def test_self_loop_only_node_is_isolated():
    with pytest.raises(IsolatedNodeError):
        parse("0,1\n2,2")


edge_lists = st.integers(2, 9).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), min_size=1, max_size=30),
    )
)


@settings(max_examples=200, deadline=None)
@given(edge_lists)
def test_adjacency_invariants(case):
    n, edges = case
    g = Graph.from_edges(n, np.array(edges), allow_isolated=True)
    adj = {v: set(g.neighbors_of(v).tolist()) for v in range(n)}
    for v in range(n):
        assert v not in adj[v]
        nb = g.neighbors_of(v)
        assert np.all(np.diff(nb) > 0)  # sorted, no duplicates
        for w in adj[v]:
            assert v in adj[w]
    assert g.degrees.sum() == g.volume == 2 * g.edge_count
    expected = {(min(u, v), max(u, v)) for u, v in edges if u != v}
    assert {tuple(e) for e in g.edges().tolist()} == expected


@settings(max_examples=100, deadline=None)
@given(edge_lists)
def test_edge_list_round_trip(case):
    n, edges = case
    edges = [(u, v) for u, v in edges if u != v]
    if not edges:
        return
    used = sorted({x for e in edges for x in e})
    remap = {v: i for i, v in enumerate(used)}
    g = Graph.from_edges(len(used), np.array([(remap[u], remap[v]) for u, v in edges]))
    buf = io.StringIO()
    write_edge_list(g, buf)
    back = parse(buf.getvalue())
    assert back.node_count == g.node_count
    for v in range(g.node_count):
        mine = {g.node_ids[w] for w in g.neighbors_of(v)}
        theirs = {back.node_ids[w] for w in back.neighbors_of(back.index_of()[g.node_ids[v]])}
        assert mine == theirs


# ---------------------------------------------------------------- features

def test_features_sorted_and_deduplicated(p2):
    fs = features_from(p2, {"0": [2, 1, 2], "1": [1]})
    assert fs.features_of(0).tolist() == [1, 2]
    assert fs.features_of(1).tolist() == [1]
    assert fs.feature_count == 3
    assert fs.total_incidence == 3


def test_empty_feature_list_is_allowed(p2):
    fs = features_from(p2, {"0": [], "1": [0]})
    assert fs.features_of(0).tolist() == []
    assert fs.total_incidence == 1


def test_missing_node_warns(p2, caplog):
    fs = features_from(p2, {"0": [0]})
    assert "missing" in caplog.text or "no feature" in caplog.text
    assert fs.features_of(1).tolist() == []
    assert fs.missing_nodes == 1


def test_single_node_graph_cannot_exist():
    # the feature file is never read: the graph itself is rejected first
    with pytest.raises(IsolatedNodeError):
        Graph.from_edges(1, np.zeros((0, 2), dtype=int))


def test_unknown_node_and_negative_id_rejected(p2):
    with pytest.raises(FeatureError):
        features_from(p2, {"7": [0]})
    with pytest.raises(FeatureError):
        features_from(p2, {"0": [-1], "1": [0]})


def test_string_feature_ids(p2):
    fs = features_from(p2, {"0": ["red", "blue"], "1": ["blue"]})
    assert fs.feature_count == 2
    assert fs.feature_ids == ("red", "blue")
    assert fs.features_of(0).tolist() == [0, 1]


def test_feature_store_invariants():
    fs = FeatureStore.from_lists([[3, 0, 3], [], [1]], 4)
    assert fs.total_incidence == sum(len(x) for x in fs.to_lists()) == 3
    assert all(0 <= f < fs.feature_count for f in fs.features)


def test_feature_round_trip(k3):
    fs = FeatureStore.from_lists([[0, 2], [1], []], 3)
    buf = io.StringIO()
    write_features(fs, k3, buf)
    back = features_from(k3, json.loads(buf.getvalue()))
    assert back.to_lists() == fs.to_lists()


# ---------------------------------------------------------------- ego features

def test_ego_augment_small(p2):
    fs = FeatureStore.from_lists([[1], []], 3)
    ego = ego_augment(fs, p2)
    assert ego.feature_count == 5
    assert ego.features_of(0).tolist() == [1, 3]
    assert 4 in ego.features_of(1).tolist()


def test_ego_on_empty_features_is_identity(k3):
    empty = FeatureStore.from_lists([[], [], []], 0)
    ego = ego_augment(empty, k3)
    assert ego.feature_count == 3
    assert np.array_equal(ego.dense(), np.eye(3))


def test_ego_augment_twice_is_not_idempotent(k3):
    fs = FeatureStore.from_lists([[0], [1], [0, 1]], 2)
    twice = ego_augment(ego_augment(fs, k3), k3)
    assert twice.feature_count == 2 + 2 * 3
    for v in range(3):
        extra = [f for f in twice.features_of(v) if f >= 2]
        assert len(extra) == 2


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 7), st.integers(0, 5), st.data())
def test_ego_preserves_incidences(n, q, data):
    g = make_graph(n, [(i, i + 1) for i in range(n - 1)])
    lists = [data.draw(st.lists(st.integers(0, q - 1), max_size=q)) if q else [] for _ in range(n)]
    fs = FeatureStore.from_lists(lists, q)
    ego = ego_augment(fs, g)
    D = ego.dense()
    assert np.array_equal(D[:, :q], fs.dense())
    assert np.array_equal(D[:, q:], np.eye(n))
    assert ego.total_incidence == fs.total_incidence + n


# ---------------------------------------------------------------- dense views

def test_dense_view_p2(p2):
    v = dense_view(p2, identity_features(p2))
    assert np.array_equal(v.P, [[0, 1], [1, 0]])
    assert v.E_diag.tolist() == [1, 1]


def test_dense_view_k3(k3):
    v = dense_view(k3, identity_features(k3))
    assert np.allclose(np.diag(v.P), 0)
    assert np.allclose(v.P + np.eye(3) * 0.5, 0.5)
    assert v.E_diag.tolist() == [2, 2, 2]


def test_dense_view_star_shared_feature(star3):
    fs = FeatureStore.from_lists([[0]] * 4, 1)
    v = dense_view(star3, fs)
    assert v.E_diag.tolist() == [6]  # 3 + 1 + 1 + 1
    assert v.E_diag[0] == v.volume


def test_identity_features_give_degree_mass(k3):
    v = dense_view(k3, identity_features(k3))
    assert np.array_equal(v.E_diag, v.D_diag)


@settings(max_examples=100, deadline=None)
@given(edge_lists)
def test_transition_matrix_rows(case):
    n, edges = case
    g = Graph.from_edges(n, np.array(edges), allow_isolated=True)
    if (g.degrees == 0).any():
        return
    P = dense_view(g, identity_features(g)).P
    assert np.all(P >= 0)
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12, rtol=0)


def test_dense_view_cap(k3):
    with pytest.raises(OracleCapError, match="empirical_target"):
        dense_view(k3, identity_features(k3), cap=2)


# ---------------------------------------------------------------- generators

def test_erdos_renyi_mean_degree():
    g, fs = generate_erdos_renyi(2 ** 11, 8, 2 ** 11, 2 ** 4, seed=7)
    assert 14 <= g.degrees.mean() <= 18
    assert all(len(fs.features_of(v)) == 16 for v in range(g.node_count))


def test_erdos_renyi_repairs_isolated_nodes():
    for seed in range(20):
        g, _ = generate_erdos_renyi(4, 1, 4, 1, seed=seed)
        assert (g.degrees >= 1).all()


def test_erdos_renyi_deterministic():
    a, fa = generate_erdos_renyi(200, 3, 50, 4, seed=11)
    b, fb = generate_erdos_renyi(200, 3, 50, 4, seed=11)
    assert np.array_equal(a.edges(), b.edges())
    assert fa.to_lists() == fb.to_lists()


def test_erdos_renyi_rejects_oversized_feature_draw():
    with pytest.raises(ValueError):
        generate_erdos_renyi(10, 2, 3, 4, seed=0)


def test_sbm_blocks_are_denser_inside():
    g, blocks = generate_sbm([100, 100], 0.1, 0.005, seed=3)
    e = g.edges()
    inside = (blocks[e[:, 0]] == blocks[e[:, 1]]).mean()
    assert inside > 0.8


def test_bipartite_detection(k3):
    assert not is_bipartite(k3)
    assert is_bipartite(make_graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)]))


def test_align_feature_universe_maps_by_id(p2):
    a = FeatureStore.from_lists([[0], [1]], feature_ids=("x", "y"))
    b = FeatureStore.from_lists([[0], [1]], feature_ids=("y", "z"))
    a2, b2 = align_feature_universe(a, b)
    assert a2.feature_ids == b2.feature_ids
    ids = a2.feature_ids
    assert ids[a2.features_of(1)[0]] == "y" and ids[b2.features_of(0)[0]] == "y"
