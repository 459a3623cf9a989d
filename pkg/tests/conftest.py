import io

import numpy as np
import pytest

from musae.graph import FeatureStore, Graph, identity_features, is_bipartite, load_edge_list


def make_graph(n, edges):
    return Graph.from_edges(n, np.asarray(edges, dtype=np.int64).reshape(-1, 2))


def parse(text, **kw):
    return load_edge_list(io.StringIO(text), **kw)


@pytest.fixture
def p2():
    return make_graph(2, [(0, 1)])


@pytest.fixture
def k3():
    return make_graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def star3():
    return make_graph(4, [(0, 1), (0, 2), (0, 3)])


@pytest.fixture
def k3_identity(k3):
    return k3, identity_features(k3)


def random_connected(rng, n, p, non_bipartite=True):
    """Rejection-sample a connected (and by default non-bipartite) G(n, p)."""
    iu, ju = np.triu_indices(n, 1)
    while True:
        keep = rng.random(len(iu)) < p
        g = Graph.from_edges(n, np.column_stack([iu[keep], ju[keep]]), allow_isolated=True)
        if (g.degrees > 0).all() and g.is_connected() and not (non_bipartite and is_bipartite(g)):
            return g


def factorization_fixture(seed=0):
    """8 nodes, 6 features, two features per node, connected and aperiodic."""
    rng = np.random.default_rng(seed)
    g = random_connected(rng, 8, 0.4)
    lists = [rng.choice(6, 2, replace=False) for _ in range(8)]
    return g, FeatureStore.from_lists(lists, 6)


def adjacency_of(graph):
    return [graph.neighbors_of(v).tolist() for v in range(graph.node_count)]
