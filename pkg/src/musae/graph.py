"""Graph and feature containers, loaders, dense oracle views and generators."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import FeatureError, IsolatedNodeError, OracleCapError, ParseError

logger = logging.getLogger(__name__)

DEFAULT_ORACLE_CAP = 10_000

_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph in CSR form.

    ``neighbors[offsets[v]:offsets[v + 1]]`` holds the sorted neighbours of
    node ``v``. ``node_ids[v]`` is the external id of dense index ``v``.
    """

    offsets: np.ndarray
    neighbors: np.ndarray
    node_ids: tuple[str, ...]
    self_loops_dropped: int = 0
    duplicates_merged: int = 0

    @property
    def node_count(self) -> int:
        return len(self.offsets) - 1

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def volume(self) -> int:
        return int(self.offsets[-1])

    @property
    def edge_count(self) -> int:
        return self.volume // 2

    def neighbors_of(self, v: int) -> np.ndarray:
        return self.neighbors[self.offsets[v]:self.offsets[v + 1]]

    def edges(self) -> np.ndarray:
        """Undirected edges as an (E, 2) array with ``u < v``, lexicographically sorted."""
        src = np.repeat(np.arange(self.node_count, dtype=np.int64), self.degrees)
        keep = src < self.neighbors
        return np.column_stack([src[keep], self.neighbors[keep].astype(np.int64)])

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors_of(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def index_of(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.node_ids)}

    def is_connected(self) -> bool:
        return connected_components(self)[0] <= 1

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: np.ndarray | Sequence[tuple[int, int]],
        node_ids: Sequence[str] | None = None,
        allow_isolated: bool = False,
    ) -> "Graph":
        """Build from an edge array; symmetrizes, drops self-loops, merges duplicates."""
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint out of range")
        loops = e[:, 0] == e[:, 1]
        n_loops = int(loops.sum())
        e = e[~loops]
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        keys = np.unique(lo * n + hi)
        n_dupes = len(e) - len(keys)
        lo, hi = keys // n, keys % n
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
        if node_ids is None:
            node_ids = [str(i) for i in range(n)]
        graph = cls(
            offsets=offsets,
            neighbors=dst.astype(np.int32),
            node_ids=tuple(str(x) for x in node_ids),
            self_loops_dropped=n_loops,
            duplicates_merged=n_dupes,
        )
        isolated = np.flatnonzero(graph.degrees == 0)
        if len(isolated) and not allow_isolated:
            names = [graph.node_ids[i] for i in isolated[:5]]
            raise IsolatedNodeError(
                f"{len(isolated)} isolated node(s), e.g. {names}; pass allow_isolated to keep them"
            )
        if n_loops:
            logger.warning("dropped %d self-loop(s)", n_loops)
        return graph


@dataclass(frozen=True)
class FeatureStore:
    """Binary node-feature incidence (the matrix F) in CSR form."""

    offsets: np.ndarray
    features: np.ndarray
    feature_count: int
    feature_ids: tuple[str, ...]
    missing_nodes: int = 0

    @property
    def node_count(self) -> int:
        return len(self.offsets) - 1

    @property
    def total_incidence(self) -> int:
        return int(self.offsets[-1])

    @property
    def counts(self) -> np.ndarray:
        """Number of features per node."""
        return np.diff(self.offsets)

    def features_of(self, v: int) -> np.ndarray:
        return self.features[self.offsets[v]:self.offsets[v + 1]]

    def dense(self) -> np.ndarray:
        F = np.zeros((self.node_count, self.feature_count))
        rows = np.repeat(np.arange(self.node_count), self.counts)
        F[rows, self.features] = 1.0
        return F

    @classmethod
    def from_lists(
        cls,
        lists: Sequence[Iterable[int]],
        feature_count: int | None = None,
        feature_ids: Sequence[str] | None = None,
    ) -> "FeatureStore":
        cleaned = [np.unique(np.asarray(list(fs), dtype=np.int64)) for fs in lists]
        top = max((int(a[-1]) for a in cleaned if len(a)), default=-1)
        if any(len(a) and a[0] < 0 for a in cleaned):
            raise FeatureError("negative feature id")
        if feature_count is None:
            feature_count = top + 1
        elif top >= feature_count:
            raise FeatureError(f"feature id {top} outside [0, {feature_count})")
        offsets = np.zeros(len(cleaned) + 1, dtype=np.int64)
        np.cumsum([len(a) for a in cleaned], out=offsets[1:])
        flat = np.concatenate(cleaned) if cleaned else np.zeros(0, dtype=np.int64)
        if feature_ids is None:
            feature_ids = [str(i) for i in range(feature_count)]
        return cls(
            offsets=offsets,
            features=flat.astype(np.int32),
            feature_count=int(feature_count),
            feature_ids=tuple(str(x) for x in feature_ids),
        )

    def to_lists(self) -> list[list[int]]:
        return [self.features_of(v).tolist() for v in range(self.node_count)]

    def without(self, feature: int) -> "FeatureStore":
        """Copy with one feature removed from every node; the id space is unchanged."""
        lists = [[f for f in fs if f != feature] for fs in self.to_lists()]
        return FeatureStore.from_lists(lists, self.feature_count, self.feature_ids)


@dataclass(frozen=True)
class DenseView:
    """Dense matrices used by the oracle: P = D^-1 A, diag(D), diag(E) and F."""

    P: np.ndarray
    D_diag: np.ndarray
    E_diag: np.ndarray
    F: np.ndarray = field(repr=False)

    @property
    def volume(self) -> float:
        return float(self.D_diag.sum())


# ---------------------------------------------------------------- loaders

def load_edge_list(source: IO[str], allow_isolated: bool = False) -> Graph:
    """Read ``id_1,id_2`` CSV or whitespace-separated pairs.

    Node ids are densely indexed in order of first appearance.
    """
    index: dict[str, int] = {}
    pairs: list[tuple[int, int]] = []
    seen_data = False
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "," in line:
            parts = [p.strip() for p in line.split(",")]
        else:
            parts = _WS.split(line)
        if not seen_data and [p.lower() for p in parts] == ["id_1", "id_2"]:
            seen_data = True
            continue
        seen_data = True
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ParseError(f"expected two node ids, got {line!r}", lineno)
        ids = []
        for p in parts:
            if p not in index:
                index[p] = len(index)
            ids.append(index[p])
        pairs.append((ids[0], ids[1]))
    names = sorted(index, key=index.__getitem__)
    return Graph.from_edges(len(names), pairs, names, allow_isolated=allow_isolated)


def write_edge_list(graph: Graph, stream: IO[str]) -> None:
    stream.write("id_1,id_2\n")
    for u, v in graph.edges():
        stream.write(f"{graph.node_ids[u]},{graph.node_ids[v]}\n")


def load_features(source: IO[str], graph: Graph) -> FeatureStore:
    """Read a JSON object mapping node id -> list of feature ids.

    Integer feature ids are used as-is (q = 1 + max id). Any non-integer id
    switches to string ids indexed by first appearance.
    """
    try:
        raw = json.load(source)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
    if not isinstance(raw, dict):
        raise ParseError("features file must hold a JSON object")
    index = graph.index_of()
    unknown = [k for k in raw if k not in index]
    if unknown:
        raise FeatureError(f"node id(s) not in graph: {unknown[:5]}")
    values = [v for vs in raw.values() for v in vs]
    integer_ids = all(isinstance(v, int) and not isinstance(v, bool) for v in values)

    lists: list[list[int]] = [[] for _ in range(graph.node_count)]
    if integer_ids:
        for key, vs in raw.items():
            if any(v < 0 for v in vs):
                raise FeatureError(f"negative feature id on node {key!r}")
            lists[index[key]] = list(vs)
        q = 1 + max(values, default=-1)
        feature_ids = None
    else:
        fmap: dict[str, int] = {}
        for key, vs in raw.items():
            row = []
            for v in vs:
                name = str(v)
                if name not in fmap:
                    fmap[name] = len(fmap)
                row.append(fmap[name])
            lists[index[key]] = row
        q = len(fmap)
        feature_ids = sorted(fmap, key=fmap.__getitem__)

    missing = graph.node_count - len(raw)
    if missing:
        logger.warning("%d node(s) have no feature entry; using empty feature sets", missing)
    store = FeatureStore.from_lists(lists, q, feature_ids)
    empty = int((store.counts == 0).sum())
    if empty > missing:
        logger.warning("%d node(s) have an empty feature list", empty - missing)
    return FeatureStore(store.offsets, store.features, store.feature_count,
                        store.feature_ids, missing_nodes=missing)


def write_features(features: FeatureStore, graph: Graph, stream: IO[str]) -> None:
    out = {graph.node_ids[v]: fs for v, fs in enumerate(features.to_lists())}
    json.dump(out, stream)


# ---------------------------------------------------------------- transforms

def ego_augment(features: FeatureStore, graph: Graph) -> FeatureStore:
    """Append one private feature per node: feature ``q + v`` on node ``v``."""
    q, n = features.feature_count, graph.node_count
    lists = [fs + [q + v] for v, fs in enumerate(features.to_lists())]
    ids = list(features.feature_ids) + [f"ego:{name}" for name in graph.node_ids]
    return FeatureStore.from_lists(lists, q + n, ids)


def identity_features(graph: Graph) -> FeatureStore:
    return ego_augment(FeatureStore.from_lists([[] for _ in range(graph.node_count)], 0), graph)


def dense_view(graph: Graph, features: FeatureStore, cap: int = DEFAULT_ORACLE_CAP) -> DenseView:
    n = graph.node_count
    if n > cap:
        raise OracleCapError(
            f"graph has {n} nodes, above the dense oracle cap of {cap}; "
            "use the sampling-based estimator (empirical_target) instead"
        )
    deg = graph.degrees.astype(np.float64)
    A = np.zeros((n, n))
    rows = np.repeat(np.arange(n), graph.degrees)
    A[rows, graph.neighbors] = 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        P = np.where(deg[:, None] > 0, A / deg[:, None], 0.0)
    F = features.dense()
    E = deg @ F
    return DenseView(P=P, D_diag=deg, E_diag=E, F=F)


def connected_components(graph: Graph) -> tuple[int, np.ndarray]:
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components as cc

    n = graph.node_count
    adj = csr_matrix((np.ones(len(graph.neighbors)), graph.neighbors, graph.offsets), shape=(n, n))
    return cc(adj, directed=False)


def is_bipartite(graph: Graph) -> bool:
    color = np.full(graph.node_count, -1, dtype=np.int8)
    for root in range(graph.node_count):
        if color[root] >= 0:
            continue
        color[root] = 0
        stack = [root]
        while stack:
            u = stack.pop()
            for w in graph.neighbors_of(u):
                if color[w] < 0:
                    color[w] = 1 - color[u]
                    stack.append(int(w))
                elif color[w] == color[u]:
                    return False
    return True


# ---------------------------------------------------------------- generators

def _repair_isolated(n: int, edges: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    deg = np.bincount(edges.ravel(), minlength=n) if len(edges) else np.zeros(n, dtype=np.int64)
    extra = []
    for v in np.flatnonzero(deg == 0):
        w = int(rng.integers(n - 1))
        extra.append((v, w + (w >= v)))
    if extra:
        edges = np.vstack([edges, np.asarray(extra, dtype=np.int64)])
    return edges


def _sample_feature_lists(n, pool, per_node, rng) -> list[np.ndarray]:
    return [np.sort(rng.choice(pool, size=per_node, replace=False)) for _ in range(n)]


def generate_erdos_renyi(
    n: int,
    edges_per_node: int,
    feature_pool: int,
    features_per_node: int,
    seed: int,
) -> tuple[Graph, FeatureStore]:
    """Random graph with about ``n * edges_per_node`` uniform edges and uniform features."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if features_per_node > feature_pool:
        raise FeatureError("features_per_node exceeds feature_pool")
    rng = np.random.default_rng(seed)
    m = n * edges_per_node
    u = rng.integers(n, size=m)
    v = rng.integers(n, size=m)
    edges = np.column_stack([u, v])
    edges = edges[u != v]
    edges = _repair_isolated(n, edges, rng)
    graph = Graph.from_edges(n, edges)
    lists = _sample_feature_lists(n, feature_pool, features_per_node, rng)
    return graph, FeatureStore.from_lists(lists, feature_pool)


def generate_sbm(
    sizes: Sequence[int],
    p_in: float,
    p_out: float,
    seed: int,
) -> tuple[Graph, np.ndarray]:
    """Stochastic block model. Returns the graph and each node's community."""
    rng = np.random.default_rng(seed)
    blocks = np.repeat(np.arange(len(sizes)), sizes)
    n = len(blocks)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(blocks[iu] == blocks[ju], p_in, p_out)
    keep = rng.random(len(iu)) < prob
    edges = np.column_stack([iu[keep], ju[keep]])
    edges = _repair_isolated(n, edges, rng)
    return Graph.from_edges(n, edges), blocks


def align_feature_universe(*stores: FeatureStore) -> list[FeatureStore]:
    """Re-index several feature stores onto the union of their feature ids."""
    if all(s.feature_ids == tuple(str(i) for i in range(s.feature_count)) for s in stores):
        q = max(s.feature_count for s in stores)
        return [FeatureStore.from_lists(s.to_lists(), q) for s in stores]
    union: dict[str, int] = {}
    for s in stores:
        for name in s.feature_ids:
            union.setdefault(name, len(union))
    ids = sorted(union, key=union.__getitem__)
    out = []
    for s in stores:
        remap = np.array([union[name] for name in s.feature_ids], dtype=np.int64)
        lists = [remap[fs].tolist() for fs in (s.features_of(v) for v in range(s.node_count))]
        out.append(FeatureStore.from_lists(lists, len(ids), ids))
    return out
