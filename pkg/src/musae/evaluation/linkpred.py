"""Link prediction: connectivity-preserving edge removal, edge operators, AUC."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.stats import rankdata

from ..errors import TaskPreconditionError
from ..graph import FeatureStore, Graph
from ..pipeline import embed
from .classification import mean_stderr, train_logreg

OPERATORS = ("average", "hadamard", "l1", "l2")


@dataclass(frozen=True)
class LinkSplit:
    train_graph: Graph
    positives: np.ndarray  # removed edges, (k, 2)
    negatives: np.ndarray  # sampled non-edges, (k, 2)


def _spanning_tree_mask(graph: Graph, edges: np.ndarray, rng) -> np.ndarray:
    n = graph.node_count
    # random weights make the minimum spanning tree a random spanning tree
    w = rng.uniform(1.0, 2.0, size=len(edges))
    tree = minimum_spanning_tree(coo_matrix((w, (edges[:, 0], edges[:, 1])), shape=(n, n))).tocoo()
    key = edges[:, 0] * n + edges[:, 1]
    lo = np.minimum(tree.row, tree.col).astype(np.int64)
    hi = np.maximum(tree.row, tree.col).astype(np.int64)
    return np.isin(key, lo * n + hi)


def remove_edges(graph: Graph, fraction: float = 0.5, seed=0) -> tuple[Graph, np.ndarray]:
    """Remove ``floor(fraction * |E|)`` edges without disconnecting the graph.

    A random spanning tree is protected; removed edges are drawn uniformly
    from the remaining (non-tree) edges. Returns the reduced graph and the
    removed edges.
    """
    if not graph.is_connected():
        raise TaskPreconditionError("edge removal needs a connected graph")
    rng = np.random.default_rng(seed)
    edges = graph.edges()
    k = int(np.floor(fraction * len(edges)))
    protected = _spanning_tree_mask(graph, edges, rng)
    candidates = np.flatnonzero(~protected)
    if k > 0 and len(candidates) == 0:
        raise TaskPreconditionError("graph is a tree: no edge can be removed without disconnecting it")
    if k > len(candidates):
        raise TaskPreconditionError(
            f"cannot remove {k} edges while keeping the graph connected (at most {len(candidates)})"
        )
    removed = rng.choice(candidates, size=k, replace=False)
    keep = np.ones(len(edges), dtype=bool)
    keep[removed] = False
    train = Graph.from_edges(graph.node_count, edges[keep], graph.node_ids)
    return train, edges[np.sort(removed)]


def link_split(graph: Graph, fraction: float = 0.5, seed: int = 0) -> LinkSplit:
    """Connectivity-preserving edge removal plus as many sampled non-edges.

    Negatives are uniform node pairs that are not edges of the original graph.
    """
    rng = np.random.default_rng([seed, 1])
    train, positives = remove_edges(graph, fraction, seed)
    negatives = sample_non_edges(graph, len(positives), rng)
    return LinkSplit(train, positives, negatives)


def sample_non_edges(graph: Graph, k: int, rng) -> np.ndarray:
    n = graph.node_count
    possible = n * (n - 1) // 2 - graph.edge_count
    if k > possible:
        raise TaskPreconditionError(f"only {possible} non-edges exist, {k} requested")
    edges = graph.edges()
    existing = set((edges[:, 0] * n + edges[:, 1]).tolist())
    chosen: list[int] = []
    seen: set[int] = set()
    while len(chosen) < k:
        u, v = rng.integers(n, size=2)
        if u == v:
            continue
        key = int(min(u, v) * n + max(u, v))
        if key in existing or key in seen:
            continue
        seen.add(key)
        chosen.append(key)
    arr = np.asarray(chosen, dtype=np.int64)
    return np.column_stack([arr // n, arr % n]) if k else np.zeros((0, 2), dtype=np.int64)


def edge_features(u, v, op: str) -> np.ndarray:
    """Edge representation from two node vectors (or two stacks of them)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    if op == "average":
        return (u + v) / 2.0
    if op == "hadamard":
        return u * v
    if op == "l1":
        return np.abs(u - v)
    if op == "l2":
        return (u - v) ** 2
    raise ValueError(f"unknown operator {op!r}; expected one of {OPERATORS}")


def auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied scores get half credit."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc needs both positive and negative labels")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def operator_aucs(G: np.ndarray, split: LinkSplit, seed: int, lam: float = 0.01,
                  train_fraction: float = 0.8) -> dict[str, float]:
    """Test AUC of a logistic classifier on each edge operator."""
    pairs = np.vstack([split.positives, split.negatives])
    labels = np.r_[np.ones(len(split.positives), dtype=int), np.zeros(len(split.negatives), dtype=int)]
    rng = np.random.default_rng(seed)
    idx = rng.permutation(len(pairs))
    cut = int(round(train_fraction * len(pairs)))
    tr, te = idx[:cut], idx[cut:]
    out = {}
    for op in OPERATORS:
        X = edge_features(G[pairs[:, 0]], G[pairs[:, 1]], op)
        model = train_logreg(X[tr], labels[tr], lam)
        col = list(model.classes_).index(1)
        out[op] = auc(model.predict_proba(X[te])[:, col], labels[te])
    return out


def linkpred_eval(graph: Graph, features: FeatureStore, config, seeds, fraction: float = 0.5,
                  lam: float = 0.01) -> dict:
    """Full protocol: split, embed the reduced graph, score every operator."""
    per_seed = []
    for seed in seeds:
        split = link_split(graph, fraction, seed)
        run = embed(split.train_graph, features, replace(config, seed=seed))
        per_seed.append(operator_aucs(run.embeddings.G, split, seed, lam))
    summary = {}
    for op in OPERATORS:
        mean, se = mean_stderr([s[op] for s in per_seed])
        summary[op] = {"mean": mean, "stderr": se}
    best = max(OPERATORS, key=lambda op: summary[op]["mean"])
    return {"per_seed": per_seed, "summary": summary, "best": best}
