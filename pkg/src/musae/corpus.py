"""Node-feature training pairs built from walks.

For every walk, every source position ``j < l - t`` and every offset
``r = 1..t``, two groups of pairs are emitted:

* forward: ``(v_j, f)`` for each feature ``f`` of ``v_{j+r}``
* backward: ``(v_{j+r}, f)`` for each feature ``f`` of ``v_j``

The pooled corpus keeps all of them together. The multi-scale corpus routes
them to sub-corpus ``r``. Within a sub-corpus the direction of every pair is
kept as a flag so the directional halves can be inspected separately.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO

import numpy as np
from numba import njit
from scipy import sparse

from .errors import ConfigError
from .graph import FeatureStore
from .walker import WalkSet

POOLED = "pooled"
MULTISCALE = "multiscale"


@dataclass(frozen=True)
class ScaledCorpus:
    """Pair arrays per scale.

    Pooled corpora have a single entry in ``nodes``/``features``/``forward``;
    multi-scale corpora have ``window`` entries, index ``r - 1`` holding D_r.
    """

    mode: str
    window: int
    nodes: tuple[np.ndarray, ...]
    features: tuple[np.ndarray, ...]
    forward: tuple[np.ndarray, ...]
    node_count: int
    feature_count: int
    source_positions: int
    skipped_slots: int

    @property
    def num_scales(self) -> int:
        return len(self.nodes)

    def scale_index(self, scale: int | None) -> int:
        if self.mode == POOLED:
            if scale not in (None, 0):
                raise ValueError("pooled corpus has no per-scale parts")
            return 0
        if scale is None or not 1 <= scale <= self.window:
            raise ValueError(f"scale must be in 1..{self.window}")
        return scale - 1

    def pairs(self, scale: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        i = self.scale_index(scale)
        return self.nodes[i], self.features[i]

    def size(self, scale: int | None = None) -> int:
        return len(self.nodes[self.scale_index(scale)])

    def dump(self, stream: IO[str], scale: int | None = None) -> None:
        nodes, feats = self.pairs(scale)
        for v, f in zip(nodes.tolist(), feats.tolist()):
            stream.write(f"{v} {f}\n")


@dataclass(frozen=True)
class CountTable:
    joint: sparse.csr_matrix  # n x q, #(v, f)
    node_counts: np.ndarray   # #(v)
    feature_counts: np.ndarray  # #(f)
    total: int                # |D|


@njit(nogil=True, cache=True)
def _count_walk(walk, t, fcount):
    total = 0
    skipped = 0
    for j in range(walk.shape[0] - t):
        a = fcount[walk[j]]
        for r in range(1, t + 1):
            b = fcount[walk[j + r]]
            total += a + b
            skipped += (a == 0) + (b == 0)
    return total, skipped


@njit(nogil=True, cache=True)
def _count_block(walks, t, fcount, out_counts, out_skipped, first, last):
    for w in range(first, last):
        out_counts[w], out_skipped[w] = _count_walk(walks[w], t, fcount)


@njit(nogil=True, cache=True)
def _fill_block(walks, t, foff, fids, starts, nodes, feats, scales, fwd, first, last):
    for w in range(first, last):
        walk = walks[w]
        k = starts[w]
        for j in range(walk.shape[0] - t):
            src = walk[j]
            for r in range(1, t + 1):
                tgt = walk[j + r]
                for i in range(foff[tgt], foff[tgt + 1]):
                    nodes[k] = src
                    feats[k] = fids[i]
                    scales[k] = r
                    fwd[k] = True
                    k += 1
                for i in range(foff[src], foff[src + 1]):
                    nodes[k] = tgt
                    feats[k] = fids[i]
                    scales[k] = r
                    fwd[k] = False
                    k += 1


def _run_blocks(fn, total, threads, *args):
    if threads <= 1 or total < 2 * threads:
        fn(*args, 0, total)
        return
    bounds = np.linspace(0, total, threads + 1).astype(np.int64)
    with ThreadPoolExecutor(threads) as pool:
        for job in [pool.submit(fn, *args, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]:
            job.result()


def _generate(walks: WalkSet, features: FeatureStore, t: int, threads: int):
    if t < 1:
        raise ConfigError("window must be >= 1")
    if t >= walks.walk_length:
        raise ConfigError(f"window {t} must be smaller than walk length {walks.walk_length}")
    W = walks.walks
    fcount = features.counts.astype(np.int64)
    per_walk = np.zeros(len(W), dtype=np.int64)
    skipped = np.zeros(len(W), dtype=np.int64)
    _run_blocks(_count_block, len(W), threads, W, t, fcount, per_walk, skipped)
    starts = np.zeros(len(W) + 1, dtype=np.int64)
    np.cumsum(per_walk, out=starts[1:])
    size = int(starts[-1])
    nodes = np.empty(size, dtype=np.int32)
    feats = np.empty(size, dtype=np.int32)
    scales = np.empty(size, dtype=np.int8)
    fwd = np.empty(size, dtype=np.bool_)
    _run_blocks(_fill_block, len(W), threads, W, t, features.offsets, features.features,
                starts, nodes, feats, scales, fwd)
    positions = len(W) * (walks.walk_length - t)
    return nodes, feats, scales, fwd, positions, int(skipped.sum())


def build_pooled(walks: WalkSet, features: FeatureStore, t: int, threads: int = 1) -> ScaledCorpus:
    nodes, feats, _, fwd, positions, skipped = _generate(walks, features, t, threads)
    n = int(walks.walks.max()) + 1 if walks.walks.size else 0
    return ScaledCorpus(
        mode=POOLED, window=t, nodes=(nodes,), features=(feats,), forward=(fwd,),
        node_count=max(n, features.node_count), feature_count=features.feature_count,
        source_positions=positions, skipped_slots=skipped,
    )


def build_multiscale(walks: WalkSet, features: FeatureStore, t: int, threads: int = 1) -> ScaledCorpus:
    nodes, feats, scales, fwd, positions, skipped = _generate(walks, features, t, threads)
    order = np.argsort(scales, kind="stable")
    cuts = np.searchsorted(scales[order], np.arange(1, t + 2))
    parts = [order[cuts[r]:cuts[r + 1]] for r in range(t)]
    n = int(walks.walks.max()) + 1 if walks.walks.size else 0
    return ScaledCorpus(
        mode=MULTISCALE, window=t,
        nodes=tuple(nodes[p] for p in parts),
        features=tuple(feats[p] for p in parts),
        forward=tuple(fwd[p] for p in parts),
        node_count=max(n, features.node_count), feature_count=features.feature_count,
        source_positions=positions, skipped_slots=skipped,
    )


def _table(nodes, feats, n, q) -> CountTable:
    joint = sparse.coo_matrix(
        (np.ones(len(nodes), dtype=np.int64), (nodes, feats)), shape=(n, q)
    ).tocsr()
    joint.sum_duplicates()
    return CountTable(
        joint=joint,
        node_counts=np.bincount(nodes, minlength=n).astype(np.int64),
        feature_counts=np.bincount(feats, minlength=q).astype(np.int64),
        total=len(nodes),
    )


def corpus_stats(corpus: ScaledCorpus, direction: str | None = None) -> list[CountTable]:
    """Exact count tables, one per scale (a single table for pooled corpora).

    ``direction`` restricts counting to the ``"forward"`` or ``"backward"``
    half of each (sub-)corpus.
    """
    tables = []
    for nodes, feats, fwd in zip(corpus.nodes, corpus.features, corpus.forward):
        if direction == "forward":
            nodes, feats = nodes[fwd], feats[fwd]
        elif direction == "backward":
            nodes, feats = nodes[~fwd], feats[~fwd]
        elif direction is not None:
            raise ValueError(f"unknown direction {direction!r}")
        tables.append(_table(nodes, feats, corpus.node_count, corpus.feature_count))
    return tables
