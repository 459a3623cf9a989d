"""First-order random walks.

Walk ``i`` of a run with seed ``s`` draws from its own stream
``derive_state(s, i)``, so the walk set is fixed by (graph, regime, seed)
no matter how many threads generate it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO

import numpy as np
from numba import njit

from ._random import derive_state, next_below
from .graph import Graph


@dataclass(frozen=True)
class WalkRegime:
    """How walk start nodes are chosen.

    ``per-node``: ``count`` walks from every node, in node index order.
    ``sampled``: ``count`` start nodes drawn with probability deg(v) / c.
    """

    kind: str
    count: int

    def __post_init__(self):
        if self.kind not in ("per-node", "sampled"):
            raise ValueError(f"unknown walk regime {self.kind!r}")
        if self.count < 0:
            raise ValueError("walk count must be non-negative")

    @classmethod
    def per_node(cls, p: int) -> "WalkRegime":
        return cls("per-node", p)

    @classmethod
    def sampled(cls, s: int) -> "WalkRegime":
        return cls("sampled", s)


@dataclass(frozen=True)
class WalkSet:
    walks: np.ndarray  # (num_walks, walk_length) int32
    walk_length: int
    regime: WalkRegime
    seed: int

    def __len__(self) -> int:
        return self.walks.shape[0]

    def dump(self, stream: IO[str]) -> None:
        for w in self.walks:
            stream.write(" ".join(map(str, w.tolist())))
            stream.write("\n")


@njit(nogil=True, cache=True)
def _slot_owner(offsets, slot):
    # node whose CSR range contains ``slot``
    return np.searchsorted(offsets, slot, side="right") - 1


@njit(nogil=True, cache=True)
def _walk_into(out, offsets, neighbors, start, state):
    node = start
    out[0] = node
    for j in range(1, out.shape[0]):
        lo = offsets[node]
        deg = offsets[node + 1] - lo
        state, k = next_below(state, deg)
        node = neighbors[lo + k]
        out[j] = node
    return state


@njit(nogil=True, cache=True)
def _walk_block(out, offsets, neighbors, starts, sampled, seed, first, last):
    volume = offsets[offsets.shape[0] - 1]
    for i in range(first, last):
        state = derive_state(seed, i)
        if sampled:
            state, slot = next_below(state, volume)
            start = _slot_owner(offsets, slot)
        else:
            start = starts[i]
        _walk_into(out[i], offsets, neighbors, start, state)


@njit(nogil=True, cache=True)
def _start_block(out, offsets, seed, n):
    volume = offsets[offsets.shape[0] - 1]
    for i in range(n):
        state = derive_state(seed, i)
        state, slot = next_below(state, volume)
        out[i] = _slot_owner(offsets, slot)


def _seed64(seed: int) -> np.uint64:
    return np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)


def sample_start_nodes(graph: Graph, s: int, rng_seed: int) -> np.ndarray:
    """``s`` i.i.d. start nodes with Prob(v) = deg(v) / c.

    Draw ``i`` uses the same stream as walk ``i`` of the sampled regime.
    """
    out = np.empty(s, dtype=np.int64)
    if s:
        _start_block(out, graph.offsets, _seed64(rng_seed), s)
    return out


def random_walk(graph: Graph, start: int, length: int, rng_seed: int, ordinal: int = 0) -> np.ndarray:
    """Single walk of exactly ``length`` nodes beginning at ``start``.

    With ``ordinal=i`` this reproduces walk ``i`` of a per-node
    :func:`generate_walks` run under the same seed.
    """
    if length < 1:
        raise ValueError("walk length must be >= 1")
    if not 0 <= start < graph.node_count:
        raise ValueError(f"start node {start} out of range")
    if graph.degrees[start] == 0 and length > 1:
        raise ValueError(f"node {start} is isolated")
    out = np.empty(length, dtype=np.int32)
    state = np.uint64(derive_state(_seed64(rng_seed), np.uint64(ordinal)))
    _walk_into(out, graph.offsets, graph.neighbors, start, state)
    return out


def generate_walks(
    graph: Graph,
    regime: WalkRegime,
    walk_length: int,
    seed: int,
    threads: int = 1,
) -> WalkSet:
    if walk_length < 1:
        raise ValueError("walk length must be >= 1")
    if regime.kind == "per-node":
        # isolated nodes (allowed only on request) cannot start a walk
        sources = np.flatnonzero(graph.degrees > 0)
        starts = np.repeat(sources, regime.count).astype(np.int64)
        total = len(starts)
    else:
        starts = np.zeros(0, dtype=np.int64)
        total = regime.count
    out = np.empty((total, walk_length), dtype=np.int32)
    args = (graph.offsets, graph.neighbors, starts, regime.kind == "sampled", _seed64(seed))
    if threads <= 1 or total < 2 * threads:
        _walk_block(out, *args, 0, total)
    else:
        bounds = np.linspace(0, total, threads + 1).astype(np.int64)
        with ThreadPoolExecutor(threads) as pool:
            jobs = [pool.submit(_walk_block, out, *args, int(a), int(b))
                    for a, b in zip(bounds[:-1], bounds[1:])]
            for job in jobs:
                job.result()
    return WalkSet(out, walk_length, regime, seed)

