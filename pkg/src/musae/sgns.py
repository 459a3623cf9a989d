"""Skip-gram with negative sampling over node-feature pairs.

Nodes play the role of words and features the role of contexts: each
positive pair ``(v, f)`` pulls ``g_v`` and ``h_f`` together and ``b``
negative features drawn from the (sub-)corpus feature distribution are
pushed away from ``g_v``.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import IO, Sequence

import numpy as np
from numba import njit

from ._random import derive_state, next_float
from .corpus import MULTISCALE, POOLED, ScaledCorpus
from .errors import ConfigError

AE = "ae"
MUSAE = "musae"

MAX_EXP = 6.0


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters; ``dim=None`` resolves to 128 (AE) or 126 (MUSAE, window 3)."""

    dim: int | None = None
    walk_length: int = 80
    walks_per_node: int = 10
    epochs: int = 5
    window: int = 3
    negatives: int = 5
    lr_max: float = 0.05
    lr_min: float = 0.025
    mode: str = MUSAE
    ego: bool = False
    neg_exponent: float = 0.75
    seed: int = 42
    threads: int = 1

    def __post_init__(self):
        if self.mode not in (AE, MUSAE):
            raise ConfigError(f"mode must be 'ae' or 'musae', got {self.mode!r}")
        if self.dim is None:
            d = 128 if self.mode == AE else 128 - 128 % self.window
            object.__setattr__(self, "dim", d)
        if self.dim < 1 or self.window < 1 or self.walk_length < 2:
            raise ConfigError("dim, window must be >= 1 and walk length >= 2")
        if self.window >= self.walk_length:
            raise ConfigError("window must be smaller than the walk length")
        if self.mode == MUSAE and self.dim % self.window:
            raise ConfigError(
                f"musae needs the window ({self.window}) to divide the dimension ({self.dim})"
            )
        if not 0 < self.lr_min <= self.lr_max:
            raise ConfigError("need 0 < lr_min <= lr_max")
        if self.negatives < 1 or self.epochs < 1 or self.walks_per_node < 0:
            raise ConfigError("negatives and epochs must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    @property
    def scale_width(self) -> int:
        return self.dim // self.window if self.mode == MUSAE else self.dim

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EmbeddingSet:
    G: np.ndarray
    H: np.ndarray
    scale_blocks: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.scale_blocks:
            self.scale_blocks = [(0, self.G.shape[1])]

    @property
    def dim(self) -> int:
        return self.G.shape[1]

    def block(self, scale: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """(G, H) columns of one scale; ``None`` gives the full matrices."""
        if scale is None:
            return self.G, self.H
        lo, hi = self.scale_blocks[scale - 1]
        return self.G[:, lo:hi], self.H[:, lo:hi]


class NegativeSampler:
    """Feature distribution proportional to ``count ** exponent``."""

    def __init__(self, counts: np.ndarray, exponent: float = 0.75):
        counts = np.asarray(counts, dtype=np.float64)
        weights = np.where(counts > 0, counts ** exponent, 0.0)
        total = weights.sum()
        if total <= 0:
            raise ValueError("negative sampler needs at least one observed feature")
        self.probs = weights / total
        cdf = np.cumsum(self.probs)
        cdf[-1] = 1.0
        self.cdf = cdf

    @classmethod
    def from_pairs(cls, features: np.ndarray, feature_count: int, exponent: float = 0.75):
        return cls(np.bincount(features, minlength=feature_count), exponent)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return np.searchsorted(self.cdf, rng.random(size), side="right")


def init_embeddings(n: int, q: int, d: int, seed: int) -> EmbeddingSet:
    """Uniform entries in [-0.5/d, 0.5/d]."""
    if min(n, q, d) < 1:
        raise ValueError("n, q and d must be positive")
    rng = np.random.default_rng(seed)
    bound = 0.5 / d
    G = rng.uniform(-bound, bound, size=(n, d))
    H = rng.uniform(-bound, bound, size=(q, d))
    return EmbeddingSet(G, H)


def lr_at(progress: float, config: TrainConfig) -> float:
    if not 0.0 <= progress <= 1.0:
        raise ValueError("progress must lie in [0, 1]")
    return config.lr_max + progress * (config.lr_min - config.lr_max)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def saturated_sigmoid(x):
    """Exact sigmoid on [-6, 6]; exactly 0 below and 1 above.

    Saturating (rather than clipping the argument) makes the gradient
    vanish for pairs that are already far apart, so feature pairs that
    never co-occur do not keep pushing embedding norms upward.
    """
    x = np.asarray(x, dtype=np.float64)
    out = sigmoid(np.clip(x, -MAX_EXP, MAX_EXP))
    return np.where(x > MAX_EXP, 1.0, np.where(x < -MAX_EXP, 0.0, out))


def sgd_pair_update(g, h_pos, h_negs, lr):
    """One SGNS step for a positive pair and its negative rows.

    Plain numpy reference for the compiled kernel. All gradients are
    evaluated at the incoming parameter values. Returns new
    ``(g, h_pos, h_negs)``.
    """
    g = np.asarray(g, dtype=np.float64)
    h_pos = np.asarray(h_pos, dtype=np.float64)
    h_negs = np.asarray(h_negs, dtype=np.float64).reshape(-1, g.shape[0])
    coef = lr * (1.0 - saturated_sigmoid(g @ h_pos))
    neg_coef = -lr * saturated_sigmoid(h_negs @ g)
    new_g = g + coef * h_pos + neg_coef @ h_negs
    new_pos = h_pos + coef * g
    new_negs = h_negs + neg_coef[:, None] * g[None, :]
    return new_g, new_pos, new_negs


def sgns_objective(G, H, nodes, feats, sampler: NegativeSampler, negatives: int) -> float:
    """Mean SGNS objective over pairs, with the negative term in expectation."""
    dots = np.einsum("ij,ij->i", G[nodes], H[feats])
    pos = np.log(sigmoid(np.clip(dots, -MAX_EXP, MAX_EXP)))
    all_dots = np.clip(G[nodes] @ H.T, -MAX_EXP, MAX_EXP)
    neg = negatives * (np.log(sigmoid(-all_dots)) @ sampler.probs)
    return float(np.mean(pos + neg))


@njit(nogil=True, cache=True)
def _sgns_chunk(G, H, nodes, feats, order, first, last, cdf, negatives,
                lr_max, lr_min, done, total, stride, seed, stream, freeze_h):
    state = derive_state(seed, stream)
    dim = G.shape[1]
    grad = np.empty(dim)
    for k in range(first, last):
        idx = order[k]
        v = nodes[idx]
        progress = (done + (k - first) * stride) / total
        if progress > 1.0:
            progress = 1.0
        lr = lr_max + progress * (lr_min - lr_max)
        for i in range(dim):
            grad[i] = 0.0
        for s in range(negatives + 1):
            if s == 0:
                target = feats[idx]
                label = 1.0
            else:
                state, u = next_float(state)
                target = np.searchsorted(cdf, u, side="right")
                label = 0.0
            dot = 0.0
            for i in range(dim):
                dot += G[v, i] * H[target, i]
            if dot > MAX_EXP:
                coef = lr * (label - 1.0)
            elif dot < -MAX_EXP:
                coef = lr * label
            else:
                coef = lr * (label - 1.0 / (1.0 + math.exp(-dot)))
            for i in range(dim):
                grad[i] += coef * H[target, i]
            if not freeze_h:
                for i in range(dim):
                    H[target, i] += coef * G[v, i]
        for i in range(dim):
            G[v, i] += grad[i]
    return state


def _train_block(G, H, nodes, feats, feature_count, config: TrainConfig, seed: int,
                 freeze_h: bool, chunks: int, pool: ThreadPoolExecutor | None):
    """Run all epochs of one SGNS problem in place on (G, H)."""
    N = len(nodes)
    if N == 0:
        return
    sampler = NegativeSampler.from_pairs(feats, feature_count, config.neg_exponent)
    total = float(config.epochs * N)
    shuffler = np.random.default_rng(seed)
    nodes = np.ascontiguousarray(nodes, dtype=np.int32)
    feats = np.ascontiguousarray(feats, dtype=np.int32)
    for epoch in range(config.epochs):
        order = shuffler.permutation(N).astype(np.int64)
        done = float(epoch * N)
        if chunks <= 1 or pool is None:
            _sgns_chunk(G, H, nodes, feats, order, 0, N, sampler.cdf, config.negatives,
                        config.lr_max, config.lr_min, done, total, 1.0,
                        np.uint64(seed), np.uint64(epoch), freeze_h)
            continue
        # Hogwild: chunks update the shared matrices without locks
        bounds = np.linspace(0, N, chunks + 1).astype(np.int64)
        jobs = []
        for c in range(chunks):
            stream = np.uint64(1_000_003 + epoch * chunks + c)
            jobs.append(pool.submit(
                _sgns_chunk, G, H, nodes, feats, order, int(bounds[c]), int(bounds[c + 1]),
                sampler.cdf, config.negatives, config.lr_max, config.lr_min,
                done, total, float(chunks), np.uint64(seed), stream, freeze_h))
        for job in jobs:
            job.result()


def _as_h(frozen) -> np.ndarray:
    return frozen.H if isinstance(frozen, EmbeddingSet) else np.asarray(frozen)


def train(corpus: ScaledCorpus, config: TrainConfig, frozen_H=None) -> EmbeddingSet:
    """Fit node embeddings G and feature embeddings H on a corpus.

    AE mode trains one model of width ``dim`` on the pooled corpus. MUSAE
    mode trains ``window`` independent models of width ``dim / window``,
    model ``r`` on sub-corpus ``r``, and concatenates them column-wise.
    If ``frozen_H`` is given, H is held fixed and only G is learned.
    """
    expected = POOLED if config.mode == AE else MULTISCALE
    if corpus.mode != expected:
        raise ConfigError(f"{config.mode} training needs a {expected} corpus, got {corpus.mode}")
    if config.mode == MUSAE and corpus.num_scales != config.window:
        raise ConfigError("corpus window does not match config window")
    n, q, d = corpus.node_count, corpus.feature_count, config.dim
    width = config.scale_width
    blocks = [(r * width, (r + 1) * width) for r in range(corpus.num_scales)]

    H_fixed = None
    if frozen_H is not None:
        H_fixed = _as_h(frozen_H)
        if H_fixed.shape != (q, d):
            raise ConfigError(f"frozen H has shape {H_fixed.shape}, expected {(q, d)}")
        if isinstance(frozen_H, EmbeddingSet) and frozen_H.scale_blocks != blocks:
            raise ConfigError("frozen H scale blocks do not match the configuration")

    parts = []
    for r in range(corpus.num_scales):
        seed_r = config.seed + 7919 * r
        init = init_embeddings(n, q, width, seed_r)
        H_r = init.H if H_fixed is None else np.ascontiguousarray(H_fixed[:, blocks[r][0]:blocks[r][1]], dtype=np.float64)
        parts.append((init.G, H_r, seed_r))

    threads = config.threads
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        if pool is not None and len(parts) > 1:
            # scales share no parameters, so they run side by side
            jobs = [pool.submit(_train_block, G, H, corpus.nodes[r], corpus.features[r], q,
                                config, s, H_fixed is not None, 1, None)
                    for r, (G, H, s) in enumerate(parts)]
            for job in jobs:
                job.result()
        else:
            for r, (G, H, s) in enumerate(parts):
                _train_block(G, H, corpus.nodes[r], corpus.features[r], q, config, s,
                             H_fixed is not None, threads, pool)
    finally:
        if pool is not None:
            pool.shutdown()

    G = np.hstack([p[0] for p in parts])
    H = np.array(H_fixed, copy=True) if H_fixed is not None else np.hstack([p[1] for p in parts])
    return EmbeddingSet(G, H, blocks)


# ---------------------------------------------------------------- export

def write_embedding_csv(matrix: np.ndarray, ids: Sequence[str], stream: IO[str]) -> None:
    d = matrix.shape[1]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["id"] + [f"x_{i}" for i in range(d)])
    for name, row in zip(ids, matrix):
        writer.writerow([name] + [format(float(x), ".9g") for x in row])


def read_embedding_csv(stream: IO[str]) -> tuple[list[str], np.ndarray]:
    reader = csv.reader(stream)
    header = next(reader)
    ids, rows = [], []
    for rec in reader:
        ids.append(rec[0])
        rows.append([float(x) for x in rec[1:]])
    return ids, np.asarray(rows, dtype=np.float64).reshape(len(rows), len(header) - 1)


def export_embeddings(emb: EmbeddingSet, node_ids: Sequence[str], feature_ids: Sequence[str],
                      node_stream: IO[str], feature_stream: IO[str] | None = None) -> None:
    write_embedding_csv(emb.G, node_ids, node_stream)
    if feature_stream is not None:
        write_embedding_csv(emb.H, feature_ids, feature_stream)


def sidecar(emb: EmbeddingSet, config: TrainConfig, node_ids, feature_ids) -> dict:
    return {
        "config": config.to_dict(),
        "seed": config.seed,
        "scale_blocks": [list(b) for b in emb.scale_blocks],
        "node_ids": list(node_ids),
        "feature_ids": list(feature_ids),
    }


def load_embedding_set(node_stream: IO[str], feature_stream: IO[str], sidecar_stream: IO[str] | None = None):
    """Rebuild an :class:`EmbeddingSet` (and its id lists) from exported files."""
    node_ids, G = read_embedding_csv(node_stream)
    feature_ids, H = read_embedding_csv(feature_stream)
    blocks = []
    if sidecar_stream is not None:
        meta = json.load(sidecar_stream)
        blocks = [tuple(b) for b in meta["scale_blocks"]]
    return EmbeddingSet(G, H, blocks), node_ids, feature_ids

