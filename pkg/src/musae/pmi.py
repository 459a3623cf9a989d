"""Closed-form node-feature PMI targets and their empirical estimates.

All targets are ``log(M) - log b`` for a nonnegative matrix ``M``; entries
where ``M`` is zero are masked rather than set to -inf.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .corpus import ScaledCorpus, corpus_stats
from .graph import DenseView, FeatureStore, Graph, dense_view, ego_augment
from .sgns import EmbeddingSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PmiTarget:
    """Shifted PMI matrix; ``matrix`` is NaN wherever ``mask`` is False."""

    matrix: np.ndarray
    mask: np.ndarray
    shift: float
    scale: int | str

    def values(self) -> np.ndarray:
        return self.matrix[self.mask]

    def to_csv(self, stream: IO[str], node_ids: Sequence[str] | None = None,
               feature_ids: Sequence[str] | None = None, digits: int = 6) -> None:
        n, q = self.matrix.shape
        node_ids = node_ids or [str(i) for i in range(n)]
        feature_ids = feature_ids or [str(j) for j in range(q)]
        stream.write(",".join(["id"] + list(feature_ids)) + "\n")
        for name, row, keep in zip(node_ids, self.matrix, self.mask):
            cells = [f"{x:.{digits}f}" if k else "NA" for x, k in zip(row, keep)]
            stream.write(",".join([name] + cells) + "\n")


def _check(b: float) -> None:
    if b < 1:
        raise ValueError("number of negative samples must be >= 1")


def _shifted_log(M: np.ndarray, b: float, scale, zero_columns=None) -> PmiTarget:
    mask = M > 0
    if zero_columns is not None and zero_columns.any():
        logger.warning("%d feature(s) have E_ff = 0; their columns are masked", int(zero_columns.sum()))
        mask[:, zero_columns] = False
    out = np.full(M.shape, np.nan)
    out[mask] = np.log(M[mask]) - np.log(b)
    return PmiTarget(out, mask, float(np.log(b)), scale)


def transition_powers(P: np.ndarray, t: int) -> list[np.ndarray]:
    """[P^1, ..., P^t] by repeated multiplication."""
    powers = [P.copy()]
    for _ in range(t - 1):
        powers.append(powers[-1] @ P)
    return powers


def _divide_columns(M: np.ndarray, E: np.ndarray):
    zero = E <= 0
    safe = np.where(zero, 1.0, E)
    return M / safe[None, :], zero


def musae_target(view: DenseView, r: int, b: float = 1) -> PmiTarget:
    """log(c P^r F E^-1) - log b."""
    if r < 1:
        raise ValueError("scale must be >= 1")
    _check(b)
    Pr = transition_powers(view.P, r)[-1]
    M, zero = _divide_columns(view.volume * (Pr @ view.F), view.E_diag)
    return _shifted_log(M, b, r, zero)


def ae_target(view: DenseView, t: int, b: float = 1) -> PmiTarget:
    """log((c / t) (sum_r P^r) F E^-1) - log b."""
    if t < 1:
        raise ValueError("window must be >= 1")
    _check(b)
    S = np.sum(transition_powers(view.P, t), axis=0)
    M, zero = _divide_columns((view.volume / t) * (S @ view.F), view.E_diag)
    return _shifted_log(M, b, "pooled", zero)


def deepwalk_target(view: DenseView, t: int, b: float = 1) -> PmiTarget:
    """log((c / t) (sum_r P^r) D^-1) - log b, built from P and D only."""
    if t < 1:
        raise ValueError("window must be >= 1")
    _check(b)
    S = np.sum(transition_powers(view.P, t), axis=0)
    M, zero = _divide_columns((view.volume / t) * S, view.D_diag)
    return _shifted_log(M, b, "pooled", zero)


def walklets_target(view: DenseView, r: int, b: float = 1) -> PmiTarget:
    """log(c P^r D^-1) - log b."""
    if r < 1:
        raise ValueError("scale must be >= 1")
    _check(b)
    Pr = transition_powers(view.P, r)[-1]
    M, zero = _divide_columns(view.volume * Pr, view.D_diag)
    return _shifted_log(M, b, r, zero)


def ego_target(graph: Graph, features: FeatureStore, b: float = 1, *,
               scale: int | None = None, window: int | None = None,
               cap: int | None = None) -> PmiTarget:
    """Target for the [F; I] feature matrix.

    Pass ``scale`` for the multi-scale target or ``window`` for the pooled
    one. Columns ``q .. q + n - 1`` are the node-identity block.
    """
    if (scale is None) == (window is None):
        raise ValueError("give exactly one of scale or window")
    kwargs = {} if cap is None else {"cap": cap}
    view = dense_view(graph, ego_augment(features, graph), **kwargs)
    if scale is not None:
        return musae_target(view, scale, b)
    return ae_target(view, window, b)


def empirical_target(corpus: ScaledCorpus, scale: int | None = None, b: float = 1) -> PmiTarget:
    """log(#(v,f) |D| / (#(v) #(f))) - log b from exact corpus counts."""
    _check(b)
    table = corpus_stats(corpus)[corpus.scale_index(scale)]
    joint = table.joint.toarray().astype(np.float64)
    denom = np.outer(table.node_counts, table.feature_counts).astype(np.float64)
    M = np.zeros_like(joint)
    hit = joint > 0
    M[hit] = joint[hit] * table.total / denom[hit]
    return _shifted_log(M, b, scale if scale is not None else "pooled")


# ---------------------------------------------------------------- co-occurrence limits

def joint_forward(view: DenseView, r: int) -> np.ndarray:
    """c^-1 D P^r F: limit of forward pair frequencies at scale r."""
    Pr = transition_powers(view.P, r)[-1]
    return (view.D_diag[:, None] * (Pr @ view.F)) / view.volume


def joint_backward(view: DenseView, r: int) -> np.ndarray:
    """(c^-1 F^T D P^r)^T, laid out node x feature."""
    Pr = transition_powers(view.P, r)[-1]
    return ((view.F.T * view.D_diag[None, :]) @ Pr).T / view.volume


def directional_frequencies(corpus: ScaledCorpus, scale: int, direction: str,
                            per_position: bool = False) -> np.ndarray:
    """#(v,f) in one direction of sub-corpus ``scale``, normalized.

    By default the count is divided by the size of that directional half.
    With ``per_position`` it is divided by the number of source positions
    instead, which estimates the same limit whatever the per-node feature
    counts are.
    """
    table = corpus_stats(corpus, direction)[corpus.scale_index(scale)]
    denom = corpus.source_positions if per_position else table.total
    if denom == 0:
        raise ValueError("empty corpus")
    return table.joint.toarray() / denom


def pair_frequencies(corpus: ScaledCorpus, scale: int | None = None) -> np.ndarray:
    table = corpus_stats(corpus)[corpus.scale_index(scale)]
    if table.total == 0:
        raise ValueError("empty corpus")
    return table.joint.toarray() / table.total


# ---------------------------------------------------------------- fit

def factorization_fit(emb: EmbeddingSet, target: PmiTarget, scale: int | None = None) -> dict:
    """Pearson correlation and RMSE between g.h dot products and the target on its mask."""
    G, H = emb.block(scale)
    if G.shape[0] != target.matrix.shape[0] or H.shape[0] != target.matrix.shape[1]:
        raise ValueError(
            f"embedding shape {(G.shape[0], H.shape[0])} does not match target {target.matrix.shape}"
        )
    if not target.mask.any():
        raise ValueError("target mask is empty")
    dots = (G @ H.T)[target.mask]
    vals = target.values()
    rmse = float(np.sqrt(np.mean((dots - vals) ** 2)))
    if np.std(dots) == 0 or np.std(vals) == 0:
        pearson = float("nan")
    else:
        pearson = float(np.corrcoef(dots, vals)[0, 1])
    return {"pearson": pearson, "masked_rmse": rmse, "entries": int(target.mask.sum())}
