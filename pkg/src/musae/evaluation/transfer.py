"""Transfer of a classifier between graphs that share a feature universe.

Steps per seed: embed the source graph (the test feature removed), fit a
classifier for the test feature on source node embeddings, embed the
target graph with the source feature embeddings held fixed, then score
the classifier on target nodes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np

from ..errors import TaskPreconditionError
from ..graph import FeatureStore, Graph, generate_sbm
from ..pipeline import embed
from ..sgns import TrainConfig
from .classification import mean_stderr, micro_f1, train_logreg


@dataclass
class TransferResult:
    scores: list[float]
    mean: float
    stderr: float
    majority_baseline: float
    frozen_h_intact: bool


def _labels(features: FeatureStore, feature: int) -> np.ndarray:
    return np.array([feature in set(features.features_of(v).tolist())
                     for v in range(features.node_count)], dtype=int)


def _digest(a: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()


def transfer_once(source: tuple[Graph, FeatureStore], target: tuple[Graph, FeatureStore],
                  test_feature: int, config: TrainConfig, lam: float = 0.01) -> tuple[float, bool]:
    (sg, sf), (tg, tf) = source, target
    y_src, y_tgt = _labels(sf, test_feature), _labels(tf, test_feature)
    src_run = embed(sg, sf.without(test_feature), config)
    H = src_run.embeddings.H
    before = _digest(H)
    model = train_logreg(src_run.embeddings.G, y_src, lam)
    tgt_run = embed(tg, tf.without(test_feature), config, frozen_H=src_run.embeddings)
    intact = _digest(H) == before and _digest(tgt_run.embeddings.H) == before
    return micro_f1(model.predict(tgt_run.embeddings.G), y_tgt), intact


def transfer_eval(source: tuple[Graph, FeatureStore], target: tuple[Graph, FeatureStore],
                  test_feature: int, config: TrainConfig, seeds, lam: float = 0.01) -> TransferResult:
    sf, tf = source[1], target[1]
    if sf.feature_count != tf.feature_count or sf.feature_ids != tf.feature_ids:
        raise TaskPreconditionError("source and target graphs do not share a feature universe")
    if config.ego:
        raise TaskPreconditionError("EGO features are node specific and cannot be transferred")
    if not 0 <= test_feature < sf.feature_count:
        raise TaskPreconditionError(f"test feature {test_feature} is not in the feature universe")
    y_src = _labels(sf, test_feature)
    if len(np.unique(y_src)) < 2:
        raise TaskPreconditionError("test feature is constant on the source graph")
    scores, intact = [], True
    for seed in seeds:
        score, ok = transfer_once(source, target, test_feature, replace(config, seed=seed), lam)
        scores.append(score)
        intact &= ok
    y_tgt = _labels(tf, test_feature)
    baseline = float(np.bincount(y_tgt).max() / len(y_tgt))
    mean, se = mean_stderr(scores)
    return TransferResult(scores, mean, se, baseline, intact)


def attributed_sbm(block_size: int, p_in: float, p_out: float, feature_pool: int,
                   features_per_node: int, affinity: float, seed: int,
                   label_noise: float = 0.0) -> tuple[Graph, FeatureStore, np.ndarray]:
    """Two-community SBM whose features lean towards the node's community.

    The pool is split in halves, one per community; each of a node's
    features comes from its own half with probability ``affinity`` and
    from the other half otherwise. Feature ``feature_pool`` (the last id)
    marks community 1, flipped with probability ``label_noise``; it is the
    natural test feature.
    """
    graph, blocks = generate_sbm([block_size, block_size], p_in, p_out, seed)
    rng = np.random.default_rng([seed, 1])
    half = feature_pool // 2
    lists = []
    for b in blocks:
        own = rng.random(features_per_node) < affinity
        side = np.where(own, b, 1 - b)
        chosen = set()
        for s in side:
            while True:
                f = int(s * half + rng.integers(half))
                if f not in chosen:
                    chosen.add(f)
                    break
        label = b if rng.random() >= label_noise else 1 - b
        if label == 1:
            chosen.add(feature_pool)
        lists.append(sorted(chosen))
    return graph, FeatureStore.from_lists(lists, feature_pool + 1), blocks
