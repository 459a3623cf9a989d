"""Walks -> corpus -> SGNS, end to end."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .corpus import ScaledCorpus, build_multiscale, build_pooled
from .graph import FeatureStore, Graph, ego_augment
from .sgns import AE, EmbeddingSet, TrainConfig, train
from .walker import WalkRegime, WalkSet, generate_walks

logger = logging.getLogger(__name__)


@dataclass
class EmbeddingRun:
    embeddings: EmbeddingSet
    features: FeatureStore
    walks: WalkSet
    corpus: ScaledCorpus


def build_corpus(graph: Graph, features: FeatureStore, config: TrainConfig,
                 regime: WalkRegime | None = None) -> tuple[WalkSet, ScaledCorpus]:
    regime = regime or WalkRegime.per_node(config.walks_per_node)
    walks = generate_walks(graph, regime, config.walk_length, config.seed, config.threads)
    builder = build_pooled if config.mode == AE else build_multiscale
    corpus = builder(walks, features, config.window, config.threads)
    if corpus.skipped_slots:
        logger.info("%d pair slot(s) skipped for featureless nodes", corpus.skipped_slots)
    return walks, corpus


def embed(graph: Graph, features: FeatureStore, config: TrainConfig,
          frozen_H=None, regime: WalkRegime | None = None) -> EmbeddingRun:
    """Learn node and feature embeddings (AE or MUSAE, optionally EGO)."""
    if config.ego:
        features = ego_augment(features, graph)
    walks, corpus = build_corpus(graph, features, config, regime)
    emb = train(corpus, config, frozen_H=frozen_H)
    return EmbeddingRun(emb, features, walks, corpus)
