"""Attributed node embeddings (AE, MUSAE) with an exact PMI oracle."""

__version__ = "0.1.0"

from .corpus import ScaledCorpus, build_multiscale, build_pooled, corpus_stats
from .errors import (
    ConfigError,
    FeatureError,
    IsolatedNodeError,
    MusaeError,
    OracleCapError,
    ParseError,
    TaskPreconditionError,
)
from .graph import (
    FeatureStore,
    Graph,
    dense_view,
    ego_augment,
    load_edge_list,
    load_features,
)
from .pipeline import EmbeddingRun, embed
from .pmi import ae_target, deepwalk_target, empirical_target, musae_target, walklets_target
from .sgns import EmbeddingSet, TrainConfig, train
from .walker import WalkRegime, WalkSet, generate_walks, random_walk
