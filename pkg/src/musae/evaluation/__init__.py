"""Downstream tasks: classification, regression, link prediction, transfer, runtime."""

from .benchmark import loglog_slope, runtime_benchmark
from .classification import (
    SoftmaxRegression,
    classification_scores,
    kshot_eval,
    micro_f1,
    train_logreg,
)
from .linkpred import auc, edge_features, link_split, linkpred_eval
from .regression import ElasticNet, r2, regression_scores, train_elastic_net
from .transfer import attributed_sbm, transfer_eval

__all__ = [
    "ElasticNet", "SoftmaxRegression", "attributed_sbm", "auc", "classification_scores",
    "edge_features", "kshot_eval", "link_split", "linkpred_eval", "loglog_slope", "micro_f1",
    "r2", "regression_scores", "runtime_benchmark", "train_elastic_net", "train_logreg",
    "transfer_eval",
]
