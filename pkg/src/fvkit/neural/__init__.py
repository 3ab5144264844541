"""GCN / MLP regression of FV importance, training and metrics."""
import numpy as np

from fvkit.neural.metrics import Metrics, evaluate, spearman
from fvkit.neural.models import (
    GcnModel,
    MlpModel,
    init_model,
    model_from_dict,
    normalize_adjacency,
)
from fvkit.neural.train import (
    TrainConfig,
    gradient_check,
    heldout_metrics,
    numeric_gradient,
    predict,
    split_indices,
    train,
)


def random_model(kind, nodes, edges=(), seed=0):
    return init_model(kind, nodes, edges, np.random.default_rng(seed))


__all__ = [
    "GcnModel", "Metrics", "MlpModel", "TrainConfig", "evaluate", "gradient_check",
    "heldout_metrics", "init_model", "model_from_dict", "normalize_adjacency",
    "numeric_gradient", "predict", "random_model", "spearman", "split_indices", "train",
]
