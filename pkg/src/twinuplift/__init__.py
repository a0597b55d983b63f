"""Twin neural uplift models: synthetic randomized-trial data with known
true uplift, a composite uplift loss, proximal SGD with unstructured and
structured (node-pruning) sparsity, and Qini-based evaluation."""

from .dgp import SCENARIOS, Dataset, Scenario, generate_dataset
from .loss import LossKind, uplift_loss_batch
from .model import (
    Hidden1Params,
    InteractionParams,
    init_hidden1,
    init_interaction,
    predict_uplift,
    twin_forward,
)
from .optim import RegKind, TrainConfig, train
from .qini import QiniReport, evaluate_predictions

__all__ = [
    "SCENARIOS",
    "Dataset",
    "Scenario",
    "generate_dataset",
    "LossKind",
    "uplift_loss_batch",
    "Hidden1Params",
    "InteractionParams",
    "init_hidden1",
    "init_interaction",
    "predict_uplift",
    "twin_forward",
    "RegKind",
    "TrainConfig",
    "train",
    "QiniReport",
    "evaluate_predictions",
]

__version__ = "0.1.0"
