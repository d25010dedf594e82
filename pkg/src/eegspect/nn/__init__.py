from .network import (
    BLOCK_WIDTHS,
    VggLiteNet,
    backward,
    forward,
    init_net,
    load_checkpoint,
    replace_head,
    save_checkpoint,
)
from .training import (
    BEST_VAL,
    FINAL_EPOCH,
    EpochStats,
    TrainConfig,
    TrainHistory,
    TrainingDiverged,
    cross_entropy,
    predict,
    sgd_step,
    train,
)

__all__ = [
    "BLOCK_WIDTHS",
    "BEST_VAL",
    "FINAL_EPOCH",
    "EpochStats",
    "TrainConfig",
    "TrainHistory",
    "TrainingDiverged",
    "VggLiteNet",
    "backward",
    "cross_entropy",
    "forward",
    "init_net",
    "load_checkpoint",
    "predict",
    "replace_head",
    "save_checkpoint",
    "sgd_step",
    "train",
]
