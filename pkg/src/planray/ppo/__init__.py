from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .core import (
    NonFiniteLoss,
    PpoConfig,
    RolloutBatch,
    argmax_action,
    compute_gae,
    normalize_advantages,
    ppo_loss,
    ppo_update,
    sample_action,
)
from .model import PolicyNetwork
from .train import TrainResult, build_model, evaluate, random_baseline, train

__all__ = [
    "CheckpointError", "NonFiniteLoss", "PolicyNetwork", "PpoConfig",
    "RolloutBatch", "TrainResult", "argmax_action", "build_model",
    "compute_gae", "evaluate", "load_checkpoint", "normalize_advantages",
    "ppo_loss", "ppo_update", "random_baseline", "sample_action",
    "save_checkpoint", "train",
]
