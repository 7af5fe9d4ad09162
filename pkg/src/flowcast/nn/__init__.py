"""From-scratch neural forecasters: specs, kernels, losses, Adam, training."""
from .adam import AdamState, adam_step
from .backend import BACKEND_NAME
from .checkpoint import CHECKPOINT_VERSION, load_checkpoint, save_checkpoint
from .losses import LossSpec, loss_and_grad, mse_loss, pinball_loss
from .models import backward, forward
from .netspec import (
    DEFAULT_HIDDEN,
    MODEL_KINDS,
    NetParams,
    NetSpec,
    init_params,
    param_count,
    param_layout,
    zeros_like_params,
)
from .train import TrainConfig, TrainingDiverged, TrainResult, evaluate_loss, train

__all__ = [
    "AdamState",
    "adam_step",
    "BACKEND_NAME",
    "CHECKPOINT_VERSION",
    "load_checkpoint",
    "save_checkpoint",
    "LossSpec",
    "loss_and_grad",
    "mse_loss",
    "pinball_loss",
    "backward",
    "forward",
    "DEFAULT_HIDDEN",
    "MODEL_KINDS",
    "NetParams",
    "NetSpec",
    "init_params",
    "param_count",
    "param_layout",
    "zeros_like_params",
    "TrainConfig",
    "TrainingDiverged",
    "TrainResult",
    "evaluate_loss",
    "train",
]
