"""Seeded mini-batch training loop over embedded datasets."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..series import WindowedDataset
from .adam import AdamState, adam_step
from .losses import LossSpec, loss_and_grad
from .models import backward, forward
from .netspec import NetParams, NetSpec, init_params


class TrainingDiverged(RuntimeError):
    """Raised when a non-finite loss appears during training."""


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; Adam defaults are the standard ones.

    ``early_stop_patience`` switches on early stopping against a held-out
    chronological tail of the training samples (``validation_fraction``); the
    returned parameters are then the best-on-validation ones instead of the
    final epoch's. ``max_epochs`` is always a hard cap.
    """

    max_epochs: int = 150
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    early_stop_patience: int | None = None
    validation_fraction: float = 0.1

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.early_stop_patience is not None:
            if self.early_stop_patience < 1:
                raise ValueError("early_stop_patience must be >= 1")
            if not 0.0 < self.validation_fraction < 1.0:
                raise ValueError("validation_fraction must lie in (0, 1)")


@dataclass
class TrainResult:
    params: NetParams
    history: list[float] = field(default_factory=list)
    val_history: list[float] = field(default_factory=list)
    stopped_epoch: int | None = None


def train(spec: NetSpec, dataset: WindowedDataset, loss: LossSpec,
          config: TrainConfig) -> TrainResult:
    """Train a fresh model on ``dataset`` and return params plus loss history.

    Fully deterministic for a fixed config: the seed drives initialisation
    and the per-epoch shuffle from one RNG stream.
    """
    if dataset.n_samples == 0:
        raise ValueError("empty training dataset")
    inputs, targets = dataset.inputs, dataset.targets
    if targets.shape[1] != spec.horizon:
        raise ValueError(
            f"dataset target width {targets.shape[1]} != spec horizon {spec.horizon}"
        )
    rng = np.random.default_rng(config.seed)
    params = init_params(spec, rng)
    state = AdamState.zeros(params.size)

    n_total = dataset.n_samples
    if config.early_stop_patience is not None:
        n_val = max(1, int(round(config.validation_fraction * n_total)))
        if n_val >= n_total:
            raise ValueError("validation fraction leaves no training samples")
        n_train = n_total - n_val
        val_inputs, val_targets = inputs[n_train:], targets[n_train:]
    else:
        n_train = n_total
        val_inputs = val_targets = None

    result = TrainResult(params=params)
    best_val = np.inf
    best_params = None
    stale = 0
    for epoch in range(config.max_epochs):
        perm = rng.permutation(n_train)
        batch_losses = []
        for start in range(0, n_train, config.batch_size):
            idx = perm[start:start + config.batch_size]
            pred, cache = forward(spec, params, inputs[idx], return_cache=True)
            loss_val, d_pred = loss_and_grad(loss, pred, targets[idx])
            if not np.isfinite(loss_val):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch + 1}, batch {start // config.batch_size}"
                )
            grads = backward(spec, params, cache, d_pred)
            params.flat, state = adam_step(
                params.flat, grads, state,
                lr=config.learning_rate, beta1=config.beta1,
                beta2=config.beta2, eps=config.eps)
            batch_losses.append(loss_val)
        result.history.append(float(np.mean(batch_losses)))

        if val_inputs is not None:
            val_pred = forward(spec, params, val_inputs)
            val_loss, _ = loss_and_grad(loss, val_pred, val_targets)
            result.val_history.append(val_loss)
            if val_loss < best_val:
                best_val = val_loss
                best_params = params.copy()
                stale = 0
            else:
                stale += 1
                if stale > config.early_stop_patience:
                    result.stopped_epoch = epoch + 1
                    break
    if best_params is not None:
        result.params = best_params
    else:
        result.params = params
    return result


def evaluate_loss(spec: NetSpec, params: NetParams, dataset: WindowedDataset,
                  loss: LossSpec) -> float:
    """Full-dataset loss under ``loss`` without touching the params."""
    pred = forward(spec, params, dataset.inputs)
    value, _ = loss_and_grad(loss, pred, dataset.targets)
    return value
