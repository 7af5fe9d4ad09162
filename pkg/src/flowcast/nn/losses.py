"""Training losses: mean squared error and the tilted (pinball) quantile loss.

Both return ``(scalar_loss, gradient_wrt_pred)`` with the gradient already
normalised by the element count, so optimisers can consume it directly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LossSpec:
    """Which loss to train under; ``tau`` is required iff kind is PINBALL."""

    kind: str  # "MSE" | "PINBALL"
    tau: float | None = None

    def __post_init__(self):
        if self.kind not in ("MSE", "PINBALL"):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == "PINBALL":
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise ValueError("pinball loss requires tau in (0, 1)")
        elif self.tau is not None:
            raise ValueError("tau is only meaningful for the pinball loss")


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over all elements and its gradient w.r.t. pred."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    grad = 2.0 * diff / diff.size
    return loss, grad


def pinball_loss(pred: np.ndarray, target: np.ndarray, tau: float) -> tuple[float, np.ndarray]:
    """Tilted absolute-error loss whose risk minimiser is the tau-quantile.

    With residual ``m = target - pred`` each element contributes ``tau*m`` if
    ``m >= 0`` and ``(tau-1)*m`` otherwise; the loss is the mean contribution.
    The subgradient at ``m == 0`` is taken as 0.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    m = target - pred
    loss = float(np.mean(np.where(m >= 0.0, tau * m, (tau - 1.0) * m)))
    grad = np.where(m > 0.0, -tau, np.where(m < 0.0, 1.0 - tau, 0.0)) / m.size
    return loss, grad


def loss_and_grad(spec: LossSpec, pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    if spec.kind == "MSE":
        return mse_loss(pred, target)
    return pinball_loss(pred, target, spec.tau)
