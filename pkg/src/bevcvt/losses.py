"""Training objectives: focal loss and probability-space L1, per BEV channel."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import torch
import torch.nn.functional as F

LOSS_KINDS = ("focal", "l1")


@dataclass(frozen=True)
class LossConfig:
    kind: str = "focal"
    gamma: float = 2.0
    alpha: float = 0.25
    channel_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"loss kind must be one of {LOSS_KINDS}, got {self.kind!r}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "gamma": self.gamma,
            "alpha": self.alpha,
            "channel_weights": list(self.channel_weights),
        }

    @staticmethod
    def from_json(doc: dict) -> "LossConfig":
        return LossConfig(
            kind=doc["kind"],
            gamma=doc["gamma"],
            alpha=doc["alpha"],
            channel_weights=tuple(doc.get("channel_weights", (1.0, 1.0, 1.0))),
        )


def _check_shapes(logits: torch.Tensor, targets: torch.Tensor):
    if logits.shape != targets.shape:
        raise ValueError(f"shape mismatch: logits {tuple(logits.shape)} vs targets {tuple(targets.shape)}")


def _apply_channel_weights(per_elem: torch.Tensor, channel_weights) -> torch.Tensor:
    if channel_weights is None:
        return per_elem.mean()
    w = torch.as_tensor(channel_weights, dtype=per_elem.dtype, device=per_elem.device)
    if per_elem.ndim < 2 or per_elem.shape[1] != len(w):
        raise ValueError(
            f"channel weights of length {len(w)} do not match input with shape {tuple(per_elem.shape)}"
        )
    shape = [1, len(w)] + [1] * (per_elem.ndim - 2)
    return (per_elem * w.view(shape)).mean()


def focal_loss(
    logits: torch.Tensor,
    targets: torch.Tensor,
    gamma: float = 2.0,
    alpha: float = 0.25,
    channel_weights=None,
) -> torch.Tensor:
    """Mean of -alpha_t (1 - p_t)^gamma log(p_t) with p = sigmoid(logits).

    Stabilized through log-sigmoid; gamma=0, alpha=0.5 reduces to half the
    binary cross-entropy.
    """
    _check_shapes(logits, targets)
    p = torch.sigmoid(logits)
    log_p = F.logsigmoid(logits)
    log_not_p = F.logsigmoid(-logits)
    pos = alpha * (1.0 - p).pow(gamma) * (-log_p)
    neg = (1.0 - alpha) * p.pow(gamma) * (-log_not_p)
    per_elem = targets * pos + (1.0 - targets) * neg
    return _apply_channel_weights(per_elem, channel_weights)


def l1_loss(logits: torch.Tensor, targets: torch.Tensor, channel_weights=None) -> torch.Tensor:
    """Mean |sigmoid(logits) - targets|: bounded, scale-comparable to focal."""
    _check_shapes(logits, targets)
    per_elem = (torch.sigmoid(logits) - targets).abs()
    return _apply_channel_weights(per_elem, channel_weights)


def make_loss(config: LossConfig) -> Callable[[torch.Tensor, torch.Tensor], torch.Tensor]:
    weights = config.channel_weights
    if config.kind == "focal":
        return lambda logits, targets: focal_loss(
            logits, targets, gamma=config.gamma, alpha=config.alpha, channel_weights=weights
        )
    return lambda logits, targets: l1_loss(logits, targets, channel_weights=weights)
