"""Checkpoint archive: version + architecture tag + config + named parameters."""

from __future__ import annotations

from pathlib import Path

import torch

from .cvt import CrossViewTransformer, CvtConfig
from .unet import UNet, UnetConfig

CHECKPOINT_VERSION = 1

_ARCHS = {
    "cvt": (CvtConfig, CrossViewTransformer),
    "unet": (UnetConfig, UNet),
}


def save_checkpoint(model: torch.nn.Module, path: Path) -> Path:
    arch = getattr(model, "arch", None)
    if arch not in _ARCHS:
        raise ValueError(f"cannot checkpoint model with unknown architecture {arch!r}")
    payload = {
        "version": CHECKPOINT_VERSION,
        "arch": arch,
        "config": model.config.to_json(),
        "state_dict": model.state_dict(),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)
    return path


def load_checkpoint(path: Path) -> torch.nn.Module:
    payload = torch.load(Path(path), map_location="cpu", weights_only=False)
    version = payload.get("version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version!r} in {path}")
    arch = payload.get("arch")
    if arch not in _ARCHS:
        raise ValueError(f"unknown architecture {arch!r} in {path}")
    config_cls, model_cls = _ARCHS[arch]
    model = model_cls(config_cls.from_json(payload["config"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model
