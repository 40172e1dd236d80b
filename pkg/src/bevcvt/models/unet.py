"""UNet baseline: all views and the trajectory raster channel-concatenated."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .cvt import ModelConfigError


@dataclass(frozen=True)
class UnetConfig:
    n_views: int = 4
    bev_size: int = 128
    out_channels: int = 3
    widths: tuple[int, int, int] = (12, 24, 48)
    bottleneck: int = 96

    @property
    def in_channels(self) -> int:
        return 3 * self.n_views + 1

    def to_json(self) -> dict:
        return {
            "n_views": self.n_views,
            "bev_size": self.bev_size,
            "out_channels": self.out_channels,
            "widths": list(self.widths),
            "bottleneck": self.bottleneck,
        }

    @staticmethod
    def from_json(doc: dict) -> "UnetConfig":
        doc = dict(doc)
        doc["widths"] = tuple(doc["widths"])
        return UnetConfig(**doc)


class DoubleConv(nn.Module):
    def __init__(self, c_in, c_out):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(c_in, c_out, 3, padding=1, bias=False),
            nn.BatchNorm2d(c_out),
            nn.ReLU(inplace=True),
            nn.Conv2d(c_out, c_out, 3, padding=1, bias=False),
            nn.BatchNorm2d(c_out),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.net(x)


class UpBlock(nn.Module):
    def __init__(self, c_in, c_out):
        super().__init__()
        self.up = nn.ConvTranspose2d(c_in, c_out, 2, stride=2)
        self.conv = DoubleConv(2 * c_out, c_out)

    def forward(self, x, skip):
        return self.conv(torch.cat([skip, self.up(x)], dim=1))


class UNet(nn.Module):
    arch = "unet"

    def __init__(self, config: UnetConfig | None = None):
        super().__init__()
        self.config = config or UnetConfig()
        c = self.config
        w1, w2, w3 = c.widths
        self.enc1 = DoubleConv(c.in_channels, w1)
        self.enc2 = DoubleConv(w1, w2)
        self.enc3 = DoubleConv(w2, w3)
        self.bottleneck = DoubleConv(w3, c.bottleneck)
        self.up3 = UpBlock(c.bottleneck, w3)
        self.up2 = UpBlock(w3, w2)
        self.up1 = UpBlock(w2, w1)
        self.head = nn.Conv2d(w1, c.out_channels, 1)

    def forward(self, batch: dict) -> torch.Tensor:
        c = self.config
        images = batch["images"]
        if images.shape[1] != c.n_views:
            raise ModelConfigError(f"model configured for {c.n_views} views, got {images.shape[1]}")
        b, n = images.shape[:2]
        flat = images.reshape(b * n, *images.shape[2:])
        if flat.shape[-2:] != (c.bev_size, c.bev_size):
            flat = F.interpolate(flat, size=(c.bev_size, c.bev_size), mode="bilinear", align_corners=False)
        views = flat.reshape(b, n * 3, c.bev_size, c.bev_size)
        x = torch.cat([views, batch["trajectory"]], dim=1)
        if x.shape[1] != c.in_channels:
            raise ModelConfigError(f"expected {c.in_channels} input channels, got {x.shape[1]}")

        s1 = self.enc1(x)
        s2 = self.enc2(F.max_pool2d(s1, 2))
        s3 = self.enc3(F.max_pool2d(s2, 2))
        x = self.bottleneck(F.max_pool2d(s3, 2))
        x = self.up3(x, s3)
        x = self.up2(x, s2)
        x = self.up1(x, s1)
        return self.head(x)
