"""Cross-view transformer: camera-aware attention from image features to a BEV map.

A shared convolutional backbone produces two feature resolutions per view
(strides 8 and 4). Each feature cell's pixel center is unprojected through
its camera (d = R^-1 K^-1 x), normalized, and encoded by an MLP shared
across views; the encoding is added to the keys so attention can reason
about geometry. A learned 16x16 map-query grid (plus a fixed sinusoidal
position code and the pooled trajectory raster) is refined by one attention
stage per feature resolution, coarse first, then decoded to BEV logits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
import torch.nn as nn
import torch.nn.functional as F
from einops import rearrange


class ModelConfigError(ValueError):
    """Input does not match the model configuration."""


@dataclass(frozen=True)
class CvtConfig:
    n_views: int = 4
    image_size: int = 128
    bev_size: int = 128
    out_channels: int = 3
    embed_dim: int = 64
    n_heads: int = 4
    n_resolutions: int = 2
    backbone_widths: tuple[int, int, int, int] = (24, 48, 96, 96)
    map_resolution: int = 16
    decoder_factors: tuple[int, ...] = (4, 2)
    decoder_widths: tuple[int, ...] = (48, 24)
    dir_mlp_hidden: int = 64
    ffn_mult: int = 2

    def __post_init__(self):
        if self.embed_dim % self.n_heads:
            raise ValueError(f"embed_dim {self.embed_dim} not divisible by n_heads {self.n_heads}")
        if self.embed_dim % 4:
            raise ValueError("embed_dim must be divisible by 4 for the sinusoidal code")
        if not 1 <= self.n_resolutions <= 2:
            raise ValueError(f"n_resolutions must be 1 or 2, got {self.n_resolutions}")
        if self.bev_size % self.map_resolution:
            raise ValueError("map_resolution must divide bev_size")
        if len(self.decoder_factors) != len(self.decoder_widths):
            raise ValueError("decoder_factors and decoder_widths must have equal length")
        if self.map_resolution * math.prod(self.decoder_factors) != self.bev_size:
            raise ValueError(
                f"decoder factors {self.decoder_factors} do not reach bev_size "
                f"{self.bev_size} from map resolution {self.map_resolution}"
            )

    def to_json(self) -> dict:
        return {
            "n_views": self.n_views,
            "image_size": self.image_size,
            "bev_size": self.bev_size,
            "out_channels": self.out_channels,
            "embed_dim": self.embed_dim,
            "n_heads": self.n_heads,
            "n_resolutions": self.n_resolutions,
            "backbone_widths": list(self.backbone_widths),
            "map_resolution": self.map_resolution,
            "decoder_factors": list(self.decoder_factors),
            "decoder_widths": list(self.decoder_widths),
            "dir_mlp_hidden": self.dir_mlp_hidden,
            "ffn_mult": self.ffn_mult,
        }

    @staticmethod
    def from_json(doc: dict) -> "CvtConfig":
        doc = dict(doc)
        for key in ("backbone_widths", "decoder_factors", "decoder_widths"):
            doc[key] = tuple(doc[key])
        return CvtConfig(**doc)


def _conv_block(c_in: int, c_out: int, stride: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, 3, stride=stride, padding=1, bias=False),
        nn.BatchNorm2d(c_out),
        nn.ReLU(inplace=True),
    )


class Backbone(nn.Module):
    """Strided encoder exposing stride-8 (coarse) and stride-4 (fine) features."""

    FEATURE_STRIDES = (8, 4)

    def __init__(self, widths: tuple[int, int, int, int], dim: int):
        super().__init__()
        w1, w2, w3, w4 = widths
        self.stem = _conv_block(3, w1, stride=2)
        self.block2 = _conv_block(w1, w2, stride=2)
        self.block3 = _conv_block(w2, w3, stride=2)
        self.block4 = _conv_block(w3, w4, stride=1)
        self.proj_coarse = nn.Conv2d(w4, dim, 1)
        self.proj_fine = nn.Conv2d(w2, dim, 1)

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        """Returns [coarse, fine] D-channel maps, coarse first."""
        x = self.stem(x)
        fine = self.block2(x)
        coarse = self.block4(self.block3(fine))
        return [self.proj_coarse(coarse), self.proj_fine(fine)]


def compute_ray_directions(
    intrinsics: torch.Tensor,
    rotations: torch.Tensor,
    feat_h: int,
    feat_w: int,
    stride: int,
) -> torch.Tensor:
    """Unit ray directions d = R^-1 K^-1 x at feature-cell pixel centers.

    intrinsics/rotations: (B, n, 3, 3); returns (B, n, feat_h*feat_w, 3).
    """
    device = intrinsics.device
    us = (torch.arange(feat_w, device=device, dtype=torch.float64) + 0.5) * stride
    vs = (torch.arange(feat_h, device=device, dtype=torch.float64) + 0.5) * stride
    vv, uu = torch.meshgrid(vs, us, indexing="ij")
    u = uu.reshape(-1)
    v = vv.reshape(-1)

    k = intrinsics.double()
    fx = k[..., 0, 0].unsqueeze(-1)
    fy = k[..., 1, 1].unsqueeze(-1)
    cx = k[..., 0, 2].unsqueeze(-1)
    cy = k[..., 1, 2].unsqueeze(-1)
    d_cam = torch.stack(
        [
            (u - cx) / fx,
            (v - cy) / fy,
            torch.ones_like(u).expand(cx.shape[0], cx.shape[1], -1),
        ],
        dim=-1,
    )  # (B, n, HW, 3)
    d_ref = torch.einsum("bnij,bnpj->bnpi", rotations.double().transpose(-1, -2), d_cam)
    d_ref = d_ref / d_ref.norm(dim=-1, keepdim=True)
    return d_ref.float()


class CrossViewAttention(nn.Module):
    """Multi-head attention with the softmax over all views' feature cells."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.scale = (dim // heads) ** -0.5
        self.to_q = nn.Linear(dim, dim, bias=False)
        self.to_k = nn.Linear(dim, dim, bias=False)
        self.to_v = nn.Linear(dim, dim, bias=False)
        self.proj = nn.Linear(dim, dim)

    def forward(self, q: torch.Tensor, k: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
        q = rearrange(self.to_q(q), "b q (m d) -> b m q d", m=self.heads)
        k = rearrange(self.to_k(k), "b k (m d) -> b m k d", m=self.heads)
        v = rearrange(self.to_v(v), "b k (m d) -> b m k d", m=self.heads)
        attn = torch.softmax(self.scale * (q @ k.transpose(-1, -2)), dim=-1)
        out = rearrange(attn @ v, "b m q d -> b q (m d)")
        return self.proj(out)


class RefinementStage(nn.Module):
    """Pre-norm attention + feed-forward block updating the map state."""

    def __init__(self, dim: int, heads: int, ffn_mult: int):
        super().__init__()
        self.norm_q = nn.LayerNorm(dim)
        self.attend = CrossViewAttention(dim, heads)
        self.norm_ffn = nn.LayerNorm(dim)
        self.ffn = nn.Sequential(
            nn.Linear(dim, ffn_mult * dim), nn.GELU(), nn.Linear(ffn_mult * dim, dim)
        )

    def forward(self, m: torch.Tensor, q_pos: torch.Tensor, k: torch.Tensor, v: torch.Tensor):
        m = m + self.attend(self.norm_q(m) + q_pos, k, v)
        return m + self.ffn(self.norm_ffn(m))


def sinusoidal_grid(dim: int, h: int, w: int) -> torch.Tensor:
    """(dim, h, w) fixed 2D sine/cosine position code."""
    quarter = dim // 4
    omega = 1.0 / (10000.0 ** (torch.arange(quarter, dtype=torch.float32) / quarter))
    ys = torch.arange(h, dtype=torch.float32)[:, None] * omega[None, :]  # (h, q)
    xs = torch.arange(w, dtype=torch.float32)[:, None] * omega[None, :]  # (w, q)
    emb_y = torch.cat([ys.sin(), ys.cos()], dim=1)  # (h, dim/2)
    emb_x = torch.cat([xs.sin(), xs.cos()], dim=1)  # (w, dim/2)
    out = torch.cat(
        [
            emb_y[:, None, :].expand(h, w, dim // 2),
            emb_x[None, :, :].expand(h, w, dim // 2),
        ],
        dim=2,
    )
    return out.permute(2, 0, 1).contiguous()


class CrossViewTransformer(nn.Module):
    arch = "cvt"

    def __init__(self, config: CvtConfig | None = None):
        super().__init__()
        self.config = config or CvtConfig()
        c = self.config
        self.backbone = Backbone(c.backbone_widths, c.embed_dim)
        self.dir_mlp = nn.Sequential(
            nn.Linear(3, c.dir_mlp_hidden), nn.ReLU(inplace=True), nn.Linear(c.dir_mlp_hidden, c.embed_dim)
        )
        self.map_queries = nn.Parameter(0.02 * torch.randn(c.embed_dim, c.map_resolution, c.map_resolution))
        self.register_buffer(
            "map_coords", sinusoidal_grid(c.embed_dim, c.map_resolution, c.map_resolution), persistent=False
        )
        self.seed_proj = nn.Conv2d(c.embed_dim + 1, c.embed_dim, 1)
        self.stages = nn.ModuleList(
            [RefinementStage(c.embed_dim, c.n_heads, c.ffn_mult) for _ in range(c.n_resolutions)]
        )
        layers: list[nn.Module] = []
        w_in = c.embed_dim
        for factor, width in zip(c.decoder_factors, c.decoder_widths):
            layers += [
                nn.Upsample(scale_factor=factor, mode="bilinear", align_corners=False),
                nn.Conv2d(w_in, width, 3, padding=1, bias=False),
                nn.BatchNorm2d(width),
                nn.ReLU(inplace=True),
            ]
            w_in = width
        layers.append(nn.Conv2d(w_in, c.out_channels, 1))
        self.decoder = nn.Sequential(*layers)

    def encode_images(self, images: torch.Tensor) -> list[torch.Tensor]:
        """Per-view multi-resolution features, shared weights across views.

        images: (B, n, 3, H, W) -> [(B, n, D, H/8, W/8), (B, n, D, H/4, W/4)][:R]
        """
        b, n = images.shape[:2]
        if images.shape[-1] != self.config.image_size or images.shape[-2] != self.config.image_size:
            raise ModelConfigError(
                f"expected {self.config.image_size}px views, got {tuple(images.shape[-2:])}"
            )
        feats = self.backbone(images.reshape(b * n, *images.shape[2:]))
        feats = [rearrange(f, "(b n) d h w -> b n d h w", b=b, n=n) for f in feats]
        return feats[: self.config.n_resolutions]

    def camera_positional_embedding(
        self, intrinsics: torch.Tensor, rotations: torch.Tensor, feat_h: int, feat_w: int, stride: int
    ) -> torch.Tensor:
        """(B, n, h*w, D) geometry embedding of unprojected feature-cell rays."""
        dirs = compute_ray_directions(intrinsics, rotations, feat_h, feat_w, stride)
        return self.dir_mlp(dirs)

    def forward(self, batch: dict) -> torch.Tensor:
        c = self.config
        images = batch["images"]
        if images.shape[1] != c.n_views:
            raise ModelConfigError(f"model configured for {c.n_views} views, got {images.shape[1]}")
        b = images.shape[0]
        feats = self.encode_images(images)

        traj = batch["trajectory"]
        pooled = F.avg_pool2d(traj, kernel_size=c.bev_size // c.map_resolution)
        query_grid = (self.map_queries + self.map_coords).unsqueeze(0).expand(b, -1, -1, -1)
        m = self.seed_proj(torch.cat([query_grid, pooled], dim=1))
        m = rearrange(m, "b d h w -> b (h w) d")
        q_pos = rearrange(query_grid, "b d h w -> b (h w) d")

        strides = Backbone.FEATURE_STRIDES[: c.n_resolutions]
        for stage, feat, stride in zip(self.stages, feats, strides):
            h, w = feat.shape[-2:]
            tokens = rearrange(feat, "b n d h w -> b (n h w) d")
            cam_embed = self.camera_positional_embedding(
                batch["intrinsics"], batch["rotations"], h, w, stride
            )
            keys = tokens + rearrange(cam_embed, "b n p d -> b (n p) d")
            m = stage(m, q_pos, keys, tokens)

        grid = rearrange(m, "b (h w) d -> b d h w", h=c.map_resolution, w=c.map_resolution)
        return self.decoder(grid)
