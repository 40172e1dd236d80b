"""Batching: samples -> torch tensors, with deterministic shuffling."""

from __future__ import annotations

from pathlib import Path
from typing import Iterator

import numpy as np
import torch

from .io import Sample, SampleLoadError, drop_rear_view, read_sample
from .splits import SplitManifest


def frame_dirs_for_split(root: Path, manifest: SplitManifest, split: str) -> list[Path]:
    """All frame directories of a split, in (town, route, frame) order."""
    root = Path(root)
    dirs: list[Path] = []
    for town, route in manifest.split(split):
        route_dir = root / town / route
        if not route_dir.is_dir():
            raise SampleLoadError(f"missing route directory {route_dir}")
        dirs.extend(sorted(d for d in route_dir.iterdir() if d.is_dir() and d.name.startswith("frame_")))
    return dirs


def load_samples(paths: list[Path], n_views: int | None = None) -> list[Sample]:
    samples = []
    for p in paths:
        s = read_sample(p)
        if n_views is not None and s.n_views != n_views:
            if n_views == s.n_views - 1:
                s = drop_rear_view(s)
            else:
                raise SampleLoadError(
                    f"sample {p} has {s.n_views} views, cannot provide {n_views}"
                )
        samples.append(s)
    return samples


def collate_samples(samples: list[Sample]) -> dict:
    """Stack samples into a training batch of float32 tensors.

    Images are normalized to [0, 1]; calibration is ego-relative.
    """
    images = torch.stack(
        [
            torch.stack([torch.from_numpy(img.copy()).permute(2, 0, 1) for img, _ in s.views])
            for s in samples
        ]
    ).float() / 255.0
    intrinsics = torch.stack(
        [
            torch.stack([torch.from_numpy(cam.intrinsics.matrix) for _, cam in s.views])
            for s in samples
        ]
    ).float()
    rotations = torch.stack(
        [
            torch.stack([torch.from_numpy(cam.extrinsics.rotation) for _, cam in s.views])
            for s in samples
        ]
    ).float()
    translations = torch.stack(
        [
            torch.stack([torch.from_numpy(cam.extrinsics.translation) for _, cam in s.views])
            for s in samples
        ]
    ).float()
    trajectory = torch.stack(
        [torch.from_numpy(s.trajectory_raster.copy()) for s in samples]
    ).unsqueeze(1).float()
    bev_gt = torch.stack([torch.from_numpy(s.bev_gt.data.copy()) for s in samples]).float()
    ego_xy = torch.tensor([[s.ego.x, s.ego.y] for s in samples], dtype=torch.float64)
    return {
        "images": images,
        "intrinsics": intrinsics,
        "rotations": rotations,
        "translations": translations,
        "trajectory": trajectory,
        "bev_gt": bev_gt,
        "ego_xy": ego_xy,
        "ids": [s.ids for s in samples],
    }


def iter_batches(
    root: Path,
    manifest: SplitManifest,
    split: str,
    batch_size: int,
    n_views: int | None = None,
    shuffle: bool = False,
    seed: int = 0,
    epoch: int = 0,
) -> Iterator[dict]:
    """Deterministic batch stream: fixed (seed, epoch) gives a fixed order."""
    paths = frame_dirs_for_split(root, manifest, split)
    order = np.arange(len(paths))
    if shuffle:
        order = np.random.default_rng((seed, epoch)).permutation(len(paths))
    for start in range(0, len(paths), batch_size):
        chunk = [paths[i] for i in order[start : start + batch_size]]
        yield collate_samples(load_samples(chunk, n_views=n_views))
