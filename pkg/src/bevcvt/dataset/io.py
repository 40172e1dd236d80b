"""On-disk sample format.

Layout (one directory per frame):

    root/<town>/<route>/frame_<idx>/
        left.png center.png right.png rear.png   8-bit RGB semantic views
        trajectory.png                           8-bit gray, 0/255
        bev_gt.png                               8-bit RGB, 0/255 per channel
                                                 (R=road, G=lane, B=trajectory)
        meta.json                                ego pose, grid spec, calibration

All rasters round-trip bit-exactly (PNG is lossless); calibration floats
round-trip exactly through JSON repr.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from ..geometry import CameraModel, camera_from_json, camera_to_json
from ..synthworld import BEVGrid, EgoPose, GridSpec
from ..synthworld.rig import REAR_VIEW_NAME

META_VERSION = 1


class SampleLoadError(Exception):
    """A sample directory is missing files or contains inconsistent data."""


@dataclass(frozen=True)
class SampleId:
    town: str
    route: str
    frame: int

    @property
    def frame_dirname(self) -> str:
        return f"frame_{self.frame:05d}"

    def path(self, root: Path) -> Path:
        return Path(root) / self.town / self.route / self.frame_dirname


@dataclass
class Sample:
    views: list[tuple[np.ndarray, CameraModel]]  # (H, W, 3) uint8 + ego-relative camera
    trajectory_raster: np.ndarray  # (H, W) uint8 in {0, 1}
    bev_gt: BEVGrid
    ego: EgoPose
    ids: SampleId

    @property
    def n_views(self) -> int:
        return len(self.views)

    def view_names(self) -> list[str]:
        return [cam.name for _, cam in self.views]


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def write_sample(sample: Sample, root: Path) -> Path:
    """Write one sample; returns its frame directory."""
    frame_dir = sample.ids.path(Path(root))
    frame_dir.mkdir(parents=True, exist_ok=True)
    for img, cam in sample.views:
        Image.fromarray(img, mode="RGB").save(frame_dir / f"{cam.name}.png")
    Image.fromarray((sample.trajectory_raster * 255).astype(np.uint8), mode="L").save(
        frame_dir / "trajectory.png"
    )
    bev_rgb = (sample.bev_gt.data * 255).astype(np.uint8).transpose(1, 2, 0)
    Image.fromarray(bev_rgb, mode="RGB").save(frame_dir / "bev_gt.png")
    meta = {
        "version": META_VERSION,
        "ids": {"town": sample.ids.town, "route": sample.ids.route, "frame": sample.ids.frame},
        "ego": {
            "x": sample.ego.x,
            "y": sample.ego.y,
            "heading_rad": sample.ego.heading_rad,
            "index": sample.ego.index,
        },
        "grid_spec": sample.bev_gt.spec.to_json(),
        "views": [camera_to_json(cam) for _, cam in sample.views],
    }
    (frame_dir / "meta.json").write_text(_dump_json(meta))
    return frame_dir


def read_sample(frame_dir: Path) -> Sample:
    """Read a sample directory; raises SampleLoadError naming the bad file."""
    frame_dir = Path(frame_dir)
    meta_path = frame_dir / "meta.json"
    if not meta_path.exists():
        raise SampleLoadError(f"missing metadata file {meta_path}")
    meta = json.loads(meta_path.read_text())
    if meta.get("version") != META_VERSION:
        raise SampleLoadError(f"unsupported sample version in {meta_path}")

    grid_spec = GridSpec.from_json(meta["grid_spec"])
    views: list[tuple[np.ndarray, CameraModel]] = []
    for record in meta["views"]:
        cam = camera_from_json(record)
        view_path = frame_dir / f"{cam.name}.png"
        if not view_path.exists():
            raise SampleLoadError(f"missing view file {view_path}")
        img = np.asarray(Image.open(view_path).convert("RGB"))
        if img.shape != (cam.height, cam.width, 3):
            raise SampleLoadError(
                f"view {view_path} has shape {img.shape}, expected {(cam.height, cam.width, 3)}"
            )
        views.append((img, cam))

    traj_path = frame_dir / "trajectory.png"
    if not traj_path.exists():
        raise SampleLoadError(f"missing trajectory raster {traj_path}")
    traj_img = Image.open(traj_path)
    if traj_img.mode != "L":
        raise SampleLoadError(f"trajectory raster {traj_path} must be 8-bit gray, got {traj_img.mode}")
    traj = (np.asarray(traj_img) > 127).astype(np.uint8)
    if traj.shape != (grid_spec.height, grid_spec.width):
        raise SampleLoadError(
            f"trajectory raster {traj_path} has shape {traj.shape}, "
            f"expected {(grid_spec.height, grid_spec.width)}"
        )

    bev_path = frame_dir / "bev_gt.png"
    if not bev_path.exists():
        raise SampleLoadError(f"missing ground-truth grid {bev_path}")
    bev_img = Image.open(bev_path)
    if bev_img.mode != "RGB":
        raise SampleLoadError(f"ground truth {bev_path} must have 3 channels, got mode {bev_img.mode}")
    bev = (np.asarray(bev_img) > 127).astype(np.uint8).transpose(2, 0, 1)
    if bev.shape != (3, grid_spec.height, grid_spec.width):
        raise SampleLoadError(
            f"ground truth {bev_path} has shape {bev.shape}, "
            f"expected {(3, grid_spec.height, grid_spec.width)}"
        )

    ego = EgoPose(
        x=meta["ego"]["x"],
        y=meta["ego"]["y"],
        heading_rad=meta["ego"]["heading_rad"],
        index=meta["ego"]["index"],
    )
    ids = SampleId(town=meta["ids"]["town"], route=meta["ids"]["route"], frame=meta["ids"]["frame"])
    return Sample(
        views=views,
        trajectory_raster=traj,
        bev_gt=BEVGrid(data=bev, spec=grid_spec),
        ego=ego,
        ids=ids,
    )


def drop_rear_view(sample: Sample) -> Sample:
    """Sample with the rear view removed; everything else untouched."""
    kept = [(img, cam) for img, cam in sample.views if cam.name != REAR_VIEW_NAME]
    if len(kept) == len(sample.views):
        raise ValueError(f"sample {sample.ids} has no '{REAR_VIEW_NAME}' view to drop")
    return Sample(
        views=kept,
        trajectory_raster=sample.trajectory_raster,
        bev_gt=sample.bev_gt,
        ego=sample.ego,
        ids=sample.ids,
    )
