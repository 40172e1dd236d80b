"""Ego-centered BEV rasters: analytic ground truth and the sparse route input.

The grid is heading-aligned: forward is up (decreasing row), left is
decreasing column offset from the anchor. The anchor cell sits below the
grid center so most of the extent lies ahead of the ego.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .render import points_on_lane, points_on_road
from .routing import EgoPose, Route
from .town import TownMap

CH_ROAD = 0
CH_LANE = 1
CH_TRAJ = 2
CHANNEL_NAMES = ("road", "lane", "trajectory")


@dataclass(frozen=True)
class GridSpec:
    height: int = 128
    width: int = 128
    meters_per_cell: float = 0.25
    anchor_row: int = 96
    anchor_col: int = 64

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.meters_per_cell <= 0:
            raise ValueError(f"bad grid spec {self}")

    def cell_centers_ego(self) -> np.ndarray:
        """(H, W, 2) arrays of (forward, left) offsets of cell centers."""
        rows = np.arange(self.height)
        cols = np.arange(self.width)
        fwd = (self.anchor_row - rows) * self.meters_per_cell
        left = (self.anchor_col - cols) * self.meters_per_cell
        ff, ll = np.meshgrid(fwd, left, indexing="ij")
        return np.stack([ff, ll], axis=-1)

    def ego_to_cell(self, fwd_left: np.ndarray) -> np.ndarray:
        """Fractional (row, col) coordinates of ego-frame (forward, left) points."""
        fl = np.asarray(fwd_left, dtype=float).reshape(-1, 2)
        rows = self.anchor_row - fl[:, 0] / self.meters_per_cell
        cols = self.anchor_col - fl[:, 1] / self.meters_per_cell
        return np.stack([rows, cols], axis=1)

    def to_json(self) -> dict:
        return {
            "height": self.height,
            "width": self.width,
            "meters_per_cell": self.meters_per_cell,
            "anchor_row": self.anchor_row,
            "anchor_col": self.anchor_col,
        }

    @staticmethod
    def from_json(doc: dict) -> "GridSpec":
        return GridSpec(**doc)


@dataclass
class BEVGrid:
    data: np.ndarray  # (3, H, W) uint8 in {0, 1}
    spec: GridSpec

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.uint8)
        if self.data.shape != (3, self.spec.height, self.spec.width):
            raise ValueError(f"grid data shape {self.data.shape} does not match spec {self.spec}")

    @property
    def road(self) -> np.ndarray:
        return self.data[CH_ROAD]

    @property
    def lane(self) -> np.ndarray:
        return self.data[CH_LANE]

    @property
    def trajectory(self) -> np.ndarray:
        return self.data[CH_TRAJ]


def _ego_to_world(pts_ego: np.ndarray, ego: EgoPose) -> np.ndarray:
    c, s = np.cos(ego.heading_rad), np.sin(ego.heading_rad)
    f, l = pts_ego[..., 0], pts_ego[..., 1]
    return np.stack([ego.x + c * f - s * l, ego.y + s * f + c * l], axis=-1)


def _world_to_ego(pts_world: np.ndarray, ego: EgoPose) -> np.ndarray:
    c, s = np.cos(ego.heading_rad), np.sin(ego.heading_rad)
    dx = pts_world[..., 0] - ego.x
    dy = pts_world[..., 1] - ego.y
    return np.stack([c * dx + s * dy, -s * dx + c * dy], axis=-1)


def cell_centers_world(spec: GridSpec, ego: EgoPose) -> np.ndarray:
    """(H, W, 2) world coordinates of all cell centers."""
    return _ego_to_world(spec.cell_centers_ego(), ego)


def _near_polyline(pts: np.ndarray, line: np.ndarray, radius: float) -> np.ndarray:
    from .render import _dist_sq_to_segment  # shared distance kernel

    near = np.zeros(len(pts), dtype=bool)
    if len(line) == 1:
        diff = pts - line[0]
        return np.einsum("ij,ij->i", diff, diff) <= radius * radius
    for k in range(len(line) - 1):
        todo = ~near
        if not todo.any():
            break
        near[todo] |= _dist_sq_to_segment(pts[todo], line[k], line[k + 1]) <= radius * radius
    return near


def rasterize_bev_gt(
    town: TownMap,
    route: Route,
    ego: EgoPose,
    spec: GridSpec | None = None,
    trajectory_halfwidth: float = 0.5,
) -> BEVGrid:
    """Analytic 3-channel ground truth: road, lane markings, dense route ribbon."""
    spec = spec or GridSpec()
    centers = cell_centers_world(spec, ego).reshape(-1, 2)
    data = np.zeros((3, spec.height, spec.width), dtype=np.uint8)
    shape = (spec.height, spec.width)
    data[CH_ROAD] = points_on_road(town, centers).reshape(shape)
    data[CH_LANE] = points_on_lane(town, centers).reshape(shape)
    if len(route.waypoints) >= 1:
        data[CH_TRAJ] = _near_polyline(centers, route.waypoints, trajectory_halfwidth).reshape(shape)
    return BEVGrid(data=data, spec=spec)


def rasterize_sparse_trajectory(route: Route, ego: EgoPose, spec: GridSpec | None = None) -> np.ndarray:
    """Model-input raster: route waypoints as filled discs of radius one cell."""
    spec = spec or GridSpec()
    raster = np.zeros((spec.height, spec.width), dtype=np.uint8)
    if len(route.waypoints) == 0:
        return raster
    wp_ego = _world_to_ego(route.waypoints, ego)
    # keep only waypoints that can touch the grid
    half_diag = 0.5 * spec.meters_per_cell * np.hypot(spec.height, spec.width)
    keep = np.linalg.norm(wp_ego, axis=1) <= half_diag + 2 * spec.meters_per_cell + np.linalg.norm(
        [spec.anchor_row - spec.height / 2, spec.anchor_col - spec.width / 2]
    ) * spec.meters_per_cell
    wp_ego = wp_ego[keep]
    if len(wp_ego) == 0:
        return raster
    centers = spec.cell_centers_ego().reshape(-1, 2)
    radius = spec.meters_per_cell
    d_sq = ((centers[:, None, :] - wp_ego[None, :, :]) ** 2).sum(axis=2)
    raster.reshape(-1)[:] = (d_sq.min(axis=1) <= radius * radius).astype(np.uint8)
    return raster
