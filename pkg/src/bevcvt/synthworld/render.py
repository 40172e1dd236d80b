"""Exact multi-camera semantic rendering by ray-casting onto the ground plane.

Each pixel ray is intersected with z = 0 and the hit point is classified
against the town's lane markings (first) and road polygons. There is no
rasterization approximation: the rendered class of a pixel is exactly the
class of its center ray's ground intersection.
"""

from __future__ import annotations

import numpy as np

from ..geometry import CameraModel, ray_ground_intersections
from .rig import compose_with_ego
from .routing import EgoPose
from .town import TownMap

LABEL_OFFROAD = 0
LABEL_ROAD = 1
LABEL_LANE = 2
LABEL_SKY = 3

# offroad terrain, road surface, lane marking, sky
PALETTE = np.array(
    [
        [145, 170, 100],
        [128, 64, 128],
        [157, 234, 50],
        [70, 130, 180],
    ],
    dtype=np.uint8,
)


def _points_in_polygon(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd rule point-in-polygon test, vectorized over points."""
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = (x2 - x1) * (y - y1) / (y2 - y1) + x1
        inside ^= crosses & (x < x_at)
    return inside


def _dist_sq_to_segment(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    den = float(d @ d)
    if den == 0.0:
        diff = pts - a
        return np.einsum("ij,ij->i", diff, diff)
    t = np.clip(((pts - a) @ d) / den, 0.0, 1.0)
    diff = pts - (a + t[:, None] * d)
    return np.einsum("ij,ij->i", diff, diff)


def points_on_road(town: TownMap, pts: np.ndarray) -> np.ndarray:
    """True where a point lies inside any road polygon."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    on = np.zeros(len(pts), dtype=bool)
    for poly in town.road_polygons:
        todo = ~on
        if not todo.any():
            break
        lo = poly.min(axis=0)
        hi = poly.max(axis=0)
        box = todo & (pts[:, 0] >= lo[0]) & (pts[:, 0] <= hi[0]) & (pts[:, 1] >= lo[1]) & (pts[:, 1] <= hi[1])
        if box.any():
            on[box] |= _points_in_polygon(pts[box], poly)
    return on


def points_on_lane(town: TownMap, pts: np.ndarray) -> np.ndarray:
    """True where a point is within half a marking width of a lane polyline."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    on = np.zeros(len(pts), dtype=bool)
    for lane in town.lane_polylines:
        r_sq = (lane.width / 2.0) ** 2
        for k in range(len(lane.points) - 1):
            todo = ~on
            if not todo.any():
                return on
            on[todo] |= _dist_sq_to_segment(pts[todo], lane.points[k], lane.points[k + 1]) <= r_sq
    return on


def classify_ground_points(town: TownMap, pts: np.ndarray) -> np.ndarray:
    """Semantic label per ground point: lane beats road beats offroad."""
    labels = np.full(len(np.atleast_2d(pts)), LABEL_OFFROAD, dtype=np.uint8)
    road = points_on_road(town, pts)
    labels[road] = LABEL_ROAD
    lane = points_on_lane(town, pts)
    labels[lane] = LABEL_LANE
    return labels


def pixel_center_grid(width: int, height: int) -> np.ndarray:
    """(H*W, 2) pixel-center coordinates in row-major order."""
    us = np.arange(width) + 0.5
    vs = np.arange(height) + 0.5
    uu, vv = np.meshgrid(us, vs)
    return np.stack([uu.ravel(), vv.ravel()], axis=1)


def render_camera_labels(town: TownMap, cam_world: CameraModel) -> np.ndarray:
    """(H, W) label image for a world-frame camera."""
    qs = pixel_center_grid(cam_world.width, cam_world.height)
    pts, hit = ray_ground_intersections(qs, cam_world)
    labels = np.full(len(qs), LABEL_SKY, dtype=np.uint8)
    if hit.any():
        labels[hit] = classify_ground_points(town, pts[hit][:, :2])
    return labels.reshape(cam_world.height, cam_world.width)


def render_camera_view(town: TownMap, cam: CameraModel, ego: EgoPose) -> np.ndarray:
    """(H, W, 3) RGB semantic view for an ego-relative camera at an ego pose."""
    labels = render_camera_labels(town, compose_with_ego(cam, ego))
    return PALETTE[labels]
