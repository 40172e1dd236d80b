"""Route planning over the town graph and ego poses along a route."""

from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .town import TownMap


class NoRouteError(ValueError):
    """Start and goal are not connected in the town graph."""


@dataclass
class Route:
    waypoints: np.ndarray  # (N, 2) world points on the ground plane
    spacing: float

    def length(self) -> float:
        if len(self.waypoints) < 2:
            return 0.0
        return float(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1).sum())


@dataclass
class EgoPose:
    x: float
    y: float
    heading_rad: float  # CCW from world +X, in [-pi, pi)
    index: int = 0

    def __post_init__(self):
        self.heading_rad = math.remainder(self.heading_rad, math.tau)
        if self.heading_rad >= math.pi:  # remainder returns (-pi, pi]
            self.heading_rad -= math.tau

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


def _resample_polyline(points: np.ndarray, spacing: float) -> np.ndarray:
    """Resample each segment at ~spacing steps, preserving the vertices.

    Keeping the vertices means the resampled length equals the polyline
    length exactly, and every gap stays within [0.5, 1.5] x spacing.
    """
    total = np.linalg.norm(np.diff(points, axis=0), axis=1).sum()
    if total < 0.5 * spacing:
        return points[:1].copy()
    out = [points[0]]
    for k in range(len(points) - 1):
        a, b = points[k], points[k + 1]
        length = float(np.linalg.norm(b - a))
        if length == 0.0:
            continue
        n_seg = max(1, int(round(length / spacing)))
        for i in range(1, n_seg + 1):
            out.append(a + (b - a) * (i / n_seg))
    return np.array(out)


def plan_route(town: TownMap, start: int, goal: int, spacing: float = 2.0) -> Route:
    """Shortest path between two graph nodes, resampled at `spacing` meters."""
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    n = len(town.nodes)
    if not (0 <= start < n and 0 <= goal < n):
        raise ValueError(f"node ids must be in [0, {n}), got {start}, {goal}")
    if start == goal:
        return Route(waypoints=town.nodes[start : start + 1].copy(), spacing=spacing)
    gr = town.graph()
    try:
        path = nx.shortest_path(gr, start, goal, weight="weight")
    except nx.NetworkXNoPath as exc:
        raise NoRouteError(f"no route from node {start} to node {goal}") from exc
    return Route(waypoints=_resample_polyline(town.nodes[list(path)], spacing), spacing=spacing)


def _arc_position(points: np.ndarray, s: float) -> tuple[np.ndarray, float]:
    """Point and tangent heading at arc length s along a polyline."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = min(max(s, 0.0), cum[-1])
    k = min(np.searchsorted(cum, s, side="right") - 1, len(seg) - 1)
    k = max(k, 0)
    d = points[k + 1] - points[k]
    t = 0.0 if seg[k] == 0 else (s - cum[k]) / seg[k]
    pos = points[k] + t * d
    heading = math.atan2(d[1], d[0])
    return pos, heading


def ego_poses_along_route(route: Route, n_frames: int) -> list[EgoPose]:
    """n ego poses at equal arc steps (cell-centered, so endpoints are avoided)."""
    if n_frames < 1:
        raise ValueError(f"n_frames must be >= 1, got {n_frames}")
    pts = route.waypoints
    if len(pts) < 2:
        x, y = (pts[0] if len(pts) else (0.0, 0.0))
        return [EgoPose(float(x), float(y), 0.0, index=i) for i in range(n_frames)]
    total = route.length()
    poses = []
    for i in range(n_frames):
        s = (i + 0.5) * total / n_frames
        pos, heading = _arc_position(pts, s)
        poses.append(EgoPose(float(pos[0]), float(pos[1]), heading, index=i))
    return poses
