"""Per-channel IoU aggregation and per-route segment traces.

Single-sample IoUs with an empty union are undefined for that channel and
skipped in the mean; the per-channel sample counts make the convention
auditable in every report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .synthworld.grids import CH_LANE, CH_ROAD, CH_TRAJ

SEGMENT_STRAIGHT = "straight"
SEGMENT_TURN = "turn"
SEGMENT_INTERSECTION = "intersection"

TURN_CURVATURE = 0.05  # rad/m
TURN_WINDOW = 4.0  # m
INTERSECTION_RADIUS = 8.0  # m


def binarize(logits, threshold: float = 0.5) -> np.ndarray:
    """Prediction mask: sigmoid(logit) > threshold (strict)."""
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    if hasattr(logits, "detach"):  # torch tensor
        logits = logits.detach().cpu().numpy()
    x = np.asarray(logits, dtype=float)
    p = np.empty_like(x)
    pos = x >= 0
    p[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    p[~pos] = ex / (1.0 + ex)
    return p > threshold


def iou_single(pred: np.ndarray, gt: np.ndarray) -> float:
    """IoU of two binary masks; NaN when the union is empty."""
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    pred = pred.astype(bool)
    gt = gt.astype(bool)
    union = int((pred | gt).sum())
    if union == 0:
        return math.nan
    return float((pred & gt).sum()) / union


@dataclass
class ChannelIoU:
    road: float
    trajectory: float
    lane: float
    n_road: int = 1
    n_trajectory: int = 1
    n_lane: int = 1

    def as_row(self) -> dict:
        return {
            "road": None if math.isnan(self.road) else self.road,
            "trajectory": None if math.isnan(self.trajectory) else self.trajectory,
            "lane": None if math.isnan(self.lane) else self.lane,
            "n_road": self.n_road,
            "n_trajectory": self.n_trajectory,
            "n_lane": self.n_lane,
        }

    @staticmethod
    def from_row(doc: dict) -> "ChannelIoU":
        def val(v):
            return math.nan if v is None else float(v)

        return ChannelIoU(
            road=val(doc["road"]),
            trajectory=val(doc["trajectory"]),
            lane=val(doc["lane"]),
            n_road=doc.get("n_road", 1),
            n_trajectory=doc.get("n_trajectory", 1),
            n_lane=doc.get("n_lane", 1),
        )


def iou_per_channel(pred: np.ndarray, gt: np.ndarray) -> ChannelIoU:
    """Per-channel IoU of one (3, H, W) prediction against ground truth."""
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape or pred.ndim != 3 or pred.shape[0] != 3:
        raise ValueError(f"expected matching (3, H, W) masks, got {pred.shape} vs {gt.shape}")
    vals = {ch: iou_single(pred[ch], gt[ch]) for ch in (CH_ROAD, CH_LANE, CH_TRAJ)}
    return ChannelIoU(
        road=vals[CH_ROAD],
        trajectory=vals[CH_TRAJ],
        lane=vals[CH_LANE],
        n_road=int(not math.isnan(vals[CH_ROAD])),
        n_trajectory=int(not math.isnan(vals[CH_TRAJ])),
        n_lane=int(not math.isnan(vals[CH_LANE])),
    )


def mean_iou(samples: list[ChannelIoU]) -> ChannelIoU:
    """Arithmetic mean over samples whose channel union was nonempty."""

    def agg(values: list[float]) -> tuple[float, int]:
        defined = [v for v in values if not math.isnan(v)]
        if not defined:
            return math.nan, 0
        return float(np.mean(defined)), len(defined)

    road, n_road = agg([s.road for s in samples])
    traj, n_traj = agg([s.trajectory for s in samples])
    lane, n_lane = agg([s.lane for s in samples])
    return ChannelIoU(
        road=road, trajectory=traj, lane=lane, n_road=n_road, n_trajectory=n_traj, n_lane=n_lane
    )


def _polyline_cumlen(points: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def _heading_at(points: np.ndarray, cum: np.ndarray, s: float) -> float:
    s = min(max(s, 0.0), cum[-1])
    k = int(np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(points) - 2))
    d = points[k + 1] - points[k]
    return math.atan2(d[1], d[0])


def _nearest_arc_position(points: np.ndarray, cum: np.ndarray, p: np.ndarray) -> float:
    best_s, best_d = 0.0, math.inf
    for k in range(len(points) - 1):
        a, b = points[k], points[k + 1]
        d = b - a
        den = float(d @ d)
        t = 0.0 if den == 0 else float(np.clip((p - a) @ d / den, 0.0, 1.0))
        proj = a + t * d
        dist = float(np.linalg.norm(p - proj))
        if dist < best_d:
            best_d = dist
            best_s = cum[k] + t * math.sqrt(den)
    return best_s


def label_route_frames(
    route_waypoints: np.ndarray,
    frame_positions: np.ndarray,
    nodes: np.ndarray | None = None,
    node_degrees: np.ndarray | None = None,
) -> list[str]:
    """Segment label per frame: intersection beats turn beats straight.

    A frame is a turn when the route heading changes faster than
    TURN_CURVATURE over a TURN_WINDOW around the frame's arc position, and
    an intersection when a graph node of degree >= 3 lies within
    INTERSECTION_RADIUS.
    """
    route_waypoints = np.asarray(route_waypoints, dtype=float)
    frame_positions = np.asarray(frame_positions, dtype=float).reshape(-1, 2)
    junctions = None
    if nodes is not None and node_degrees is not None and len(nodes):
        junctions = np.asarray(nodes, dtype=float)[np.asarray(node_degrees) >= 3]

    labels = []
    if len(route_waypoints) < 2:
        return [SEGMENT_STRAIGHT] * len(frame_positions)
    cum = _polyline_cumlen(route_waypoints)
    half = TURN_WINDOW / 2.0
    for p in frame_positions:
        if junctions is not None and len(junctions):
            if np.linalg.norm(junctions - p, axis=1).min() <= INTERSECTION_RADIUS:
                labels.append(SEGMENT_INTERSECTION)
                continue
        s = _nearest_arc_position(route_waypoints, cum, p)
        lo, hi = max(0.0, s - half), min(float(cum[-1]), s + half)
        if hi - lo < 1e-9:
            labels.append(SEGMENT_STRAIGHT)
            continue
        dtheta = _heading_at(route_waypoints, cum, hi) - _heading_at(route_waypoints, cum, lo)
        dtheta = abs(math.remainder(dtheta, math.tau))
        labels.append(SEGMENT_TURN if dtheta / (hi - lo) > TURN_CURVATURE else SEGMENT_STRAIGHT)
    return labels


@dataclass
class SegmentTrace:
    values: list[float]  # per-frame mean IoU over defined channels
    labels: list[str]

    def to_json(self) -> dict:
        return {
            "values": [None if math.isnan(v) else v for v in self.values],
            "labels": self.labels,
        }

    @staticmethod
    def from_json(doc: dict) -> "SegmentTrace":
        return SegmentTrace(
            values=[math.nan if v is None else float(v) for v in doc["values"]],
            labels=list(doc["labels"]),
        )


def segment_trace(per_frame: list[ChannelIoU], labels: list[str]) -> SegmentTrace:
    """Per-frame mean-over-channels IoU annotated with segment labels."""
    if len(per_frame) != len(labels):
        raise ValueError(f"{len(per_frame)} frames but {len(labels)} labels")
    values = []
    for s in per_frame:
        defined = [v for v in (s.road, s.trajectory, s.lane) if not math.isnan(v)]
        values.append(float(np.mean(defined)) if defined else math.nan)
    return SegmentTrace(values=values, labels=labels)


@dataclass
class MetricsReport:
    model: str
    split: str
    overall: ChannelIoU
    per_route: dict[str, ChannelIoU] = field(default_factory=dict)
    traces: dict[str, SegmentTrace] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "split": self.split,
            "overall": self.overall.as_row(),
            "per_route": {k: v.as_row() for k, v in self.per_route.items()},
            "traces": {k: v.to_json() for k, v in self.traces.items()},
        }

    @staticmethod
    def from_json(doc: dict) -> "MetricsReport":
        return MetricsReport(
            model=doc["model"],
            split=doc["split"],
            overall=ChannelIoU.from_row(doc["overall"]),
            per_route={k: ChannelIoU.from_row(v) for k, v in doc.get("per_route", {}).items()},
            traces={k: SegmentTrace.from_json(v) for k, v in doc.get("traces", {}).items()},
        )
