"""Procedural town generation: a jittered block grid of roads with lane markings.

A town is a planar graph of drivable waypoints (the block-grid intersections),
one rectangular road polygon per edge, and one center-line lane marking per
edge (inset from the junctions). Everything is deterministic in (seed, spec).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import networkx as nx
import numpy as np


@dataclass(frozen=True)
class TownSpec:
    """Generation parameters. At least a 2x2 block grid is required."""

    blocks_x: int = 3
    blocks_y: int = 3
    block_size_range: tuple[float, float] = (30.0, 50.0)
    node_jitter: float = 2.5
    road_width: float = 7.0
    lane_marking_width: float = 0.3
    drop_edge_fraction: float = 0.15

    def validate(self):
        if self.blocks_x < 2 or self.blocks_y < 2:
            raise ValueError(f"need at least a 2x2 block grid, got {self.blocks_x}x{self.blocks_y}")
        lo, hi = self.block_size_range
        if not (0 < lo <= hi):
            raise ValueError(f"bad block_size_range {self.block_size_range}")
        if self.road_width <= 0 or self.lane_marking_width <= 0:
            raise ValueError("road and marking widths must be positive")
        if self.node_jitter * 4 >= lo:
            raise ValueError("node_jitter too large for the smallest block")


@dataclass
class LanePolyline:
    points: np.ndarray  # (M, 2)
    width: float


@dataclass
class TownMap:
    seed: int
    spec: TownSpec
    nodes: np.ndarray  # (N, 2) waypoint positions
    edges: list[tuple[int, int]]
    road_polygons: list[np.ndarray]  # each (K, 2), counter-clockwise
    lane_polylines: list[LanePolyline]
    extent: tuple[float, float]

    def graph(self) -> nx.Graph:
        gr = nx.Graph()
        gr.add_nodes_from(range(len(self.nodes)))
        for a, b in self.edges:
            gr.add_edge(a, b, weight=float(np.linalg.norm(self.nodes[a] - self.nodes[b])))
        return gr

    def node_degrees(self) -> np.ndarray:
        deg = np.zeros(len(self.nodes), dtype=int)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg


def _edge_rectangle(a: np.ndarray, b: np.ndarray, width: float) -> np.ndarray:
    u = b - a
    u = u / np.linalg.norm(u)
    # extend past the nodes by half a width: junction apron, keeps jittered
    # nodes and route ribbons on pavement at corners
    a = a - u * (width / 2.0)
    b = b + u * (width / 2.0)
    n = np.array([-u[1], u[0]]) * (width / 2.0)
    return np.array([a - n, b - n, b + n, a + n])


def _marking_for_edge(a: np.ndarray, b: np.ndarray, spec: TownSpec) -> LanePolyline | None:
    u = b - a
    length = np.linalg.norm(u)
    inset = spec.road_width * 0.75
    if length <= 2.0 * inset + 1.0:
        return None
    u = u / length
    return LanePolyline(points=np.array([a + u * inset, b - u * inset]), width=spec.lane_marking_width)


def generate_town(seed: int, spec: TownSpec | None = None) -> TownMap:
    """Deterministic town from (seed, spec).

    The full block grid always contains four-way intersections (interior
    nodes) and T-junctions (boundary nodes); edge dropping preserves at
    least one of each, connectivity, and minimum degree 2.
    """
    spec = spec or TownSpec()
    spec.validate()
    rng = np.random.default_rng(seed)

    nx_nodes = spec.blocks_x + 1
    ny_nodes = spec.blocks_y + 1
    lo, hi = spec.block_size_range
    xs = np.concatenate([[0.0], np.cumsum(rng.uniform(lo, hi, spec.blocks_x))])
    ys = np.concatenate([[0.0], np.cumsum(rng.uniform(lo, hi, spec.blocks_y))])
    xs -= xs[-1] / 2.0
    ys -= ys[-1] / 2.0

    nodes = np.zeros((nx_nodes * ny_nodes, 2))
    for j in range(ny_nodes):
        for i in range(nx_nodes):
            idx = j * nx_nodes + i
            jitter = rng.uniform(-spec.node_jitter, spec.node_jitter, 2)
            nodes[idx] = (xs[i] + jitter[0], ys[j] + jitter[1])

    edges = []
    for j in range(ny_nodes):
        for i in range(nx_nodes):
            idx = j * nx_nodes + i
            if i + 1 < nx_nodes:
                edges.append((idx, idx + 1))
            if j + 1 < ny_nodes:
                edges.append((idx, idx + nx_nodes))

    # drop a deterministic subset of edges, preserving the junction inventory
    n_drop = int(spec.drop_edge_fraction * len(edges))
    candidates = list(edges)
    rng.shuffle(candidates)
    dropped = 0
    for cand in candidates:
        if dropped >= n_drop:
            break
        trial = [e for e in edges if e != cand]
        deg = np.zeros(len(nodes), dtype=int)
        for a, b in trial:
            deg[a] += 1
            deg[b] += 1
        if deg.min() < 2 or (deg == 4).sum() < 1 or (deg == 3).sum() < 1:
            continue
        gr = nx.Graph(trial)
        gr.add_nodes_from(range(len(nodes)))
        if not nx.is_connected(gr):
            continue
        edges = trial
        dropped += 1

    road_polygons = [_edge_rectangle(nodes[a], nodes[b], spec.road_width) for a, b in edges]
    lane_polylines = [
        m for a, b in edges if (m := _marking_for_edge(nodes[a], nodes[b], spec)) is not None
    ]

    all_pts = np.concatenate(road_polygons)
    extent = (
        float(all_pts[:, 0].max() - all_pts[:, 0].min()),
        float(all_pts[:, 1].max() - all_pts[:, 1].min()),
    )
    return TownMap(
        seed=seed,
        spec=spec,
        nodes=nodes,
        edges=edges,
        road_polygons=road_polygons,
        lane_polylines=lane_polylines,
        extent=extent,
    )


def town_to_json(town: TownMap) -> str:
    doc = {
        "seed": town.seed,
        "spec": {
            "blocks_x": town.spec.blocks_x,
            "blocks_y": town.spec.blocks_y,
            "block_size_range": list(town.spec.block_size_range),
            "node_jitter": town.spec.node_jitter,
            "road_width": town.spec.road_width,
            "lane_marking_width": town.spec.lane_marking_width,
            "drop_edge_fraction": town.spec.drop_edge_fraction,
        },
        "nodes": town.nodes.tolist(),
        "edges": [list(e) for e in town.edges],
        "road_polygons": [p.tolist() for p in town.road_polygons],
        "lane_polylines": [{"points": l.points.tolist(), "width": l.width} for l in town.lane_polylines],
        "extent": list(town.extent),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def town_from_json(text: str) -> TownMap:
    doc = json.loads(text)
    spec = TownSpec(
        blocks_x=doc["spec"]["blocks_x"],
        blocks_y=doc["spec"]["blocks_y"],
        block_size_range=tuple(doc["spec"]["block_size_range"]),
        node_jitter=doc["spec"]["node_jitter"],
        road_width=doc["spec"]["road_width"],
        lane_marking_width=doc["spec"]["lane_marking_width"],
        drop_edge_fraction=doc["spec"]["drop_edge_fraction"],
    )
    return TownMap(
        seed=doc["seed"],
        spec=spec,
        nodes=np.array(doc["nodes"], dtype=float),
        edges=[tuple(e) for e in doc["edges"]],
        road_polygons=[np.array(p, dtype=float) for p in doc["road_polygons"]],
        lane_polylines=[
            LanePolyline(points=np.array(l["points"], dtype=float), width=l["width"])
            for l in doc["lane_polylines"]
        ],
        extent=tuple(doc["extent"]),
    )
