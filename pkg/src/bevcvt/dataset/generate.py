"""Full dataset generation: towns -> routes -> rendered frames on disk."""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from ..synthworld import (
    GridSpec,
    Route,
    TownSpec,
    compose_with_ego,
    default_rig,
    ego_poses_along_route,
    generate_town,
    plan_route,
    rasterize_bev_gt,
    rasterize_sparse_trajectory,
    render_camera_labels,
    town_to_json,
)
from ..synthworld.render import PALETTE
from ..synthworld.routing import NoRouteError
from .io import Sample, SampleId, write_sample
from .splits import SplitManifest, make_splits, route_ids


@dataclass(frozen=True)
class GenConfig:
    town_seeds: tuple[int, ...] = (11, 22)
    routes_per_town: int = 10
    val_route: str = "route00"
    train_samples: int = 2000
    val_samples: int = 200
    test_samples: int = 1000
    image_size: int = 128
    fov_deg: float = 90.0
    route_spacing: float = 2.0
    min_route_length: float = 100.0
    trajectory_halfwidth: float = 0.5
    grid: GridSpec = field(default_factory=GridSpec)
    town: TownSpec = field(default_factory=TownSpec)

    def validate(self):
        if len(self.town_seeds) < 2:
            raise ValueError("need at least two towns (train/val town + test town)")
        if self.routes_per_town < 2:
            raise ValueError(f"routes_per_town must be >= 2, got {self.routes_per_town}")
        if min(self.train_samples, self.val_samples, self.test_samples) < 1:
            raise ValueError("all split sizes must be positive")


def _select_route_endpoints(town, n_routes: int, min_length: float, rng) -> list[tuple[int, int]]:
    """Deterministic distinct (start, goal) pairs with long-enough shortest paths."""
    pairs: list[tuple[int, int]] = []
    seen = set()
    bar = min_length
    attempts = 0
    n_nodes = len(town.nodes)
    while len(pairs) < n_routes:
        attempts += 1
        if attempts % 200 == 0:
            bar *= 0.8  # guarantee termination on very small towns
        a, b = rng.choice(n_nodes, size=2, replace=False)
        key = (min(a, b), max(a, b))
        if key in seen:
            continue
        try:
            route = plan_route(town, int(a), int(b))
        except NoRouteError:
            continue
        if route.length() < bar:
            continue
        seen.add(key)
        pairs.append((int(a), int(b)))
    return pairs


def _allocate(total: int, n: int) -> list[int]:
    base, rem = divmod(total, n)
    return [base + (1 if i < rem else 0) for i in range(n)]


def _route_json(route: Route, endpoints: tuple[int, int]) -> str:
    return json.dumps(
        {
            "waypoints": route.waypoints.tolist(),
            "spacing": route.spacing,
            "start": endpoints[0],
            "goal": endpoints[1],
        },
        sort_keys=True,
        separators=(",", ":"),
    )


def generate_dataset(
    cfg: GenConfig,
    root: Path,
    force: bool = False,
    progress: Callable[[str], None] | None = None,
) -> tuple[SplitManifest, dict]:
    """Write the dataset and manifest under `root`; returns (manifest, counts).

    Deterministic in cfg: identical configs produce byte-identical trees.
    """
    cfg.validate()
    root = Path(root)
    if root.exists() and any(root.iterdir()):
        if not force:
            raise FileExistsError(f"output root {root} is not empty (use force to overwrite)")
        shutil.rmtree(root)
    root.mkdir(parents=True, exist_ok=True)

    say = progress or (lambda msg: None)
    rig = default_rig(image_size=cfg.image_size, fov_deg=cfg.fov_deg)
    town_names = [f"town{i + 1:02d}" for i in range(len(cfg.town_seeds))]
    manifest = make_splits(
        towns=town_names,
        routes_per_town=cfg.routes_per_town,
        val_route=cfg.val_route,
        grid_spec=cfg.grid,
        rig=rig,
        towns_meta={name: {"seed": int(seed)} for name, seed in zip(town_names, cfg.town_seeds)},
    )

    towns = {}
    routes: dict[tuple[str, str], tuple[Route, tuple[int, int]]] = {}
    for name, seed in zip(town_names, cfg.town_seeds):
        town = generate_town(int(seed), cfg.town)
        towns[name] = town
        (root / name).mkdir(parents=True, exist_ok=True)
        (root / name / "town.json").write_text(town_to_json(town))
        rng = np.random.default_rng((int(seed), 1234))
        endpoints = _select_route_endpoints(town, cfg.routes_per_town, cfg.min_route_length, rng)
        for rid, (a, b) in zip(route_ids(cfg.routes_per_town), endpoints):
            route = plan_route(town, a, b, spacing=cfg.route_spacing)
            routes[(name, rid)] = (route, (a, b))
            route_dir = root / name / rid
            route_dir.mkdir(parents=True, exist_ok=True)
            (route_dir / "route.json").write_text(_route_json(route, (a, b)))
        say(f"{name}: {len(town.nodes)} waypoints, {len(town.edges)} road segments")

    counts = {}
    for split, total in (("train", cfg.train_samples), ("val", cfg.val_samples), ("test", cfg.test_samples)):
        pairs = manifest.split(split)
        n_frames = 0
        for (town_name, rid), quota in zip(pairs, _allocate(total, len(pairs))):
            town = towns[town_name]
            route, _ = routes[(town_name, rid)]
            for ego in ego_poses_along_route(route, quota):
                views = []
                for cam in rig.cameras:
                    labels = render_camera_labels(town, compose_with_ego(cam, ego))
                    views.append((PALETTE[labels], cam))
                sample = Sample(
                    views=views,
                    trajectory_raster=rasterize_sparse_trajectory(route, ego, cfg.grid),
                    bev_gt=rasterize_bev_gt(
                        town, route, ego, cfg.grid, trajectory_halfwidth=cfg.trajectory_halfwidth
                    ),
                    ego=ego,
                    ids=SampleId(town=town_name, route=rid, frame=ego.index),
                )
                write_sample(sample, root)
                n_frames += 1
            say(f"  {split}: {town_name}/{rid} ({quota} frames)")
        counts[split] = {"sample_points": n_frames, "images": n_frames * (len(rig.cameras) + 1)}

    manifest.save(root)
    return manifest, counts
