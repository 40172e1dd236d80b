"""Split construction: first town provides train/val routes, the rest are test."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..synthworld import GridSpec, RigSpec

MANIFEST_NAME = "manifest.json"


def route_ids(routes_per_town: int) -> list[str]:
    return [f"route{i:02d}" for i in range(routes_per_town)]


@dataclass
class SplitManifest:
    train: list[tuple[str, str]]
    val: list[tuple[str, str]]
    test: list[tuple[str, str]]
    grid_spec: GridSpec
    rig: RigSpec
    towns: dict[str, dict] = field(default_factory=dict)  # per-town metadata (seed etc.)

    def validate(self):
        train_towns = {t for t, _ in self.train}
        test_towns = {t for t, _ in self.test}
        if train_towns & test_towns:
            raise ValueError(f"train and test towns overlap: {train_towns & test_towns}")
        if set(self.train) & set(self.val):
            raise ValueError("train and val share a (town, route) pair")

    def split(self, name: str) -> list[tuple[str, str]]:
        if name not in ("train", "val", "test"):
            raise ValueError(f"unknown split {name!r}")
        return getattr(self, name)

    def to_json(self) -> dict:
        return {
            "train": [list(p) for p in self.train],
            "val": [list(p) for p in self.val],
            "test": [list(p) for p in self.test],
            "grid_spec": self.grid_spec.to_json(),
            "rig": self.rig.to_json(),
            "towns": self.towns,
        }

    @staticmethod
    def from_json(doc: dict) -> "SplitManifest":
        manifest = SplitManifest(
            train=[tuple(p) for p in doc["train"]],
            val=[tuple(p) for p in doc["val"]],
            test=[tuple(p) for p in doc["test"]],
            grid_spec=GridSpec.from_json(doc["grid_spec"]),
            rig=RigSpec.from_json(doc["rig"]),
            towns=doc.get("towns", {}),
        )
        manifest.validate()
        return manifest

    def save(self, root: Path) -> Path:
        path = Path(root) / MANIFEST_NAME
        path.write_text(json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")))
        return path

    @staticmethod
    def load(root: Path) -> "SplitManifest":
        return SplitManifest.from_json(json.loads((Path(root) / MANIFEST_NAME).read_text()))


def make_splits(
    towns: list[str],
    routes_per_town: int,
    val_route: str,
    grid_spec: GridSpec | None = None,
    rig: RigSpec | None = None,
    towns_meta: dict[str, dict] | None = None,
) -> SplitManifest:
    """Train = first town minus the validation route; test = every other town."""
    if len(towns) < 2:
        raise ValueError(f"need at least 2 towns, got {towns}")
    if routes_per_town < 2:
        raise ValueError(f"need at least 2 routes per town, got {routes_per_town}")
    routes = route_ids(routes_per_town)
    if val_route not in routes:
        raise ValueError(f"val_route {val_route!r} is not one of {routes}")

    from ..synthworld import default_rig  # local import to avoid cycles

    train_town = towns[0]
    manifest = SplitManifest(
        train=[(train_town, r) for r in routes if r != val_route],
        val=[(train_town, val_route)],
        test=[(t, r) for t in towns[1:] for r in routes],
        grid_spec=grid_spec or GridSpec(),
        rig=rig or default_rig(),
        towns=towns_meta or {},
    )
    manifest.validate()
    return manifest
