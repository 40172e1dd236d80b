"""Ingestion of externally recorded data in the recording layout.

Calibration in every frame is recomputed from the primitive fields
(size, fov, position, rotation) and cross-checked against the K and E
matrices stored alongside; any disagreement beyond tolerance fails the
whole ingestion with the offending frames listed.
"""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import numpy as np

from ..geometry import camera_from_json
from ..synthworld import RigSpec
from .io import read_sample, write_sample

CALIBRATION_TOLERANCE = 1e-3


class IngestError(Exception):
    def __init__(self, message: str, offending: list[str] | None = None):
        super().__init__(message)
        self.offending = offending or []


def _find_frame_dirs(src: Path) -> list[Path]:
    return sorted(p.parent for p in Path(src).glob("*/*/frame_*/meta.json"))


def _check_frame_calibration(frame_dir: Path, rig: RigSpec | None) -> list[str]:
    problems = []
    meta = json.loads((frame_dir / "meta.json").read_text())
    rig_by_name = {c.name: c for c in rig.cameras} if rig else None
    for record in meta.get("views", []):
        name = record.get("name", "?")
        if rig_by_name is not None:
            expected = rig_by_name.get(name)
            if expected is None:
                problems.append(f"{frame_dir}: view {name!r} not in rig override")
                continue
            if (record["width"], record["height"]) != (expected.width, expected.height) or not np.isclose(
                record["fov_deg"], expected.fov_deg
            ):
                problems.append(f"{frame_dir}: view {name!r} disagrees with rig override")
                continue
        derived = camera_from_json(record)
        k_err = np.abs(np.array(record["K"]) - derived.intrinsics.matrix).max()
        e_err = np.abs(np.array(record["E"]) - derived.extrinsics.matrix).max()
        if k_err > CALIBRATION_TOLERANCE:
            problems.append(f"{frame_dir}: view {name!r} intrinsics off by {k_err:.3g}")
        if e_err > CALIBRATION_TOLERANCE:
            problems.append(f"{frame_dir}: view {name!r} extrinsics off by {e_err:.3g}")
    return problems


def ingest_external(src: Path, dst: Path, rig: RigSpec | None = None) -> Path:
    """Validate and normalize a recorded dataset into `dst`.

    Raises IngestError when no frames are found or any frame's calibration
    is inconsistent (all offending frames are collected first).
    """
    src, dst = Path(src), Path(dst)
    frames = _find_frame_dirs(src)
    if not frames:
        raise IngestError(f"no samples found under {src}")

    problems: list[str] = []
    for frame_dir in frames:
        problems.extend(_check_frame_calibration(frame_dir, rig))
    if problems:
        raise IngestError(
            f"calibration mismatch in {len(problems)} view(s):\n" + "\n".join(problems),
            offending=problems,
        )

    dst.mkdir(parents=True, exist_ok=True)
    for frame_dir in frames:
        write_sample(read_sample(frame_dir), dst)
    # carry over town/route geometry and the manifest when present
    for aux in Path(src).glob("*/town.json"):
        target = dst / aux.parent.name / aux.name
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(aux, target)
    for aux in Path(src).glob("*/*/route.json"):
        target = dst / aux.parent.parent.name / aux.parent.name / aux.name
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(aux, target)
    manifest = src / "manifest.json"
    if manifest.exists():
        shutil.copyfile(manifest, dst / "manifest.json")
    return dst
