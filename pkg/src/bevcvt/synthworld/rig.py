"""Camera rig: ego-relative camera mounts and composition with the ego pose."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import CameraModel, camera_from_json, camera_to_json
from .routing import EgoPose

REAR_VIEW_NAME = "rear"


@dataclass
class RigSpec:
    """Ordered set of ego-relative cameras; position/rotation are in the ego frame."""

    cameras: list[CameraModel]

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.cameras]

    def without_rear(self) -> "RigSpec":
        kept = [c for c in self.cameras if c.name != REAR_VIEW_NAME]
        if len(kept) == len(self.cameras):
            raise ValueError("rig has no rear camera to remove")
        return RigSpec(cameras=kept)

    def to_json(self) -> dict:
        return {"cameras": [camera_to_json(c) for c in self.cameras]}

    @staticmethod
    def from_json(doc: dict) -> "RigSpec":
        return RigSpec(cameras=[camera_from_json(c) for c in doc["cameras"]])


def default_rig(image_size: int = 128, fov_deg: float = 90.0, height: float = 1.8) -> RigSpec:
    """Three frontal cameras at yaw -55/0/+55 plus a rear camera at yaw 180."""
    def cam(name, yaw):
        return CameraModel(
            name=name,
            width=image_size,
            height=image_size,
            fov_deg=fov_deg,
            position=np.array([0.0, 0.0, height]),
            rotation_deg=np.array([-5.0, yaw, 0.0]),
        )

    return RigSpec(cameras=[cam("left", -55.0), cam("center", 0.0), cam("right", 55.0), cam(REAR_VIEW_NAME, 180.0)])


def compose_with_ego(cam: CameraModel, ego: EgoPose) -> CameraModel:
    """World-frame camera for an ego-relative mount at the given ego pose.

    The ego travels on the ground plane with heading only, so composition is
    exact in the (pitch, yaw, roll) parameterization: world yaw = mount yaw
    minus the ego heading (yaw is clockwise-positive, heading CCW-positive).
    """
    c, s = math.cos(ego.heading_rad), math.sin(ego.heading_rad)
    px, py, pz = cam.position
    world_pos = np.array([ego.x + c * px - s * py, ego.y + s * px + c * py, pz])
    pitch, yaw, roll = cam.rotation_deg
    world_rot = np.array([pitch, yaw - math.degrees(ego.heading_rad), roll])
    return CameraModel(
        name=cam.name,
        width=cam.width,
        height=cam.height,
        fov_deg=cam.fov_deg,
        position=world_pos,
        rotation_deg=world_rot,
    )
