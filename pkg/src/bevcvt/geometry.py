"""Pinhole camera geometry: intrinsics, extrinsics, projection, unprojection.

COORDINATE CONVENTIONS
======================
World frame (right-handed):
  - X: forward (at zero heading), Y: left, Z: up
  - Ground plane: Z = 0

Attitude angles (degrees at the API boundary, radians internally):
  - yaw   about Z, positive turns right (clockwise seen from above)
  - pitch about Y, positive tilts up
  - roll  about X, positive rolls the right side down
  - composed yaw -> pitch -> roll (body-to-world R = Rz(-yaw) Ry(-pitch) Rx(roll))

Camera frame (right-handed, standard computer vision):
  - +Z: optical axis (into the scene), +X: image right, +Y: image down
  - VEHICLE_TO_CAMERA is the fixed permutation taking body axes
    (x fwd, y left, z up) to camera axes; a camera mounted at zero
    attitude looks along world +X with image-up = +Z.

Extrinsics store R (reference frame -> camera rotation) and t (camera
position in the reference frame), so projection is  x ~ K R (p - t).
`extrinsics_from_pose` composes attitude only (identity pose gives R = I);
`camera_extrinsics_from_pose` additionally applies VEHICLE_TO_CAMERA and is
what mounted cameras use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GeometryError",
    "BehindCameraError",
    "DegenerateGeometryError",
    "IntrinsicMatrix",
    "ExtrinsicPose",
    "CameraModel",
    "VEHICLE_TO_CAMERA",
    "intrinsics_from_fov",
    "fov_from_intrinsics",
    "rotation_from_angles",
    "extrinsics_from_pose",
    "camera_extrinsics_from_pose",
    "project",
    "project_points",
    "unproject_direction",
    "unproject_directions",
    "geometric_similarity",
    "ray_ground_intersection",
    "ray_ground_intersections",
    "camera_to_json",
    "camera_from_json",
]


class GeometryError(ValueError):
    """Base class for geometric domain errors."""


class BehindCameraError(GeometryError):
    """Raised when a point has non-positive depth in the camera frame."""


class DegenerateGeometryError(GeometryError):
    """Raised when a direction or offset has zero norm."""


# Maps body-frame axes (x forward, y left, z up) to camera-frame axes
# (x image-right, y image-down, z optical). det = +1.
VEHICLE_TO_CAMERA = np.array(
    [
        [0.0, -1.0, 0.0],
        [0.0, 0.0, -1.0],
        [1.0, 0.0, 0.0],
    ]
)


@dataclass(frozen=True)
class IntrinsicMatrix:
    """Pinhole intrinsics (zero skew)."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got ({self.fx}, {self.fy})")
        if self.cx < 0 or self.cy < 0:
            raise ValueError(f"principal point must be non-negative, got ({self.cx}, {self.cy})")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    @property
    def matrix_inv(self) -> np.ndarray:
        return np.array(
            [
                [1.0 / self.fx, 0.0, -self.cx / self.fx],
                [0.0, 1.0 / self.fy, -self.cy / self.fy],
                [0.0, 0.0, 1.0],
            ]
        )


@dataclass(eq=False)
class ExtrinsicPose:
    """Rigid transform: rotation (reference -> camera) and camera position."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.translation = np.asarray(self.translation, dtype=float).reshape(3)
        if self.rotation.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {self.rotation.shape}")
        err = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if err > 1e-6:
            raise ValueError(f"rotation is not orthonormal (max deviation {err:.3e})")
        det = float(np.linalg.det(self.rotation))
        if abs(det - 1.0) > 1e-6:
            raise ValueError(f"rotation must have det +1, got {det}")

    @property
    def matrix(self) -> np.ndarray:
        """4x4 homogeneous extrinsic matrix [[R, t], [0, 1]]."""
        e = np.eye(4)
        e[:3, :3] = self.rotation
        e[:3, 3] = self.translation
        return e


def _deg(v) -> float:
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"angle must be finite, got {v}")
    return math.radians(v)


def _rz(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rx(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_from_angles(pitch_deg: float, yaw_deg: float, roll_deg: float) -> np.ndarray:
    """Body-to-world rotation from attitude angles (see module conventions)."""
    return _rz(-_deg(yaw_deg)) @ _ry(-_deg(pitch_deg)) @ _rx(_deg(roll_deg))


def intrinsics_from_fov(width: int, height: int, fov_deg: float) -> IntrinsicMatrix:
    """Intrinsics from image size and horizontal field of view.

    f = size / (2 tan(fov/2)) per axis, principal point at the image center.
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"image size must be positive, got {width}x{height}")
    fov_deg = float(fov_deg)
    if not math.isfinite(fov_deg) or not (0.0 < fov_deg < 180.0):
        raise ValueError(f"fov_deg must be in (0, 180), got {fov_deg}")
    half_tan = math.tan(math.radians(fov_deg) / 2.0)
    return IntrinsicMatrix(
        fx=width / (2.0 * half_tan),
        fy=height / (2.0 * half_tan),
        cx=width / 2.0,
        cy=height / 2.0,
    )


def fov_from_intrinsics(width: int, fx: float) -> float:
    """Field of view (degrees) read back from the focal length."""
    return math.degrees(2.0 * math.atan(width / (2.0 * fx)))


def extrinsics_from_pose(
    x: float, y: float, z: float, pitch_deg: float, yaw_deg: float, roll_deg: float
) -> ExtrinsicPose:
    """Extrinsics from position and attitude; identity pose gives R = I.

    The returned rotation maps reference-frame vectors into a frame that
    coincides with the reference frame at zero angles (no camera-axis
    permutation; see `camera_extrinsics_from_pose`).
    """
    t = np.array([float(x), float(y), float(z)])
    if not np.isfinite(t).all():
        raise ValueError(f"position must be finite, got {t}")
    r_bw = rotation_from_angles(pitch_deg, yaw_deg, roll_deg)
    return ExtrinsicPose(rotation=r_bw.T, translation=t)


def camera_extrinsics_from_pose(
    x: float, y: float, z: float, pitch_deg: float, yaw_deg: float, roll_deg: float
) -> ExtrinsicPose:
    """Extrinsics of a mounted camera: at zero attitude the optical axis is +X."""
    base = extrinsics_from_pose(x, y, z, pitch_deg, yaw_deg, roll_deg)
    return ExtrinsicPose(rotation=VEHICLE_TO_CAMERA @ base.rotation, translation=base.translation)


@dataclass(eq=False)
class CameraModel:
    """One calibrated view: size + fov (-> K) and pose (-> R, t).

    `position` is the camera location in the reference frame; `rotation_deg`
    is (pitch, yaw, roll) in the mounted-camera convention.
    """

    name: str
    width: int
    height: int
    fov_deg: float
    position: np.ndarray
    rotation_deg: np.ndarray
    intrinsics: IntrinsicMatrix = field(init=False)
    extrinsics: ExtrinsicPose = field(init=False)

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.rotation_deg = np.asarray(self.rotation_deg, dtype=float).reshape(3)
        self.intrinsics = intrinsics_from_fov(self.width, self.height, self.fov_deg)
        pitch, yaw, roll = self.rotation_deg
        self.extrinsics = camera_extrinsics_from_pose(*self.position, pitch, yaw, roll)


def _homogeneous_pixel(q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] == 2:
        q = np.array([q[0], q[1], 1.0])
    elif q.shape[0] != 3:
        raise ValueError(f"image point must have 2 or 3 components, got {q.shape[0]}")
    if not np.isfinite(q).all():
        raise ValueError(f"image point must be finite, got {q}")
    return q


def project(p, cam: CameraModel) -> np.ndarray:
    """Project a world point to pixel coordinates: x ~ K R (p - t).

    Raises BehindCameraError for non-positive depth.
    """
    p = np.asarray(p, dtype=float).reshape(3)
    p_cam = cam.extrinsics.rotation @ (p - cam.extrinsics.translation)
    if p_cam[2] <= 0.0:
        raise BehindCameraError(f"point {p.tolist()} has depth {p_cam[2]:.6g}")
    uvw = cam.intrinsics.matrix @ p_cam
    return uvw[:2] / uvw[2]


def project_points(pts: np.ndarray, cam: CameraModel) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection of (N, 3) points; returns (pixels, in-front mask).

    Pixels of behind-camera points are NaN instead of raising.
    """
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    p_cam = (pts - cam.extrinsics.translation) @ cam.extrinsics.rotation.T
    valid = p_cam[:, 2] > 0.0
    z = np.where(valid, p_cam[:, 2], 1.0)
    k = cam.intrinsics
    uv = np.stack([k.fx * p_cam[:, 0] / z + k.cx, k.fy * p_cam[:, 1] / z + k.cy], axis=1)
    uv[~valid] = np.nan
    return uv, valid


def unproject_direction(q, cam: CameraModel) -> np.ndarray:
    """World-frame ray direction of a pixel: d = R^-1 K^-1 (u, v, 1).

    Not normalized; callers that need unit vectors normalize themselves.
    """
    q = _homogeneous_pixel(q)
    return cam.extrinsics.rotation.T @ (cam.intrinsics.matrix_inv @ q)


def unproject_directions(qs: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Vectorized unprojection of (N, 2) pixel coordinates to (N, 3) directions."""
    qs = np.asarray(qs, dtype=float).reshape(-1, 2)
    k = cam.intrinsics
    d_cam = np.stack(
        [(qs[:, 0] - k.cx) / k.fx, (qs[:, 1] - k.cy) / k.fy, np.ones(len(qs))], axis=1
    )
    return d_cam @ cam.extrinsics.rotation


def geometric_similarity(q, p, cam: CameraModel) -> float:
    """Cosine between a pixel's unprojected ray and the camera-to-point offset."""
    d = unproject_direction(q, cam)
    v = np.asarray(p, dtype=float).reshape(3) - cam.extrinsics.translation
    dn = np.linalg.norm(d)
    vn = np.linalg.norm(v)
    if dn == 0.0 or vn == 0.0:
        raise DegenerateGeometryError("zero-norm ray or offset in similarity")
    return float(np.dot(d, v) / (dn * vn))


def ray_ground_intersection(q, cam: CameraModel) -> np.ndarray | None:
    """Intersection of a pixel ray with the ground plane z = 0, or None.

    Only forward intersections (positive ray parameter) count.
    """
    d = unproject_direction(q, cam)
    t = cam.extrinsics.translation
    if d[2] == 0.0:
        return None
    s = -t[2] / d[2]
    if s <= 0.0:
        return None
    return t + s * d


def ray_ground_intersections(qs: np.ndarray, cam: CameraModel) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ray/ground intersection; returns ((N, 3) points, hit mask).

    Non-hitting rays get NaN coordinates.
    """
    d = unproject_directions(qs, cam)
    t = cam.extrinsics.translation
    dz = d[:, 2]
    hit = dz != 0.0
    s = np.where(hit, -t[2] / np.where(hit, dz, 1.0), np.nan)
    hit = hit & (s > 0.0)
    pts = t[None, :] + s[:, None] * d
    pts[~hit] = np.nan
    return pts, hit


def camera_to_json(cam: CameraModel) -> dict:
    """Calibration record: primitive fields plus derived K and E for consumers."""
    return {
        "name": cam.name,
        "width": cam.width,
        "height": cam.height,
        "fov_deg": cam.fov_deg,
        "position": [float(v) for v in cam.position],
        "rotation": [float(v) for v in cam.rotation_deg],
        "K": cam.intrinsics.matrix.tolist(),
        "E": cam.extrinsics.matrix.tolist(),
    }


def camera_from_json(record: dict) -> CameraModel:
    """Rebuild a CameraModel from its primitive fields (K/E are derived)."""
    return CameraModel(
        name=record["name"],
        width=int(record["width"]),
        height=int(record["height"]),
        fov_deg=float(record["fov_deg"]),
        position=np.array(record["position"], dtype=float),
        rotation_deg=np.array(record["rotation"], dtype=float),
    )
