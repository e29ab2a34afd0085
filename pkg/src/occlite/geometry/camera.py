from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from occlite.errors import ConfigurationError

# Points closer than this along the optical axis are treated as behind the
# camera
MIN_DEPTH = 1e-6


@dataclass(eq=False)
class Camera:
    """A pinhole camera. The camera frame is x right, y down, z forward.

    Args:
        intrinsics: K, the 3x3 camera-to-image matrix.
        extrinsics: T_e2c, the 4x4 rigid ego-to-camera transform.
        image_size: Feature map size (H', W').
    """

    intrinsics: np.ndarray
    extrinsics: np.ndarray
    image_size: tuple[int, int]

    def __post_init__(self) -> None:
        self.intrinsics = np.asarray(self.intrinsics, dtype=np.float64)
        self.extrinsics = np.asarray(self.extrinsics, dtype=np.float64)
        self.image_size = (int(self.image_size[0]), int(self.image_size[1]))
        k, t = self.intrinsics, self.extrinsics
        if k.shape != (3, 3):
            raise ConfigurationError(f"Intrinsics must be 3x3, got {k.shape}")
        if t.shape != (4, 4):
            raise ConfigurationError(f"Extrinsics must be 4x4, got {t.shape}")
        if np.any(np.tril(k, -1) != 0.0):
            raise ConfigurationError("Intrinsics must be upper-triangular")
        if k[0, 0] <= 0.0 or k[1, 1] <= 0.0:
            raise ConfigurationError("Focal lengths must be positive")
        rot = t[:3, :3]
        if not np.allclose(rot @ rot.T, np.eye(3), rtol=0.0, atol=1e-9):
            raise ConfigurationError("Extrinsic rotation is not orthonormal")
        if not np.array_equal(t[3], [0.0, 0.0, 0.0, 1.0]):
            raise ConfigurationError("Extrinsics last row must be [0,0,0,1]")
        if min(self.image_size) < 1:
            raise ConfigurationError(f"Bad image size {self.image_size}")

    @property
    def rotation(self) -> np.ndarray:
        return self.extrinsics[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.extrinsics[:3, 3]

    @property
    def position(self) -> np.ndarray:
        """Camera center in ego coordinates."""
        return -self.rotation.T @ self.translation

    @classmethod
    def look_from(
        cls,
        position: Sequence[float],
        yaw: float,
        pitch: float,
        image_size: tuple[int, int],
        fov: float,
    ) -> Camera:
        """Builds a camera at an ego position facing `yaw` (radians, about ego
        z) and tilted down by `pitch` radians, with a horizontal field of view
        `fov` (radians) and the principal point at the image center.
        """
        height, width = image_size
        focal = (width / 2.0) / np.tan(fov / 2.0)
        intrinsics = np.array(
            [
                [focal, 0.0, (width - 1) / 2.0],
                [0.0, focal, (height - 1) / 2.0],
                [0.0, 0.0, 1.0],
            ]
        )
        forward = np.array(
            [
                np.cos(pitch) * np.cos(yaw),
                np.cos(pitch) * np.sin(yaw),
                -np.sin(pitch),
            ]
        )
        right = np.array([np.sin(yaw), -np.cos(yaw), 0.0])
        down = np.cross(forward, right)
        rot = np.stack([right, down, forward])
        extrinsics = np.eye(4)
        extrinsics[:3, :3] = rot
        extrinsics[:3, 3] = -rot @ np.asarray(position, dtype=np.float64)
        return cls(intrinsics, extrinsics, image_size)


@dataclass(eq=False)
class CameraRig:
    """An ordered, non-empty list of cameras."""

    cameras: tuple[Camera, ...]

    def __post_init__(self) -> None:
        self.cameras = tuple(self.cameras)
        if not self.cameras:
            raise ConfigurationError("A camera rig needs at least one camera")

    def __len__(self) -> int:
        return len(self.cameras)

    def __iter__(self) -> Iterator[Camera]:
        return iter(self.cameras)

    def __getitem__(self, index: int) -> Camera:
        return self.cameras[index]


def compose_e2i(cam: Camera) -> np.ndarray:
    """T_e2i = K [R | t], a 3x4 matrix mapping homogeneous ego points to
    (u*d, v*d, d).
    """
    return cam.intrinsics @ cam.extrinsics[:3, :]


def project_points(
    points: np.ndarray, cam: Camera
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Projects ego points [..., 3] into the camera.

    Returns:
        (uv [..., 2], depth [...], valid [...]). A point is valid when its
        depth exceeds `MIN_DEPTH` and (u, v) lies in [0, W'-1] x [0, H'-1],
        with integer coordinates at pixel centers. Pixel coordinates of
        points at or behind the camera are reported as -1.
    """
    points = np.asarray(points, dtype=np.float64)
    e2i = compose_e2i(cam)
    proj = points @ e2i[:, :3].T + e2i[:, 3]
    depth = proj[..., 2]
    in_front = depth > MIN_DEPTH
    safe = np.where(in_front, depth, 1.0)
    uv = np.where(in_front[..., None], proj[..., :2] / safe[..., None], -1.0)
    height, width = cam.image_size
    valid = (
        in_front
        & (uv[..., 0] >= 0.0)
        & (uv[..., 0] <= width - 1)
        & (uv[..., 1] >= 0.0)
        & (uv[..., 1] <= height - 1)
    )
    return uv, depth, valid
