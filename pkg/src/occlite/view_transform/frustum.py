from __future__ import annotations

import numpy as np

from occlite.errors import ConfigurationError
from occlite.geometry import Camera
from occlite.view_transform.depth import DepthBinSpec


def pixel_rays(cam: Camera) -> np.ndarray:
    """Camera-frame rays K^-1 [u, v, 1] for every pixel center, [H', W', 3].
    The z component of every ray is the depth scale, so `d * ray` sits at
    depth d.
    """
    k = cam.intrinsics
    if abs(np.linalg.det(k)) < 1e-12:
        raise ConfigurationError("Camera intrinsics are singular")
    height, width = cam.image_size
    v, u = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    pixels = np.stack([u, v, np.ones_like(u)], axis=-1).astype(np.float64)
    return pixels @ np.linalg.inv(k).T


def camera_to_ego(points: np.ndarray, cam: Camera) -> np.ndarray:
    """Applies T_e2c^-1 to camera-frame points [..., 3]."""
    return (points - cam.translation) @ cam.rotation


def build_frustum(cam: Camera, bins: DepthBinSpec) -> np.ndarray:
    """Ego-frame points for every (pixel, depth-bin center), [H', W', D, 3]."""
    rays = pixel_rays(cam)
    cam_points = rays[:, :, None, :] * bins.centers()[None, None, :, None]
    return camera_to_ego(cam_points, cam)
