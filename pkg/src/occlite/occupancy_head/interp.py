from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from occlite.errors import RejectedInputError
from occlite.geometry import (
    Camera,
    CameraRig,
    VoxelGridSpec,
    project_points,
    voxel_centers,
)

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class InterpolatedVolume:
    """P [C1, H, W, Z] and the number of cameras observing each voxel."""

    features: np.ndarray
    count: np.ndarray

    def __post_init__(self) -> None:
        if self.features.shape[1:] != self.count.shape:
            raise RejectedInputError(
                f"Features {list(self.features.shape)} and count "
                f"{list(self.count.shape)} disagree"
            )

    @property
    def observed(self) -> np.ndarray:
        return self.count > 0


@dataclass(frozen=True)
class _Corners:
    """Bilinear footprint of a set of sub-pixel points."""

    x0: np.ndarray
    x1: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    wx: np.ndarray
    wy: np.ndarray

    @classmethod
    def of(cls, uv: np.ndarray, height: int, width: int) -> _Corners:
        u, v = uv[:, 0], uv[:, 1]
        x0 = np.minimum(np.floor(u).astype(np.int64), width - 1)
        y0 = np.minimum(np.floor(v).astype(np.int64), height - 1)
        return cls(
            x0=x0,
            x1=np.minimum(x0 + 1, width - 1),
            y0=y0,
            y1=np.minimum(y0 + 1, height - 1),
            wx=u - x0,
            wy=v - y0,
        )

    def taps(self) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """(row, col, weight) for the four neighbours."""
        return [
            (self.y0, self.x0, (1.0 - self.wx) * (1.0 - self.wy)),
            (self.y0, self.x1, self.wx * (1.0 - self.wy)),
            (self.y1, self.x0, (1.0 - self.wx) * self.wy),
            (self.y1, self.x1, self.wx * self.wy),
        ]


def bilinear_sample(feature: np.ndarray, uv: np.ndarray) -> np.ndarray:
    """Samples [C, H', W'] at continuous pixel coordinates uv [P, 2] that lie
    in [0, W'-1] x [0, H'-1]. Returns [C, P].
    """
    corners = _Corners.of(uv, feature.shape[1], feature.shape[2])
    out = np.zeros((feature.shape[0], uv.shape[0]))
    for rows, cols, weight in corners.taps():
        out += feature[:, rows, cols] * weight
    return out


def _check_features(
    features: Sequence[np.ndarray], rig: CameraRig
) -> tuple[int, ...]:
    if len(features) != len(rig):
        raise RejectedInputError(
            f"Got {len(features)} feature maps for {len(rig)} cameras"
        )
    shapes = {np.shape(f) for f in features}
    if len(shapes) != 1:
        raise RejectedInputError(
            f"Camera feature maps must share one shape, got {sorted(shapes)}"
        )
    shape = shapes.pop()
    for cam in rig:
        if tuple(cam.image_size) != shape[1:]:
            raise RejectedInputError(
                f"Feature maps are {list(shape[1:])} but a camera declares "
                f"image size {list(cam.image_size)}"
            )
    return shape


def _sample_camera(
    feature: np.ndarray, cam: Camera, centers: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    uv, _, valid = project_points(centers, cam)
    return valid, bilinear_sample(feature, uv[valid])


def interp_sample(
    features: Sequence[np.ndarray],
    rig: CameraRig,
    grid: VoxelGridSpec,
    parallel: bool = False,
) -> InterpolatedVolume:
    """Projects every fine voxel center into every camera, bilinearly samples
    the cameras that see it and averages over them. Voxels no camera sees
    get zero features.

    Args:
        features: Per camera [C1, H', W'], in rig order.
        rig: The cameras.
        grid: The fine voxel grid.
        parallel: Sample cameras on a thread pool. Sums are still taken in
            camera order.
    """
    shape = _check_features(features, rig)
    centers = voxel_centers(grid).reshape(-1, 3)
    jobs = list(zip(features, rig))
    if parallel and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            samples = list(
                pool.map(lambda job: _sample_camera(*job, centers), jobs)
            )
    else:
        samples = [_sample_camera(f, cam, centers) for f, cam in jobs]

    total = np.zeros((shape[0], centers.shape[0]))
    count = np.zeros(centers.shape[0], dtype=np.int64)
    for index, (valid, sampled) in enumerate(samples):
        if not valid.any():
            logger.debug("Camera %d observes no voxel", index)
        total[:, valid] += sampled
        count[valid] += 1

    observed = count > 0
    total[:, observed] /= count[observed]
    return InterpolatedVolume(
        total.reshape((shape[0],) + grid.dims), count.reshape(grid.dims)
    )


def interp_sample_backward(
    features: Sequence[np.ndarray],
    rig: CameraRig,
    grid: VoxelGridSpec,
    grad_p: np.ndarray,
) -> list[np.ndarray]:
    """Gradient of `interp_sample` with respect to each camera's feature
    map. The forward map is linear in the features.
    """
    shape = _check_features(features, rig)
    channels, height, width = shape
    centers = voxel_centers(grid).reshape(-1, 3)
    grad_flat = np.asarray(grad_p).reshape(channels, -1)

    valids = [project_points(centers, cam) for cam in rig]
    count = np.sum([valid for _, _, valid in valids], axis=0)
    grads = []
    for uv, _, valid in valids:
        scaled = grad_flat[:, valid] / count[valid]
        corners = _Corners.of(uv[valid], height, width)
        grad = np.zeros((channels, height * width))
        for rows, cols, weight in corners.taps():
            pixel = rows * width + cols
            for c in range(channels):
                grad[c] += np.bincount(
                    pixel, weights=scaled[c] * weight, minlength=height * width
                )
        grads.append(grad.reshape(shape))
    return grads
