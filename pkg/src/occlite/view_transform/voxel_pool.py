from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from occlite.errors import RejectedInputError
from occlite.geometry import VoxelGridSpec

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class LiftedVolume:
    """V_B: lifted features [C2, H/2, W/2, Z/2] on the half-resolution grid."""

    features: np.ndarray
    grid: VoxelGridSpec

    def __post_init__(self) -> None:
        if self.features.shape[1:] != self.grid.dims:
            raise RejectedInputError(
                f"Lifted features {list(self.features.shape)} do not match "
                f"grid dims {list(self.grid.dims)}"
            )

    @property
    def channels(self) -> int:
        return self.features.shape[0]


def _scatter_indices(
    points: np.ndarray, grid: VoxelGridSpec
) -> tuple[np.ndarray, np.ndarray]:
    indices, inside = grid.locate(points.reshape(-1, 3))
    return grid.flat_index(indices[inside]), inside


def _pool_camera(
    points: np.ndarray, lifted: np.ndarray, grid: VoxelGridSpec
) -> np.ndarray:
    if points.shape[:-1] != lifted.shape[:-1] or points.shape[-1] != 3:
        raise RejectedInputError(
            f"Frustum {list(points.shape)} and lifted features "
            f"{list(lifted.shape)} disagree"
        )
    flat, inside = _scatter_indices(points, grid)
    feats = lifted.reshape(-1, lifted.shape[-1])[inside]
    # bincount accumulates in input order, which is (v, u, d) row-major
    return np.stack(
        [
            np.bincount(flat, weights=feats[:, c], minlength=grid.num_voxels)
            for c in range(feats.shape[1])
        ]
    )


def voxel_pool(
    frustums: Sequence[np.ndarray],
    lifted: Sequence[np.ndarray],
    grid: VoxelGridSpec,
    parallel: bool = False,
) -> LiftedVolume:
    """Sum-pools lifted frustum features into the voxels containing them.

    Args:
        frustums: Per camera ego points [H', W', D, 3].
        lifted: Per camera features [H', W', D, C2].
        grid: The (half-resolution) target grid.
        parallel: Compute per-camera partial volumes on a thread pool. The
            partials are always summed in camera order, so the result is
            bit-identical either way.
    """
    if len(frustums) != len(lifted) or len(frustums) == 0:
        raise RejectedInputError(
            f"Got {len(frustums)} frustums for {len(lifted)} lifted tensors"
        )
    jobs = list(zip(frustums, lifted))
    if parallel and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            partials = list(
                pool.map(lambda job: _pool_camera(*job, grid), jobs)
            )
    else:
        partials = [_pool_camera(points, feats, grid) for points, feats in jobs]

    for index, partial in enumerate(partials):
        if not partial.any():
            logger.debug("Camera %d contributes nothing to the volume", index)
    total = partials[0]
    for partial in partials[1:]:
        total = total + partial
    channels = total.shape[0]
    return LiftedVolume(total.reshape((channels,) + grid.dims), grid)


def voxel_pool_backward(
    frustums: Sequence[np.ndarray],
    grad_volume: np.ndarray,
    grid: VoxelGridSpec,
) -> list[np.ndarray]:
    """Gradient of `voxel_pool` with respect to each camera's lifted
    features. Out-of-range points receive zero gradient.
    """
    channels = grad_volume.shape[0]
    if grad_volume.shape[1:] != grid.dims:
        raise RejectedInputError(
            f"grad_volume {list(grad_volume.shape)} does not match grid "
            f"{list(grid.dims)}"
        )
    flat_grad = grad_volume.reshape(channels, -1)
    grads = []
    for points in frustums:
        flat, inside = _scatter_indices(points, grid)
        grad = np.zeros((inside.size, channels))
        grad[inside] = flat_grad[:, flat].T
        grads.append(grad.reshape(points.shape[:-1] + (channels,)))
    return grads
