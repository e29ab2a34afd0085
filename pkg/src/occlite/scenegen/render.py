from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from occlite.errors import RejectedInputError
from occlite.geometry import Camera, CameraRig, VoxelGridSpec, voxel_centers
from occlite.geometry.camera import project_points
from occlite.supervision import OccupancyVolume
from occlite.utils.prng import SplitMix64
from occlite.view_transform import camera_to_ego, pixel_rays

logger = logging.getLogger(__name__)

# Depth stored for pixels whose ray leaves the grid without a hit
INVALID_DEPTH = 0.0


@dataclass(eq=False)
class RenderedView:
    """One camera's render.

    `features` is the one-hot class image [M, H', W'] (plus noise when
    requested), `depth` the camera-frame depth of the first hit [H', W']
    (`INVALID_DEPTH` for background) and `hit_voxel` the index of the hit
    voxel [H', W', 3] (-1 for background).
    """

    features: np.ndarray
    depth: np.ndarray
    hit_voxel: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return self.hit_voxel[..., 0] >= 0


def default_step(grid: VoxelGridSpec) -> float:
    """Half the smallest voxel extent."""
    return float(np.min(grid.step)) / 2.0


def _march_length(cam: Camera, grid: VoxelGridSpec) -> float:
    center = (grid.start + grid.end) / 2.0
    half_diagonal = float(np.linalg.norm(grid.end - grid.start)) / 2.0
    return float(np.linalg.norm(cam.position - center)) + half_diagonal


def _check_scene(scene: OccupancyVolume, grid: VoxelGridSpec) -> np.ndarray:
    labels = scene.hard_labels()
    if tuple(labels.shape) != grid.dims:
        raise RejectedInputError(
            f"Scene {list(labels.shape)} does not match grid "
            f"{list(grid.dims)}"
        )
    return labels


def render_camera(
    labels: np.ndarray,
    num_classes: int,
    cam: Camera,
    grid: VoxelGridSpec,
    step: float,
) -> RenderedView:
    """Marches every pixel ray from the camera in fixed Euclidean steps and
    records the first sample that lands in an occupied voxel.
    """
    rays = pixel_rays(cam)
    # Depth increment per sample so that consecutive samples are `step`
    # metres apart along each ray
    depth_step = step / np.linalg.norm(rays, axis=-1)
    num_samples = int(np.ceil(_march_length(cam, grid) / step))
    height, width = cam.image_size

    depth = np.full((height, width), INVALID_DEPTH)
    hit_voxel = np.full((height, width, 3), -1, dtype=np.int64)
    hit_class = np.zeros((height, width), dtype=np.int64)
    pending = np.ones((height, width), dtype=bool)
    # Chunks bound memory on large images
    chunk = 64
    for first in range(1, num_samples + 1, chunk):
        if not pending.any():
            break
        k = np.arange(first, min(first + chunk, num_samples + 1))
        # [H', W', K]
        depths = depth_step[..., None] * k
        points = camera_to_ego(rays[:, :, None, :] * depths[..., None], cam)
        indices, inside = grid.locate(points)
        safe = np.where(inside[..., None], indices, 0)
        sampled = labels[safe[..., 0], safe[..., 1], safe[..., 2]]
        occupied = inside & (sampled != 0)
        found = pending & occupied.any(axis=-1)
        first_hit = np.argmax(occupied, axis=-1)
        rows, cols = np.nonzero(found)
        sample = first_hit[rows, cols]
        depth[rows, cols] = depths[rows, cols, sample]
        hit_voxel[rows, cols] = indices[rows, cols, sample]
        hit_class[rows, cols] = sampled[rows, cols, sample]
        pending &= ~found

    features = (
        np.arange(num_classes)[:, None, None] == hit_class[None]
    ).astype(np.float64)
    return RenderedView(features, depth, hit_voxel)


def render_views(
    scene: OccupancyVolume,
    rig: CameraRig,
    grid: VoxelGridSpec,
    step: float | None = None,
    noise_std: float = 0.0,
    seed: int = 0,
) -> list[RenderedView]:
    """Renders the one-hot class image and depth map of every camera.

    Args:
        scene: The labelled volume.
        rig: The cameras.
        grid: The grid the scene lives on.
        step: Ray-march step in metres, at most half the smallest voxel
            extent. Defaults to exactly that.
        noise_std: Standard deviation of Gaussian noise added to the
            feature images, drawn from `SplitMix64(seed)` in camera order.
        seed: Noise seed.
    """
    labels = _check_scene(scene, grid)
    if step is None:
        step = default_step(grid)
    if not 0.0 < step <= default_step(grid):
        raise RejectedInputError(
            f"Ray-march step {step} must lie in (0, {default_step(grid)}]"
        )
    views = [
        render_camera(labels, scene.num_classes, cam, grid, step)
        for cam in rig
    ]
    if noise_std > 0.0:
        rng = SplitMix64(seed)
        for view in views:
            view.features = view.features + rng.normal(
                view.features.shape, scale=noise_std
            )
    for index, view in enumerate(views):
        logger.debug(
            "Camera %d: %d of %d pixels hit",
            index,
            int(view.valid.sum()),
            view.valid.size,
        )
    return views


def first_hit_voxels(
    scene: OccupancyVolume,
    rig: CameraRig,
    grid: VoxelGridSpec,
    step: float | None = None,
) -> np.ndarray:
    """Boolean [H, W, Z]: occupied voxels whose center some camera sees and
    for which the ray from that camera to the center meets no other
    occupied voxel first.
    """
    labels = _check_scene(scene, grid)
    if step is None:
        step = default_step(grid)
    occupied = np.argwhere(labels != 0)
    result = np.zeros(grid.dims, dtype=bool)
    if occupied.size == 0:
        return result
    centers = voxel_centers(grid)[tuple(occupied.T)]
    for cam in rig:
        _, _, visible = project_points(centers, cam)
        offsets = centers - cam.position
        length = np.linalg.norm(offsets, axis=-1)
        num_samples = int(np.ceil(length.max() / step))
        # Fractions along each segment, clamped to the center itself
        t = np.minimum(
            np.arange(1, num_samples + 1)[None, :] * step / length[:, None],
            1.0,
        )
        points = cam.position + t[..., None] * offsets[:, None, :]
        indices, inside = grid.locate(points)
        safe = np.where(inside[..., None], indices, 0)
        hit = inside & (labels[safe[..., 0], safe[..., 1], safe[..., 2]] != 0)
        first = np.argmax(hit, axis=-1)
        rows = np.arange(occupied.shape[0])
        first_index = indices[rows, first]
        own = np.all(first_index == occupied, axis=-1)
        seen = visible & hit[rows, first] & own
        result[tuple(occupied[seen].T)] = True
    return result
