from occlite.view_transform.depth import DepthBinSpec, depth_targets
from occlite.view_transform.frustum import (
    build_frustum,
    camera_to_ego,
    pixel_rays,
)
from occlite.view_transform.lift import lift, lift_backward
from occlite.view_transform.voxel_pool import (
    LiftedVolume,
    voxel_pool,
    voxel_pool_backward,
)

__all__ = [
    "DepthBinSpec",
    "LiftedVolume",
    "build_frustum",
    "camera_to_ego",
    "depth_targets",
    "lift",
    "lift_backward",
    "pixel_rays",
    "voxel_pool",
    "voxel_pool_backward",
]
