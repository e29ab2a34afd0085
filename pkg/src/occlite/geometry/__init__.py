from occlite.geometry.camera import (
    MIN_DEPTH,
    Camera,
    CameraRig,
    compose_e2i,
    project_points,
)
from occlite.geometry.voxel_grid import VoxelGridSpec, voxel_centers

__all__ = [
    "MIN_DEPTH",
    "Camera",
    "CameraRig",
    "VoxelGridSpec",
    "compose_e2i",
    "project_points",
    "voxel_centers",
]
