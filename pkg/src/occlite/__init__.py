from occlite import (
    geometry,
    metrics,
    occupancy_head,
    scenegen,
    supervision,
    tensor_core,
    utils,
    view_transform,
)

__all__ = [
    "geometry",
    "metrics",
    "occupancy_head",
    "scenegen",
    "supervision",
    "tensor_core",
    "utils",
    "view_transform",
]
__version__ = "0.1.0.dev1"
