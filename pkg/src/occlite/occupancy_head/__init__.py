from occlite.occupancy_head.bev import (
    bev_collapse,
    bev_decode,
    bev_seg_head,
    bev_seg_head_backward,
    bev_uncollapse,
)
from occlite.occupancy_head.config import HeadConfig
from occlite.occupancy_head.fcn3d import head_3dfcn
from occlite.occupancy_head.integrate import FusedVolume, integrate
from occlite.occupancy_head.interp import (
    InterpolatedVolume,
    bilinear_sample,
    interp_sample,
    interp_sample_backward,
)
from occlite.occupancy_head.pipeline import (
    FastOccOutput,
    forward_fastocc,
    lift_and_pool,
)
from occlite.occupancy_head.weights import (
    HeadWeights,
    LayerShape,
    head2d_layer_shapes,
    head3d_layer_shapes,
    layer_shapes,
)

__all__ = [
    "FastOccOutput",
    "FusedVolume",
    "HeadConfig",
    "HeadWeights",
    "InterpolatedVolume",
    "LayerShape",
    "bev_collapse",
    "bev_decode",
    "bev_seg_head",
    "bev_seg_head_backward",
    "bev_uncollapse",
    "bilinear_sample",
    "forward_fastocc",
    "head2d_layer_shapes",
    "head3d_layer_shapes",
    "head_3dfcn",
    "integrate",
    "interp_sample",
    "interp_sample_backward",
    "layer_shapes",
    "lift_and_pool",
]
