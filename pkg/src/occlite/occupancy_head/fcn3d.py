from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from occlite.errors import RejectedInputError
from occlite.occupancy_head.config import HeadConfig
from occlite.tensor_core import (
    ConvParams,
    conv3d,
    pointwise_conv,
    relu,
    upsample_nearest,
)
from occlite.view_transform import LiftedVolume


def head_3dfcn(
    vb: LiftedVolume | np.ndarray,
    weights: Mapping[str, ConvParams],
    config: HeadConfig,
) -> np.ndarray:
    """Comparison head working on voxels directly: nearest 2x upsampling of
    V_B, `len(config.fcn3d_widths)` layers of k x k x k conv + ReLU, then a
    pointwise classifier. Returns logits [M, H, W, Z].
    """
    volume = vb.features if isinstance(vb, LiftedVolume) else vb
    if volume.shape != (config.c2,) + config.half_dims:
        raise RejectedInputError(
            f"V_B has shape {list(volume.shape)}, expected "
            f"{[config.c2, *config.half_dims]}"
        )
    x = upsample_nearest(volume, 2)
    for index in range(1, len(config.fcn3d_widths) + 1):
        x = relu(conv3d(x, weights[f"fcn3d.layer{index}"]))
    return pointwise_conv(x, weights["fcn3d.classifier"])
