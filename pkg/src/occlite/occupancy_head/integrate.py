from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from occlite.errors import RejectedInputError
from occlite.occupancy_head.config import HeadConfig
from occlite.occupancy_head.interp import InterpolatedVolume
from occlite.tensor_core import (
    ConvParams,
    concat_channels,
    pointwise_conv,
    repeat_z,
    upsample2x_bilinear,
)


@dataclass(eq=False)
class FusedVolume:
    """V [C_out, H, W, Z] and the classifier logits Y [M, H, W, Z]."""

    features: np.ndarray
    logits: np.ndarray


def integrate(
    b: np.ndarray,
    p: InterpolatedVolume | None,
    weights: Mapping[str, ConvParams],
    config: HeadConfig,
) -> FusedVolume:
    """Upsamples B to the fine BEV size, repeats it along z, concatenates P
    and applies the pointwise fuse conv and the pointwise classifier.

    `p` is None when the config disables interpolation fusion.
    """
    h, w, z = config.grid_dims
    if b.shape != (config.c3,) + config.half_dims[:2]:
        raise RejectedInputError(
            f"B has shape {list(b.shape)}, expected "
            f"{[config.c3, *config.half_dims[:2]]}"
        )
    b_z = repeat_z(upsample2x_bilinear(b), z)
    if config.use_interp_fusion:
        if p is None:
            raise RejectedInputError("Interpolation fusion needs P")
        if p.features.shape != (config.c1, h, w, z):
            raise RejectedInputError(
                f"P has shape {list(p.features.shape)}, expected "
                f"{[config.c1, h, w, z]}"
            )
        stacked = concat_channels(b_z, p.features)
    else:
        stacked = b_z
    fused = pointwise_conv(stacked, weights["fuse"])
    return FusedVolume(fused, pointwise_conv(fused, weights["classifier"]))
