from __future__ import annotations

import logging
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from occlite.errors import ConfigurationError, RejectedInputError
from occlite.geometry import CameraRig, VoxelGridSpec
from occlite.occupancy_head.bev import bev_collapse, bev_decode, bev_seg_head
from occlite.occupancy_head.config import HeadConfig
from occlite.occupancy_head.integrate import FusedVolume, integrate
from occlite.occupancy_head.interp import InterpolatedVolume, interp_sample
from occlite.tensor_core import ConvParams
from occlite.view_transform import (
    DepthBinSpec,
    LiftedVolume,
    build_frustum,
    lift,
    voxel_pool,
)

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class FastOccOutput:
    """Outputs of `forward_fastocc`. Unpacks as (logits, bev_logits)."""

    logits: np.ndarray
    bev_logits: np.ndarray | None
    lifted: LiftedVolume
    decoded: np.ndarray
    interpolated: InterpolatedVolume | None
    fused: FusedVolume

    def __iter__(self) -> Iterator[np.ndarray | None]:
        return iter((self.logits, self.bev_logits))


def check_grid(grid: VoxelGridSpec, config: HeadConfig) -> None:
    if tuple(grid.dims) != tuple(config.grid_dims):
        raise ConfigurationError(
            f"Grid dims {list(grid.dims)} do not match the head config "
            f"{list(config.grid_dims)}"
        )


def lift_and_pool(
    rig: CameraRig,
    depth_logits: Sequence[np.ndarray],
    context: Sequence[np.ndarray],
    bins: DepthBinSpec,
    grid: VoxelGridSpec,
    parallel: bool = False,
) -> LiftedVolume:
    """The view transform: per-camera lift, then sum pooling into the
    half-resolution grid.
    """
    if not len(rig) == len(depth_logits) == len(context):
        raise RejectedInputError(
            f"{len(rig)} cameras, {len(depth_logits)} depth logits and "
            f"{len(context)} context maps"
        )
    for cam, logits in zip(rig, depth_logits):
        if logits.shape != (bins.num_bins,) + cam.image_size:
            raise RejectedInputError(
                f"Depth logits {list(logits.shape)} do not match "
                f"{bins.num_bins} bins on a {list(cam.image_size)} image"
            )
    frustums = [build_frustum(cam, bins) for cam in rig]
    lifted = [lift(d, c) for d, c in zip(depth_logits, context)]
    return voxel_pool(frustums, lifted, grid.halved(), parallel=parallel)


def forward_fastocc(
    features: Sequence[np.ndarray],
    rig: CameraRig,
    depth_logits: Sequence[np.ndarray],
    context: Sequence[np.ndarray],
    bins: DepthBinSpec,
    grid: VoxelGridSpec,
    weights: Mapping[str, ConvParams],
    config: HeadConfig,
    parallel: bool = False,
) -> FastOccOutput:
    """Runs lift -> voxel_pool -> bev_collapse -> bev_decode, then the BEV
    segmentation head and the fusion with interpolation-sampled image
    features.

    Args:
        features: Per camera image features [C1, H', W'].
        rig: The cameras, in a fixed order.
        depth_logits: Per camera [D, H', W'].
        context: Per camera [C2, H', W'].
        bins: Depth discretization of the lift.
        grid: The fine voxel grid [H, W, Z].
        weights: Layer weights, see `HeadWeights`.
        config: Head widths and switches.
        parallel: Forwarded to the per-camera stages.
    """
    check_grid(grid, config)
    vb = lift_and_pool(rig, depth_logits, context, bins, grid, parallel)
    if vb.channels != config.c2:
        raise RejectedInputError(
            f"Context has {vb.channels} channels, the head expects "
            f"C2={config.c2}"
        )
    decoded = bev_decode(bev_collapse(vb), weights, config)
    bev_logits = (
        bev_seg_head(decoded, weights) if config.use_bev_supervision else None
    )
    p = (
        interp_sample(features, rig, grid, parallel=parallel)
        if config.use_interp_fusion
        else None
    )
    fused = integrate(decoded, p, weights, config)
    logger.debug(
        "Forward pass done: logits %s, BEV logits %s",
        fused.logits.shape,
        None if bev_logits is None else bev_logits.shape,
    )
    return FastOccOutput(
        logits=fused.logits,
        bev_logits=bev_logits,
        lifted=vb,
        decoded=decoded,
        interpolated=p,
        fused=fused,
    )
