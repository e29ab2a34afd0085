"""Stand-ins for the image backbone: camera feature maps, depth logits and
context features derived from renders.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from occlite.errors import ConfigurationError
from occlite.scenegen.render import RenderedView
from occlite.utils.prng import SplitMix64
from occlite.view_transform import DepthBinSpec, depth_targets


def feature_images(
    views: Sequence[RenderedView | np.ndarray], channels: int
) -> list[np.ndarray]:
    """Per-camera feature maps [channels, H', W'], the rendered class images
    (or stored feature arrays) followed by zero channels.
    """
    out = []
    for view in views:
        images = view.features if isinstance(view, RenderedView) else view
        num_classes = images.shape[0]
        if channels < num_classes:
            raise ConfigurationError(
                f"C1={channels} cannot hold {num_classes} class channels"
            )
        pad = np.zeros((channels - num_classes,) + images.shape[1:])
        out.append(np.concatenate([images, pad], axis=0))
    return out


def synthetic_depth_logits(
    depth_map: np.ndarray, bins: DepthBinSpec, sharpness: float = 8.0
) -> np.ndarray:
    """Depth logits [D, H', W'] equal to `sharpness` at the bin holding the
    rendered depth and 0 elsewhere. Pixels without a valid depth get flat
    logits.
    """
    one_hot, _ = depth_targets(depth_map, bins)
    return sharpness * one_hot


def synthetic_context(
    features: Sequence[np.ndarray], channels: int, seed: int
) -> list[np.ndarray]:
    """Projects every camera's feature map to `channels` context channels
    with one random matrix shared by all cameras.
    """
    if not features:
        return []
    c_in = features[0].shape[0]
    rng = SplitMix64(seed)
    matrix = rng.normal((channels, c_in), scale=1.0 / np.sqrt(c_in))
    return [np.einsum("oc,chw->ohw", matrix, f) for f in features]
