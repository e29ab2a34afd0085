from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from occlite.errors import RejectedInputError
from occlite.occupancy_head.config import HeadConfig
from occlite.tensor_core import (
    ConvParams,
    avg_pool2x,
    conv2d,
    conv2d_backward,
    relu,
    relu_backward,
    upsample2x_bilinear,
)
from occlite.view_transform import LiftedVolume


def bev_collapse(vb: LiftedVolume | np.ndarray) -> np.ndarray:
    """Folds z into channels: [C2, H/2, W/2, Z/2] -> [C2 * Z/2, H/2, W/2].

    Collapsed channel c * (Z/2) + z holds source channel c at height z.
    """
    volume = vb.features if isinstance(vb, LiftedVolume) else vb
    c, h, w, z = volume.shape
    return volume.transpose(0, 3, 1, 2).reshape(c * z, h, w)


def bev_uncollapse(bprime: np.ndarray, z: int) -> np.ndarray:
    """Inverse of `bev_collapse`."""
    cz, h, w = bprime.shape
    if cz % z:
        raise RejectedInputError(
            f"{cz} collapsed channels are not a multiple of Z/2={z}"
        )
    return bprime.reshape(cz // z, z, h, w).transpose(0, 2, 3, 1)


def bev_decode(
    bprime: np.ndarray, weights: Mapping[str, ConvParams], config: HeadConfig
) -> np.ndarray:
    """Residual 2D FCN with a top-down merge.

    stem conv + ReLU, then `config.num_stages` residual stages
    (relu(conv2(relu(conv1(x))) + skip(x)), stages after the first start with
    2x2 mean pooling), then lateral 1x1 convs merged coarse to fine by
    bilinear 2x upsampling and addition.

    Returns:
        B, [C3, H/2, W/2].
    """
    expected = (config.collapsed_channels,) + config.half_dims[:2]
    if bprime.shape != expected:
        raise RejectedInputError(
            f"B' has shape {list(bprime.shape)}, expected {list(expected)}"
        )
    x = relu(conv2d(bprime, weights["bev_decode.stem"]))
    stage_outputs = []
    for stage in range(1, config.num_stages + 1):
        if stage > 1:
            x = avg_pool2x(x)
        prefix = f"bev_decode.stage{stage}"
        y = relu(conv2d(x, weights[f"{prefix}.conv1"]))
        y = conv2d(y, weights[f"{prefix}.conv2"])
        x = relu(y + conv2d(x, weights[f"{prefix}.skip"]))
        stage_outputs.append(x)

    top = conv2d(
        stage_outputs[-1], weights[f"bev_decode.lateral{config.num_stages}"]
    )
    for stage in range(config.num_stages - 1, 0, -1):
        lateral = conv2d(
            stage_outputs[stage - 1], weights[f"bev_decode.lateral{stage}"]
        )
        top = upsample2x_bilinear(top) + lateral
    return top


def bev_seg_head(
    b: np.ndarray, weights: Mapping[str, ConvParams]
) -> np.ndarray:
    """Per-class BEV logits [M, H/2, W/2] (multi-label, no softmax)."""
    hidden = relu(conv2d(b, weights["bev_seg.conv1"]))
    return conv2d(hidden, weights["bev_seg.conv2"])


def bev_seg_head_backward(
    b: np.ndarray,
    weights: Mapping[str, ConvParams],
    grad_logits: np.ndarray,
) -> tuple[np.ndarray, dict[str, tuple[np.ndarray, np.ndarray]]]:
    """Returns the gradient with respect to `b` and a mapping
    layer name -> (grad_weight, grad_bias).
    """
    conv1, conv2 = weights["bev_seg.conv1"], weights["bev_seg.conv2"]
    pre = conv2d(b, conv1)
    hidden = relu(pre)
    grad_hidden, grad_w2, grad_b2 = conv2d_backward(hidden, conv2, grad_logits)
    grad_pre = relu_backward(pre, grad_hidden)
    grad_b, grad_w1, grad_b1 = conv2d_backward(b, conv1, grad_pre)
    return grad_b, {
        "bev_seg.conv1": (grad_w1, grad_b1),
        "bev_seg.conv2": (grad_w2, grad_b2),
    }
