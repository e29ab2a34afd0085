"""Dense cross-correlation kernels.

Inputs are channel-first arrays without a batch axis: [C, H, W] for 2D and
[C, H, W, Z] for 3D. Windows are gathered with `sliding_window_view` and
contracted with a single `tensordot`, so the reduction order depends only on
the shapes.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from occlite.errors import ConfigurationError, RejectedInputError
from occlite.tensor_core.tensor import ConvParams


def conv_output_size(size: int, kernel: int, padding: int, stride: int) -> int:
    """H' = (H + 2p - k) / stride + 1, which must be a positive integer."""
    span = size + 2 * padding - kernel
    if span < 0 or span % stride != 0:
        raise ConfigurationError(
            f"Convolution over size {size} with k={kernel}, p={padding}, "
            f"stride={stride} does not give an integral output size"
        )
    return span // stride + 1


def _check(x: np.ndarray, params: ConvParams, rank: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if params.spatial_rank != rank:
        raise RejectedInputError(
            f"{params.name or 'conv'}: expected a {rank}D kernel, got "
            f"{params.spatial_rank}D"
        )
    if x.ndim != rank + 1:
        raise RejectedInputError(
            f"Expected input of rank {rank + 1}, got {list(x.shape)}"
        )
    if x.shape[0] != params.in_channels:
        raise RejectedInputError(
            f"{params.name or 'conv'}: input has {x.shape[0]} channels, "
            f"kernel expects {params.in_channels}"
        )
    return x


def _windows(x: np.ndarray, params: ConvParams) -> tuple[np.ndarray, tuple]:
    rank = params.spatial_rank
    k, p, s = params.kernel_size, params.pad, params.stride
    out_shape = tuple(
        conv_output_size(n, k, p, s) for n in x.shape[1:]
    )
    padded = np.pad(x, ((0, 0),) + ((p, p),) * rank)
    axes = tuple(range(1, rank + 1))
    win = sliding_window_view(padded, (k,) * rank, axis=axes)
    # [C, *out, *kernel]
    win = win[(slice(None),) + (slice(None, None, s),) * rank]
    win = win[(slice(None),) + tuple(slice(0, n) for n in out_shape)]
    return win, out_shape


def _conv_nd(x: np.ndarray, params: ConvParams) -> np.ndarray:
    rank = params.spatial_rank
    win, _ = _windows(x, params)
    weight_axes = list(range(1, rank + 2))
    window_axes = [0] + list(range(rank + 1, 2 * rank + 1))
    out = np.tensordot(params.weight, win, axes=(weight_axes, window_axes))
    return out + params.bias.reshape((-1,) + (1,) * rank)


def conv2d(x: np.ndarray, params: ConvParams) -> np.ndarray:
    """2D cross-correlation plus bias: [C_in, H, W] -> [C_out, H', W']."""
    return _conv_nd(_check(x, params, 2), params)


def conv3d(x: np.ndarray, params: ConvParams) -> np.ndarray:
    """3D cross-correlation plus bias: [C_in, H, W, Z] ->
    [C_out, H', W', Z'].
    """
    return _conv_nd(_check(x, params, 3), params)


def conv2d_backward(
    x: np.ndarray, params: ConvParams, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of `conv2d`.

    Returns:
        (grad_input, grad_weight, grad_bias)
    """
    x = _check(x, params, 2)
    win, out_shape = _windows(x, params)
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if grad_out.shape != (params.out_channels,) + out_shape:
        raise RejectedInputError(
            f"grad_out shape {list(grad_out.shape)} does not match forward "
            f"output {[params.out_channels, *out_shape]}"
        )

    grad_bias = grad_out.sum(axis=(1, 2))
    grad_weight = np.tensordot(grad_out, win, axes=([1, 2], [1, 2]))

    k, p, s = params.kernel_size, params.pad, params.stride
    h_out, w_out = out_shape
    # [C_in, k, k, H', W']
    cols = np.tensordot(params.weight, grad_out, axes=([0], [0]))
    grad_padded = np.zeros(
        (x.shape[0], x.shape[1] + 2 * p, x.shape[2] + 2 * p)
    )
    for i in range(k):
        for j in range(k):
            grad_padded[
                :,
                i : i + s * (h_out - 1) + 1 : s,
                j : j + s * (w_out - 1) + 1 : s,
            ] += cols[:, i, j]
    grad_input = grad_padded[:, p : p + x.shape[1], p : p + x.shape[2]]
    return np.ascontiguousarray(grad_input), grad_weight, grad_bias


def pointwise_conv(x: np.ndarray, params: ConvParams) -> np.ndarray:
    """1x1 (or 1x1x1) convolution on a channel-first array of any spatial
    rank, computed as a single channel contraction.
    """
    x = np.asarray(x, dtype=np.float64)
    if params.kernel_size != 1:
        raise ConfigurationError(
            f"{params.name or 'conv'}: pointwise conv needs k=1, got "
            f"k={params.kernel_size}"
        )
    if x.shape[0] != params.in_channels:
        raise RejectedInputError(
            f"{params.name or 'conv'}: input has {x.shape[0]} channels, "
            f"kernel expects {params.in_channels}"
        )
    matrix = params.weight.reshape(params.out_channels, params.in_channels)
    out = np.tensordot(matrix, x, axes=([1], [0]))
    return out + params.bias.reshape((-1,) + (1,) * (x.ndim - 1))
