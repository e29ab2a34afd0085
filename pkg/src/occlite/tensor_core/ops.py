from __future__ import annotations

from functools import lru_cache

import numpy as np

from occlite.errors import ConfigurationError, RejectedInputError


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    # Subgradient 0 at x == 0
    return np.where(x > 0.0, grad_out, 0.0)


def channel_softmax(x: np.ndarray) -> np.ndarray:
    """Softmax over axis 0 with max subtraction."""
    shifted = x - x.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=0, keepdims=True)


def channel_log_softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=0, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=0, keepdims=True))


def channel_softmax_backward(
    probs: np.ndarray, grad_probs: np.ndarray
) -> np.ndarray:
    """Maps a gradient with respect to softmax outputs back to the logits."""
    inner = (grad_probs * probs).sum(axis=0, keepdims=True)
    return probs * (grad_probs - inner)


@lru_cache(maxsize=64)
def _upsample_matrix(n: int) -> np.ndarray:
    """[2n, n] interpolation matrix for align-corners-false 2x upsampling."""
    out = np.arange(2 * n)
    src = np.clip((out + 0.5) / 2.0 - 0.5, 0.0, n - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n - 1)
    frac = src - lo
    matrix = np.zeros((2 * n, n))
    np.add.at(matrix, (out, lo), 1.0 - frac)
    np.add.at(matrix, (out, hi), frac)
    matrix.setflags(write=False)
    return matrix


def upsample2x_bilinear(x: np.ndarray) -> np.ndarray:
    """[C, H, W] -> [C, 2H, 2W]. Output sample o maps to input coordinate
    (o + 0.5) / 2 - 0.5, clamped to the border.
    """
    if x.ndim != 3:
        raise RejectedInputError(f"Expected [C, H, W], got {list(x.shape)}")
    rows = _upsample_matrix(x.shape[1])
    cols = _upsample_matrix(x.shape[2])
    return rows @ x @ cols.T


def upsample2x_bilinear_backward(grad_out: np.ndarray) -> np.ndarray:
    h, w = grad_out.shape[1] // 2, grad_out.shape[2] // 2
    return _upsample_matrix(h).T @ grad_out @ _upsample_matrix(w)


def upsample_nearest(x: np.ndarray, factor: int = 2) -> np.ndarray:
    """Repeats every spatial axis of a channel-first array `factor` times."""
    for axis in range(1, x.ndim):
        x = np.repeat(x, factor, axis=axis)
    return x


def avg_pool2x(x: np.ndarray) -> np.ndarray:
    """2x2 mean pooling of [C, H, W]; H and W must be even."""
    c, h, w = x.shape
    if h % 2 or w % 2:
        raise ConfigurationError(
            f"Cannot halve a {h}x{w} feature map with 2x2 pooling"
        )
    return x.reshape(c, h // 2, 2, w // 2, 2).mean(axis=(2, 4))


def repeat_z(x: np.ndarray, z: int) -> np.ndarray:
    """[C, H, W] -> [C, H, W, Z] with every z-slice equal to the input."""
    if z < 1:
        raise ConfigurationError(f"repeat_z needs Z >= 1, got {z}")
    return np.repeat(x[..., np.newaxis], z, axis=-1)


def concat_channels(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Concatenates along axis 0, `a` first."""
    if a.shape[1:] != b.shape[1:]:
        raise RejectedInputError(
            f"Cannot concatenate {list(a.shape)} and {list(b.shape)}: "
            "spatial dims differ"
        )
    return np.concatenate([a, b], axis=0)
