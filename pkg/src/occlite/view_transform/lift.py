from __future__ import annotations

import numpy as np

from occlite.errors import RejectedInputError
from occlite.tensor_core import channel_softmax, channel_softmax_backward


def _check(depth_logits: np.ndarray, context: np.ndarray) -> None:
    if depth_logits.ndim != 3 or context.ndim != 3:
        raise RejectedInputError(
            "lift expects depth logits [D, H', W'] and context [C2, H', W']"
        )
    if depth_logits.shape[1:] != context.shape[1:]:
        raise RejectedInputError(
            f"Depth logits {list(depth_logits.shape)} and context "
            f"{list(context.shape)} disagree on the image size"
        )


def lift(depth_logits: np.ndarray, context: np.ndarray) -> np.ndarray:
    """Outer product of the per-pixel depth distribution and the context
    vector: [D, H', W'] x [C2, H', W'] -> [H', W', D, C2].
    """
    _check(depth_logits, context)
    probs = channel_softmax(depth_logits)
    return np.einsum("dhw,chw->hwdc", probs, context)


def lift_backward(
    depth_logits: np.ndarray, context: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Returns (grad_depth_logits, grad_context)."""
    _check(depth_logits, context)
    probs = channel_softmax(depth_logits)
    grad_probs = np.einsum("hwdc,chw->dhw", grad_out, context)
    grad_context = np.einsum("hwdc,dhw->chw", grad_out, probs)
    return channel_softmax_backward(probs, grad_probs), grad_context
