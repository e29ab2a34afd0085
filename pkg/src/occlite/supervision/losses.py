"""Loss terms with analytic gradients.

Every function takes logits with the class axis first ([M, ...]) and labels
with the remaining shape, and returns a `LossValue` whose gradient has the
shape of the logits. Voxels labelled `ignore_id` contribute nothing.
"""

from __future__ import annotations

import logging

import numpy as np

from occlite.errors import RejectedInputError
from occlite.supervision.loss_value import LossValue
from occlite.tensor_core import (
    channel_log_softmax,
    channel_softmax,
    channel_softmax_backward,
)

logger = logging.getLogger(__name__)

IGNORE_ID = 255

# Floor for the numerators of the affinity ratios; softmax probabilities are
# strictly positive unless they underflow
_TINY = 1e-300


class _Flat:
    """Logits flattened to [M, n] over the non-ignored voxels."""

    def __init__(
        self, logits: np.ndarray, labels: np.ndarray, ignore_id: int
    ) -> None:
        logits = np.asarray(logits, dtype=np.float64)
        labels = np.asarray(labels)
        if logits.shape[1:] != labels.shape:
            raise RejectedInputError(
                f"Logits {list(logits.shape)} and labels "
                f"{list(labels.shape)} disagree"
            )
        self.shape = logits.shape
        self.num_classes = logits.shape[0]
        flat_labels = labels.reshape(-1)
        self.keep = flat_labels != ignore_id
        self.labels = flat_labels[self.keep].astype(np.int64)
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.num_classes
        ):
            raise RejectedInputError(
                f"Labels must lie in [0, {self.num_classes}) or equal "
                f"{ignore_id}"
            )
        self.logits = logits.reshape(self.num_classes, -1)[:, self.keep]

    @property
    def count(self) -> int:
        return self.labels.size

    def one_hot(self) -> np.ndarray:
        classes = np.arange(self.num_classes)[:, None]
        return (self.labels[None, :] == classes).astype(np.float64)

    def scatter(self, grad_kept: np.ndarray) -> np.ndarray:
        grad = np.zeros((self.num_classes, self.keep.size))
        grad[:, self.keep] = grad_kept
        return grad.reshape(self.shape)


def focal_loss(
    logits: np.ndarray,
    labels: np.ndarray,
    gamma: float = 2.0,
    ignore_id: int = IGNORE_ID,
) -> LossValue:
    """Mean over kept voxels of -(1 - p_t)^gamma * log(p_t)."""
    if gamma < 0:
        raise RejectedInputError(f"gamma must be >= 0, got {gamma}")
    flat = _Flat(logits, labels, ignore_id)
    if flat.count == 0:
        return LossValue("focal", 0.0, np.zeros(flat.shape))

    log_probs = channel_log_softmax(flat.logits)
    probs = np.exp(log_probs)
    log_pt = log_probs[flat.labels, np.arange(flat.count)]
    pt = np.exp(log_pt)
    q = -np.expm1(log_pt)
    value = float(np.mean(-(q**gamma) * log_pt))

    if gamma == 0:
        slope = np.zeros_like(q)
    else:
        with np.errstate(divide="ignore"):
            slope = np.where(q > 0, gamma * q ** (gamma - 1), 0.0)
    # d loss_i / d z_j = (gamma q^(g-1) p_t log p_t - q^g) (1[j=t] - p_j)
    factor = slope * pt * log_pt - q**gamma
    grad = factor[None, :] * (flat.one_hot() - probs) / flat.count
    return LossValue("focal", value, flat.scatter(grad))


def dice_loss(
    logits: np.ndarray,
    labels: np.ndarray,
    eps: float = 1e-6,
    ignore_id: int = IGNORE_ID,
) -> LossValue:
    """1 - mean over classes of (2 sum p y + eps) / (sum p + sum y + eps)."""
    if eps <= 0:
        raise RejectedInputError(f"eps must be > 0, got {eps}")
    flat = _Flat(logits, labels, ignore_id)
    probs = channel_softmax(flat.logits)
    target = flat.one_hot()
    numer = 2.0 * (probs * target).sum(axis=1) + eps
    denom = probs.sum(axis=1) + target.sum(axis=1) + eps
    value = float(1.0 - np.mean(numer / denom))

    grad_probs = -(
        (2.0 * target * denom[:, None] - numer[:, None])
        / denom[:, None] ** 2
        / flat.num_classes
    )
    grad = channel_softmax_backward(probs, grad_probs)
    return LossValue("dice", value, flat.scatter(grad))


def lovasz_grad(gt_sorted: np.ndarray) -> np.ndarray:
    """Discrete gradient of the Jaccard loss along a sorted prefix."""
    gts = gt_sorted.sum()
    intersection = gts - np.cumsum(gt_sorted)
    union = gts + np.cumsum(1.0 - gt_sorted)
    jaccard = 1.0 - intersection / union
    jaccard[1:] = jaccard[1:] - jaccard[:-1]
    return jaccard


def lovasz_softmax(
    logits: np.ndarray, labels: np.ndarray, ignore_id: int = IGNORE_ID
) -> LossValue:
    """Lovasz extension of the Jaccard loss, averaged over the classes
    present in the labels.
    """
    flat = _Flat(logits, labels, ignore_id)
    present = np.unique(flat.labels)
    if present.size == 0:
        return LossValue("lovasz", 0.0, np.zeros(flat.shape))

    probs = channel_softmax(flat.logits)
    grad_probs = np.zeros_like(probs)
    total = 0.0
    for c in present:
        fg = (flat.labels == c).astype(np.float64)
        errors = np.abs(fg - probs[c])
        order = np.argsort(-errors, kind="stable")
        weights = lovasz_grad(fg[order])
        total += float(errors[order] @ weights)
        grad_errors = np.empty_like(errors)
        grad_errors[order] = weights
        # e = p on background voxels and 1 - p on foreground voxels
        grad_probs[c] = np.where(fg > 0, -grad_errors, grad_errors)

    grad = channel_softmax_backward(probs, grad_probs / present.size)
    return LossValue("lovasz", total / present.size, flat.scatter(grad))


def _affinity_term(
    prob: np.ndarray, truth: np.ndarray
) -> tuple[float, np.ndarray] | None:
    """-(log precision + log recall + log specificity) for one soft mask,
    or None when a denominator is zero.
    """
    pred_sum, true_sum = prob.sum(), truth.sum()
    neg_sum = (1.0 - truth).sum()
    if pred_sum <= 0 or true_sum == 0 or neg_sum == 0:
        return None
    tp = max(float((prob * truth).sum()), _TINY)
    tn = max(float(((1.0 - prob) * (1.0 - truth)).sum()), _TINY)
    value = -(
        np.log(tp / pred_sum) + np.log(tp / true_sum) + np.log(tn / neg_sum)
    )
    grad = -2.0 * truth / tp + 1.0 / pred_sum + (1.0 - truth) / tn
    return float(value), grad


def affinity_losses(
    logits: np.ndarray,
    labels: np.ndarray,
    ignore_id: int = IGNORE_ID,
    empty_class: int = 0,
) -> tuple[LossValue, LossValue]:
    """Scene-class affinity losses.

    Returns:
        (L_sem, L_geo). L_sem averages the per-class term over every class
        with non-degenerate ratios; L_geo applies the same term to the
        occupied-vs-empty split with p_occupied = 1 - p_empty.
    """
    flat = _Flat(logits, labels, ignore_id)
    probs = channel_softmax(flat.logits)

    grad_sem = np.zeros_like(probs)
    sem_total, used = 0.0, 0
    for c in range(flat.num_classes):
        term = _affinity_term(probs[c], (flat.labels == c).astype(np.float64))
        if term is None:
            logger.debug("Affinity term skipped for class %d", c)
            continue
        sem_total += term[0]
        grad_sem[c] = term[1]
        used += 1
    if used:
        sem_value = sem_total / used
        grad_sem /= used
    else:
        sem_value = 0.0
    sem = LossValue(
        "sem",
        sem_value,
        flat.scatter(channel_softmax_backward(probs, grad_sem)),
    )

    grad_geo = np.zeros_like(probs)
    geo_value = 0.0
    occupied = (flat.labels != empty_class).astype(np.float64)
    term = _affinity_term(1.0 - probs[empty_class], occupied)
    if term is not None:
        geo_value = term[0]
        grad_geo[empty_class] = -term[1]
    geo = LossValue(
        "geo",
        geo_value,
        flat.scatter(channel_softmax_backward(probs, grad_geo)),
    )
    return sem, geo


def depth_loss(
    depth_logits: np.ndarray, targets: np.ndarray, valid: np.ndarray
) -> LossValue:
    """Mean cross-entropy over valid pixels.

    Args:
        depth_logits: [D, ...] with the bin axis first.
        targets: One-hot bins of the same shape.
        valid: Boolean mask of the trailing shape.
    """
    depth_logits = np.asarray(depth_logits, dtype=np.float64)
    if targets.shape != depth_logits.shape or valid.shape != targets.shape[1:]:
        raise RejectedInputError(
            f"Depth logits {list(depth_logits.shape)}, targets "
            f"{list(targets.shape)} and mask {list(valid.shape)} disagree"
        )
    count = int(valid.sum())
    if count == 0:
        return LossValue("depth", 0.0, np.zeros_like(depth_logits))
    log_probs = channel_log_softmax(depth_logits)
    cross_entropy = -(targets * log_probs).sum(axis=0)
    value = float(cross_entropy[valid].sum() / count)
    grad = (np.exp(log_probs) - targets) * valid[None] / count
    return LossValue("depth", value, grad)


def bev_bce(bev_logits: np.ndarray, target: np.ndarray) -> LossValue:
    """Mean binary cross-entropy with logits over every (m, x, y)."""
    x = np.asarray(bev_logits, dtype=np.float64)
    if target.shape != x.shape:
        raise RejectedInputError(
            f"BEV logits {list(x.shape)} and target {list(target.shape)} "
            "disagree"
        )
    decay = np.exp(-np.abs(x))
    value = float(np.mean(np.maximum(x, 0.0) - x * target + np.log1p(decay)))
    sigmoid = np.where(x >= 0, 1.0 / (1.0 + decay), decay / (1.0 + decay))
    return LossValue("bev", value, (sigmoid - target) / x.size)
