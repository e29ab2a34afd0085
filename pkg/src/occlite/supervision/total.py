from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from occlite.errors import RejectedInputError
from occlite.supervision.loss_value import LossBreakdown, LossValue
from occlite.supervision.losses import (
    IGNORE_ID,
    affinity_losses,
    bev_bce,
    depth_loss,
    dice_loss,
    focal_loss,
    lovasz_softmax,
)
from occlite.supervision.volume import (
    OccupancyVolume,
    bev_gt_from_occ,
    downsample_bev_gt,
)
from occlite.view_transform import DepthBinSpec, depth_targets


@dataclass(frozen=True)
class LossConfig:
    focal_gamma: float = 2.0
    dice_eps: float = 1e-6
    ignore_id: int = IGNORE_ID


def compute_losses(
    logits: np.ndarray,
    bev_logits: np.ndarray | None,
    gt: OccupancyVolume,
    depth_logits: Sequence[np.ndarray],
    depth_maps: Sequence[np.ndarray],
    bins: DepthBinSpec,
    config: LossConfig | None = None,
) -> dict[str, LossValue]:
    """Evaluates every loss term on one forward pass.

    `bev_logits=None` (BEV supervision disabled) drops the BEV term. Depth
    terms of all cameras are pooled into one mean over valid pixels.
    """
    config = config or LossConfig()
    labels = gt.hard_labels()
    if logits.shape != (gt.num_classes,) + labels.shape:
        raise RejectedInputError(
            f"Logits {list(logits.shape)} do not cover labels "
            f"{list(labels.shape)} with {gt.num_classes} classes"
        )

    sem, geo = affinity_losses(logits, labels, ignore_id=config.ignore_id)
    terms = {
        "focal": focal_loss(
            logits, labels, config.focal_gamma, config.ignore_id
        ),
        "sem": sem,
        "geo": geo,
        "dice": dice_loss(logits, labels, config.dice_eps, config.ignore_id),
        "lovasz": lovasz_softmax(logits, labels, config.ignore_id),
    }

    targets = [depth_targets(depth, bins) for depth in depth_maps]
    terms["depth"] = depth_loss(
        np.stack(list(depth_logits), axis=1),
        np.stack([one_hot for one_hot, _ in targets], axis=1),
        np.stack([valid for _, valid in targets]),
    )

    if bev_logits is not None:
        bev_target = downsample_bev_gt(bev_gt_from_occ(gt))
        terms["bev"] = bev_bce(bev_logits, bev_target)
    return terms


def breakdown(terms: dict[str, LossValue]) -> LossBreakdown:
    return LossBreakdown({name: term.value for name, term in terms.items()})
