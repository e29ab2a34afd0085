from occlite.supervision.loss_value import (
    LOSS_TERMS,
    LossBreakdown,
    LossValue,
    total_loss,
)
from occlite.supervision.losses import (
    IGNORE_ID,
    affinity_losses,
    bev_bce,
    depth_loss,
    dice_loss,
    focal_loss,
    lovasz_grad,
    lovasz_softmax,
)
from occlite.supervision.total import LossConfig, breakdown, compute_losses
from occlite.supervision.volume import (
    OccupancyVolume,
    bev_gt_from_occ,
    default_class_names,
    downsample_bev_gt,
)

__all__ = [
    "IGNORE_ID",
    "LOSS_TERMS",
    "LossBreakdown",
    "LossConfig",
    "LossValue",
    "OccupancyVolume",
    "affinity_losses",
    "bev_bce",
    "bev_gt_from_occ",
    "breakdown",
    "compute_losses",
    "default_class_names",
    "depth_loss",
    "dice_loss",
    "downsample_bev_gt",
    "focal_loss",
    "lovasz_grad",
    "lovasz_softmax",
    "total_loss",
]
