from __future__ import annotations

import logging
import warnings
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd

from occlite.errors import RejectedInputError

logger = logging.getLogger(__name__)


@dataclass
class MiouValue:
    """Per-class IoU over the semantic classes (class 0, empty, excluded) and
    their mean. Classes with zero union are undefined (None) and left out of
    the mean.
    """

    class_names: list[str]
    # IoU of classes 1..M-1, None where undefined
    per_class: list[float | None]
    # None when every class is undefined
    mean: float | None
    # Occupied-vs-empty IoU, None when nothing is occupied in either volume
    geometry_iou: float | None

    @property
    def undefined_classes(self) -> list[str]:
        return [
            name
            for name, iou in zip(self.class_names[1:], self.per_class)
            if iou is None
        ]

    def to_df(self) -> pd.DataFrame:
        """Returns a DataFrame with one row per semantic class followed by
        the mean and the geometry IoU.
        """
        rows = [
            {"class": name, "iou": iou, "defined": iou is not None}
            for name, iou in zip(self.class_names[1:], self.per_class)
        ]
        rows.append(
            {
                "class": "mean",
                "iou": self.mean,
                "defined": self.mean is not None,
            }
        )
        rows.append(
            {
                "class": "geometry",
                "iou": self.geometry_iou,
                "defined": self.geometry_iou is not None,
            }
        )
        return pd.DataFrame(rows, columns=["class", "iou", "defined"])

    def __str__(self) -> str:
        return f"mIoU: {self.mean}\n{self.to_df()}"


def confusion_matrix(
    pred: np.ndarray, gt: np.ndarray, num_classes: int
) -> np.ndarray:
    """[M, M] integer counts, rows indexed by ground truth."""
    index = gt.astype(np.int64) * num_classes + pred.astype(np.int64)
    return np.bincount(index, minlength=num_classes**2).reshape(
        num_classes, num_classes
    )


def miou(
    pred_labels: np.ndarray,
    gt_labels: np.ndarray,
    num_classes: int,
    ignore_mask: np.ndarray | None = None,
    class_names: Sequence[str] | None = None,
) -> MiouValue:
    """Computes IoU = TP / (TP + FP + FN) per semantic class over the voxels
    not covered by `ignore_mask`.
    """
    pred = np.asarray(pred_labels)
    gt = np.asarray(gt_labels)
    if pred.shape != gt.shape:
        raise RejectedInputError(
            f"Prediction {list(pred.shape)} and ground truth "
            f"{list(gt.shape)} differ in shape"
        )
    keep = np.ones(gt.shape, dtype=bool)
    if ignore_mask is not None:
        if ignore_mask.shape != gt.shape:
            raise RejectedInputError("ignore_mask must match the label shape")
        keep = ~ignore_mask.astype(bool)
    pred, gt = pred[keep], gt[keep]
    for name, labels in (("prediction", pred), ("ground truth", gt)):
        if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
            raise RejectedInputError(
                f"{name} labels must lie in [0, {num_classes})"
            )
    if class_names is None:
        class_names = [f"class{i}" for i in range(num_classes)]
    if len(class_names) != num_classes:
        raise RejectedInputError(
            f"{len(class_names)} class names for {num_classes} classes"
        )

    conf = confusion_matrix(pred, gt, num_classes)
    tp = np.diag(conf)
    union = conf.sum(axis=0) + conf.sum(axis=1) - tp
    per_class: list[float | None] = [
        float(tp[m] / union[m]) if union[m] > 0 else None
        for m in range(1, num_classes)
    ]
    defined = [iou for iou in per_class if iou is not None]
    mean = float(np.mean(defined)) if defined else None

    undefined = [
        class_names[m] for m in range(1, num_classes) if union[m] == 0
    ]
    if undefined:
        warnings.warn(
            f"IoU undefined (zero union) for classes {undefined}; they are "
            "excluded from the mean"
        )

    occupied_pred, occupied_gt = pred != 0, gt != 0
    geo_union = int(np.sum(occupied_pred | occupied_gt))
    geometry_iou = (
        float(np.sum(occupied_pred & occupied_gt) / geo_union)
        if geo_union
        else None
    )
    logger.debug("mIoU %s over %d voxels", mean, gt.size)
    return MiouValue(list(class_names), per_class, mean, geometry_iou)
