from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from occlite.errors import RejectedInputError

DEFAULT_CLASS_NAMES = ("empty", "ground", "vehicle", "pole", "structure")


@dataclass(eq=False)
class OccupancyVolume:
    """Semantic occupancy, either as labels [H, W, Z] (class ids, 0 = empty)
    or as per-class logits [M, H, W, Z].
    """

    class_names: tuple[str, ...]
    labels: np.ndarray | None = None
    logits: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.class_names = tuple(self.class_names)
        if (self.labels is None) == (self.logits is None):
            raise RejectedInputError(
                "An occupancy volume holds exactly one of labels or logits"
            )
        m = self.num_classes
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if not np.issubdtype(self.labels.dtype, np.integer):
                raise RejectedInputError("Labels must be integers")
            if self.labels.ndim != 3:
                raise RejectedInputError(
                    f"Labels must be [H, W, Z], got {list(self.labels.shape)}"
                )
            if self.labels.size and (
                self.labels.min() < 0 or self.labels.max() >= m
            ):
                raise RejectedInputError(
                    f"Label ids must lie in [0, {m}), got range "
                    f"[{self.labels.min()}, {self.labels.max()}]"
                )
        else:
            self.logits = np.asarray(self.logits, dtype=np.float64)
            if self.logits.ndim != 4 or self.logits.shape[0] != m:
                raise RejectedInputError(
                    f"Logits must be [{m}, H, W, Z], got "
                    f"{list(self.logits.shape)}"
                )
            if not np.all(np.isfinite(self.logits)):
                raise RejectedInputError("Logits must be finite")

    @classmethod
    def from_labels(
        cls, labels: np.ndarray, class_names: Sequence[str] | int
    ) -> OccupancyVolume:
        if isinstance(class_names, int):
            class_names = default_class_names(class_names)
        return cls(tuple(class_names), labels=np.asarray(labels, np.int64))

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def dims(self) -> tuple[int, int, int]:
        if self.labels is not None:
            return self.labels.shape  # type: ignore[return-value]
        assert self.logits is not None
        return self.logits.shape[1:]  # type: ignore[return-value]

    def hard_labels(self) -> np.ndarray:
        if self.labels is not None:
            return self.labels
        assert self.logits is not None
        return np.argmax(self.logits, axis=0)


def default_class_names(num_classes: int) -> tuple[str, ...]:
    names = DEFAULT_CLASS_NAMES[:num_classes]
    extra = tuple(f"class{i}" for i in range(len(names), num_classes))
    return names + extra


def bev_gt_from_occ(gt: OccupancyVolume) -> np.ndarray:
    """Multi-hot BEV ground truth [M, H, W]: bit m of column (x, y) is set
    iff some voxel of the column has label m, the empty class included.
    """
    labels = gt.hard_labels()
    classes = np.arange(gt.num_classes)[:, None, None, None]
    return (labels[None] == classes).any(axis=-1).astype(np.float64)


def downsample_bev_gt(bev_gt: np.ndarray, factor: int = 2) -> np.ndarray:
    """Logical-OR pooling over factor x factor blocks."""
    m, h, w = bev_gt.shape
    if h % factor or w % factor:
        raise RejectedInputError(
            f"BEV ground truth {h}x{w} is not divisible by {factor}"
        )
    blocks = bev_gt.reshape(m, h // factor, factor, w // factor, factor)
    return blocks.max(axis=(2, 4))
