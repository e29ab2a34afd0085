from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from occlite.errors import ConfigurationError


@dataclass(frozen=True)
class DepthBinSpec:
    """Uniform depth bins over [d_min, d_max) in metres."""

    d_min: float
    d_max: float
    num_bins: int

    def __post_init__(self) -> None:
        if not self.d_max > self.d_min > 0.0:
            raise ConfigurationError(
                f"Depth bins need d_max > d_min > 0, got "
                f"d_min={self.d_min}, d_max={self.d_max}"
            )
        if self.num_bins < 1:
            raise ConfigurationError("Depth bins need at least one bin")

    @property
    def width(self) -> float:
        return (self.d_max - self.d_min) / self.num_bins

    def centers(self) -> np.ndarray:
        return self.d_min + (np.arange(self.num_bins) + 0.5) * self.width


def depth_targets(
    depth_map: np.ndarray, bins: DepthBinSpec
) -> tuple[np.ndarray, np.ndarray]:
    """One-hot depth-bin targets for a [H', W'] depth map.

    Returns:
        (one_hot [D, H', W'], valid [H', W']). A pixel is valid when
        d_min <= depth < d_max; invalid pixels have an all-zero target.
    """
    depth = np.asarray(depth_map, dtype=np.float64)
    valid = (depth >= bins.d_min) & (depth < bins.d_max)
    index = np.floor((depth - bins.d_min) / bins.width)
    index = np.clip(np.where(valid, index, 0), 0, bins.num_bins - 1)
    one_hot = np.arange(bins.num_bins)[:, None, None] == index[None]
    return (one_hot & valid[None]).astype(np.float64), valid
