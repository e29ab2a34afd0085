from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from occlite.errors import ConfigurationError


@dataclass(frozen=True)
class VoxelGridSpec:
    """A perception range in ego metres plus a voxel count per axis.

    `point_range` is [H_s, W_s, Z_s, H_e, W_e, Z_e] and `dims` is [H, W, Z].
    The H axis runs along ego x, W along ego y and Z along ego z.
    """

    point_range: tuple[float, float, float, float, float, float]
    dims: tuple[int, int, int]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "point_range", tuple(float(v) for v in self.point_range)
        )
        object.__setattr__(self, "dims", tuple(int(v) for v in self.dims))
        if len(self.point_range) != 6 or len(self.dims) != 3:
            raise ConfigurationError(
                "A voxel grid needs a 6-value range and 3 dims, got "
                f"{list(self.point_range)} and {list(self.dims)}"
            )
        start, end = self.start, self.end
        if np.any(end <= start):
            raise ConfigurationError(
                f"Empty perception range {list(self.point_range)}"
            )
        if min(self.dims) < 1:
            raise ConfigurationError(f"Grid dims must be >= 1: {self.dims}")

    @property
    def start(self) -> np.ndarray:
        return np.array(self.point_range[:3])

    @property
    def end(self) -> np.ndarray:
        return np.array(self.point_range[3:])

    @property
    def step(self) -> np.ndarray:
        """Voxel extent along the (H, W, Z) axes."""
        return (self.end - self.start) / np.array(self.dims)

    def voxel_size(self) -> list[float]:
        """Voxel shape ordered as [(W_e-W_s)/W, (H_e-H_s)/H, (Z_e-Z_s)/Z]."""
        (h_s, w_s, z_s, h_e, w_e, z_e) = self.point_range
        h, w, z = self.dims
        return [(w_e - w_s) / w, (h_e - h_s) / h, (z_e - z_s) / z]

    @property
    def num_voxels(self) -> int:
        h, w, z = self.dims
        return h * w * z

    def halved(self) -> VoxelGridSpec:
        """The same range at half resolution per axis."""
        if any(n % 2 for n in self.dims):
            raise ConfigurationError(
                f"Grid dims {list(self.dims)} must all be even to halve"
            )
        half = tuple(n // 2 for n in self.dims)
        return VoxelGridSpec(self.point_range, half)  # type: ignore[arg-type]

    def locate(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Maps ego points [..., 3] to integer voxel indices [..., 3].

        Intervals are half-open, so a point on a voxel's upper face belongs to
        the next voxel.

        Returns:
            (indices, inside) where `inside` marks points within the range.
        """
        rel = (np.asarray(points, dtype=np.float64) - self.start) / self.step
        indices = np.floor(rel).astype(np.int64)
        inside = np.all((indices >= 0) & (indices < np.array(self.dims)), -1)
        return indices, inside

    def flat_index(self, indices: np.ndarray) -> np.ndarray:
        h, w, z = self.dims
        return (indices[..., 0] * w + indices[..., 1]) * z + indices[..., 2]


def voxel_centers(spec: VoxelGridSpec) -> np.ndarray:
    """Ego coordinates of every voxel center, [H, W, Z, 3]."""
    axes = [
        spec.start[a] + (np.arange(spec.dims[a]) + 0.5) * spec.step[a]
        for a in range(3)
    ]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack(grid, axis=-1)
