from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from occlite.errors import ConfigurationError, GenerationError
from occlite.geometry import Camera, CameraRig, VoxelGridSpec
from occlite.supervision import OccupancyVolume, default_class_names
from occlite.utils.prng import SplitMix64

logger = logging.getLogger(__name__)

Archetype = Literal["box", "pillar"]


@dataclass(frozen=True)
class RigSpec:
    """N cameras on a horizontal ring around the ego origin, each facing
    outward and tilted down by `pitch_deg`.
    """

    num_cameras: int = 4
    radius: float = 0.5
    height: float = 1.0
    pitch_deg: float = 10.0
    fov_deg: float = 100.0
    image_size: tuple[int, int] = (24, 40)

    def __post_init__(self) -> None:
        object.__setattr__(self, "image_size", tuple(self.image_size))
        if self.num_cameras < 1:
            raise ConfigurationError("A ring rig needs at least one camera")
        if not 0.0 < self.fov_deg < 180.0:
            raise ConfigurationError(
                f"Field of view must lie in (0, 180) degrees, got "
                f"{self.fov_deg}"
            )
        if len(self.image_size) != 2 or min(self.image_size) < 1:
            raise ConfigurationError(
                f"Bad image size {list(self.image_size)}"
            )


def ring_rig(spec: RigSpec) -> CameraRig:
    """Camera i sits at yaw 2*pi*i/N on the ring and looks along that yaw."""
    cameras = []
    for i in range(spec.num_cameras):
        yaw = 2.0 * np.pi * i / spec.num_cameras
        position = (
            spec.radius * np.cos(yaw),
            spec.radius * np.sin(yaw),
            spec.height,
        )
        cameras.append(
            Camera.look_from(
                position,
                yaw,
                np.radians(spec.pitch_deg),
                spec.image_size,
                np.radians(spec.fov_deg),
            )
        )
    return CameraRig(tuple(cameras))


@dataclass(frozen=True)
class SceneSpec:
    """Everything that determines a synthetic scene. Identical specs give
    bit-identical scenes.
    """

    seed: int
    grid: VoxelGridSpec
    num_classes: int = 5
    num_boxes: int = 6
    num_pillars: int = 4
    ground_class: int = 1
    ground_thickness: int = 1
    # Objects keep at least this many metres (in x-y) from the ego origin
    keep_out_radius: float = 3.0
    max_retries: int = 100
    rig: RigSpec = field(default_factory=RigSpec)
    class_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.class_names is None:
            object.__setattr__(
                self, "class_names", default_class_names(self.num_classes)
            )
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if len(self.class_names) != self.num_classes:  # type: ignore
            raise ConfigurationError(
                f"{len(self.class_names)} class names for "  # type: ignore
                f"{self.num_classes} classes"
            )
        if not 0 < self.ground_class < self.num_classes:
            raise ConfigurationError(
                f"Ground class {self.ground_class} must lie in "
                f"[1, {self.num_classes})"
            )
        if self.num_boxes < 0 or self.num_pillars < 0:
            raise ConfigurationError("Object counts must be >= 0")
        if self.num_boxes + self.num_pillars and self.num_classes < 3:
            raise ConfigurationError(
                "Objects need at least one class besides empty and ground"
            )
        if not 0 <= self.ground_thickness < self.grid.dims[2]:
            raise ConfigurationError(
                f"Ground thickness {self.ground_thickness} must leave room "
                f"in a grid of height {self.grid.dims[2]}"
            )
        if self.max_retries < 1:
            raise ConfigurationError("max_retries must be >= 1")

    @property
    def object_classes(self) -> list[int]:
        return [
            m for m in range(1, self.num_classes) if m != self.ground_class
        ]


@dataclass(frozen=True)
class PlacedBox:
    """An axis-aligned block of voxels [lo, hi) with one class."""

    lo: tuple[int, int, int]
    hi: tuple[int, int, int]
    label: int
    archetype: Archetype

    @property
    def volume(self) -> int:
        return int(np.prod(np.subtract(self.hi, self.lo)))

    def overlaps(self, other: PlacedBox) -> bool:
        return all(
            a_lo < b_hi and b_lo < a_hi
            for a_lo, a_hi, b_lo, b_hi in zip(
                self.lo, self.hi, other.lo, other.hi
            )
        )

    def distance_to_origin(self, grid: VoxelGridSpec) -> float:
        """x-y distance in metres from the ego origin to the box footprint."""
        lo = grid.start[:2] + np.array(self.lo[:2]) * grid.step[:2]
        hi = grid.start[:2] + np.array(self.hi[:2]) * grid.step[:2]
        gap = np.maximum(np.maximum(lo, -hi), 0.0)
        return float(np.hypot(*gap))


def _draw_box(
    rng: SplitMix64, spec: SceneSpec, archetype: Archetype
) -> PlacedBox:
    h, w, z = spec.grid.dims
    base = spec.ground_thickness
    headroom = z - base
    if archetype == "box":
        size = (
            min(rng.integers(2, 6), h),
            min(rng.integers(2, 6), w),
            rng.integers(min(2, headroom), min(4, headroom) + 1),
        )
    else:
        size = (1, 1, rng.integers(min(3, headroom), headroom + 1))
    x0 = rng.integers(0, h - size[0] + 1)
    y0 = rng.integers(0, w - size[1] + 1)
    classes = spec.object_classes
    label = classes[rng.integers(0, len(classes))]
    lo = (x0, y0, base)
    hi = (x0 + size[0], y0 + size[1], base + size[2])
    return PlacedBox(lo, hi, label, archetype)


def plan_objects(spec: SceneSpec) -> list[PlacedBox]:
    """Places the boxes then the pillars, each on top of the ground and
    clear of every earlier object and of the keep-out disc.

    Raises:
        GenerationError: An object found no free spot in `max_retries`
            draws.
    """
    rng = SplitMix64(spec.seed)
    placed: list[PlacedBox] = []
    plan: list[Archetype] = ["box"] * spec.num_boxes + [
        "pillar"
    ] * spec.num_pillars
    for index, archetype in enumerate(plan):
        for _ in range(spec.max_retries):
            candidate = _draw_box(rng, spec, archetype)
            clear = candidate.distance_to_origin(spec.grid) >= (
                spec.keep_out_radius
            )
            if clear and not any(candidate.overlaps(p) for p in placed):
                placed.append(candidate)
                break
        else:
            raise GenerationError(
                f"Could not place {archetype} {index} after "
                f"{spec.max_retries} attempts",
                spec.seed,
            )
    logger.debug("Placed %d objects for seed %d", len(placed), spec.seed)
    return placed


def gen_scene(spec: SceneSpec) -> OccupancyVolume:
    """Ground slab at the bottom of the grid, then the planned objects.
    Every other voxel is empty (class 0).
    """
    labels = np.zeros(spec.grid.dims, dtype=np.int64)
    labels[:, :, : spec.ground_thickness] = spec.ground_class
    for box in plan_objects(spec):
        (x0, y0, z0), (x1, y1, z1) = box.lo, box.hi
        labels[x0:x1, y0:y1, z0:z1] = box.label
    return OccupancyVolume(spec.class_names, labels=labels)  # type: ignore
