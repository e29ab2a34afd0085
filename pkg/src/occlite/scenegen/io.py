from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from occlite.errors import RejectedInputError
from occlite.geometry import Camera, CameraRig, VoxelGridSpec
from occlite.scenegen.render import RenderedView
from occlite.supervision import OccupancyVolume
from occlite.tensor_core import Tensor
from occlite.utils.io import load_json, read_occt, save_json, write_occt

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
LABELS_NAME = "labels.occt"


def camera_to_dict(cam: Camera) -> dict[str, Any]:
    return {
        "intrinsics": cam.intrinsics.tolist(),
        "extrinsics": cam.extrinsics.tolist(),
        "image_size": list(cam.image_size),
    }


def camera_from_dict(data: Mapping[str, Any]) -> Camera:
    """Builds a camera from row-major intrinsics (3x3) and extrinsics (4x4),
    given nested or flat.
    """
    try:
        intrinsics = np.asarray(data["intrinsics"], dtype=np.float64)
        extrinsics = np.asarray(data["extrinsics"], dtype=np.float64)
        image_size = tuple(int(v) for v in data["image_size"])
    except KeyError as err:
        raise RejectedInputError(f"Camera entry lacks {err}") from err
    if intrinsics.size != 9 or extrinsics.size != 16:
        raise RejectedInputError(
            f"Camera matrices need 9 and 16 values, got {intrinsics.size} "
            f"and {extrinsics.size}"
        )
    return Camera(
        intrinsics.reshape(3, 3),
        extrinsics.reshape(4, 4),
        image_size,  # type: ignore[arg-type]
    )


@dataclass(eq=False)
class SceneBundle:
    """A scene as stored on disk: labels, rig, grid and renders."""

    scene: OccupancyVolume
    rig: CameraRig
    grid: VoxelGridSpec
    features: list[np.ndarray]
    depths: list[np.ndarray]
    manifest: dict[str, Any]


def save_scene(
    out_dir: str | Path,
    scene: OccupancyVolume,
    rig: CameraRig,
    grid: VoxelGridSpec,
    views: Sequence[RenderedView],
    seed: int,
    extra: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    """Writes labels, per-camera feature images and depth maps as `.occt`
    files plus a JSON manifest naming them. Returns the manifest.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_occt(out / LABELS_NAME, scene.hard_labels(), "i64")
    feature_files, depth_files = [], []
    for index, view in enumerate(views):
        feature_name = f"features_cam{index}.occt"
        depth_name = f"depth_cam{index}.occt"
        # depth stays f64 so reloaded depth-bin targets match the render
        Tensor(view.features, name=feature_name).save(
            out / feature_name, "f32"
        )
        Tensor(view.depth, name=depth_name).save(out / depth_name, "f64")
        feature_files.append(
            {"file": feature_name, "shape": list(view.features.shape)}
        )
        depth_files.append(
            {"file": depth_name, "shape": list(view.depth.shape)}
        )

    manifest: dict[str, Any] = {
        "seed": seed,
        "class_names": list(scene.class_names),
        "grid": {
            "point_range": list(grid.point_range),
            "dims": list(grid.dims),
        },
        "labels": {"file": LABELS_NAME, "shape": list(scene.dims)},
        "features": feature_files,
        "depths": depth_files,
        "cameras": [camera_to_dict(cam) for cam in rig],
    }
    manifest.update(extra or {})
    save_json(manifest, out / MANIFEST_NAME)
    logger.info("Wrote scene with %d cameras to %s", len(rig), out)
    return manifest


def load_scene(scene_dir: str | Path) -> SceneBundle:
    """Reads a directory written by `save_scene`."""
    root = Path(scene_dir)
    manifest = load_json(root / MANIFEST_NAME)
    if not isinstance(manifest, dict):
        raise RejectedInputError(f"{root / MANIFEST_NAME} is not an object")
    try:
        grid = VoxelGridSpec(
            tuple(manifest["grid"]["point_range"]),  # type: ignore[arg-type]
            tuple(manifest["grid"]["dims"]),  # type: ignore[arg-type]
        )
        labels = read_occt(root / manifest["labels"]["file"])
        scene = OccupancyVolume.from_labels(labels, manifest["class_names"])
        rig = CameraRig(
            tuple(camera_from_dict(cam) for cam in manifest["cameras"])
        )
        features = [
            Tensor.load(root / f["file"]).data for f in manifest["features"]
        ]
        depths = [
            Tensor.load(root / d["file"]).data for d in manifest["depths"]
        ]
    except KeyError as err:
        raise RejectedInputError(f"Scene manifest lacks {err}") from err
    if len(features) != len(rig) or len(depths) != len(rig):
        raise RejectedInputError(
            f"Manifest lists {len(features)} feature and {len(depths)} depth "
            f"files for {len(rig)} cameras"
        )
    return SceneBundle(scene, rig, grid, features, depths, manifest)
