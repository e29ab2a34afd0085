from __future__ import annotations

import itertools

import numpy as np

from occlite.geometry import Camera, CameraRig, VoxelGridSpec, voxel_centers
from occlite.utils.prng import SplitMix64

################################################################################
# Naive oracles
################################################################################


def naive_conv2d(
    x: np.ndarray,
    weight: np.ndarray,
    bias: np.ndarray,
    stride: int = 1,
    padding: int = 0,
) -> np.ndarray:
    """Cross-correlation written as explicit loops."""
    c_in, h, w = x.shape
    c_out, _, k, _ = weight.shape
    padded = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    h_out = (h + 2 * padding - k) // stride + 1
    w_out = (w + 2 * padding - k) // stride + 1
    out = np.zeros((c_out, h_out, w_out))
    for o in range(c_out):
        for i in range(h_out):
            for j in range(w_out):
                acc = bias[o]
                for c in range(c_in):
                    for di in range(k):
                        for dj in range(k):
                            acc += (
                                weight[o, c, di, dj]
                                * padded[c, i * stride + di, j * stride + dj]
                            )
                out[o, i, j] = acc
    return out


def naive_conv3d(
    x: np.ndarray, weight: np.ndarray, bias: np.ndarray, padding: int = 0
) -> np.ndarray:
    c_in = x.shape[0]
    c_out, _, k = weight.shape[:3]
    pad = ((0, 0),) + ((padding, padding),) * 3
    padded = np.pad(x, pad)
    dims = [n + 2 * padding - k + 1 for n in x.shape[1:]]
    out = np.zeros([c_out] + dims)
    for o in range(c_out):
        for i, j, l in itertools.product(*(range(n) for n in dims)):
            acc = bias[o]
            for c in range(c_in):
                for a, b, d in itertools.product(range(k), repeat=3):
                    tap = padded[c, i + a, j + b, l + d]
                    acc += weight[o, c, a, b, d] * tap
            out[o, i, j, l] = acc
    return out


def brute_force_interp(
    features: list[np.ndarray], rig: CameraRig, grid: VoxelGridSpec
) -> np.ndarray:
    """Per-voxel projection and bilinear sampling, one voxel at a time."""
    channels = features[0].shape[0]
    centers = voxel_centers(grid)
    out = np.zeros((channels,) + grid.dims)
    for index in itertools.product(*(range(n) for n in grid.dims)):
        total, count = np.zeros(channels), 0
        for feature, cam in zip(features, rig):
            point = cam.extrinsics[:3, :3] @ centers[index]
            point = point + cam.extrinsics[:3, 3]
            if point[2] <= 1e-6:
                continue
            u, v, _ = cam.intrinsics @ (point / point[2])
            height, width = cam.image_size
            if not (0 <= u <= width - 1 and 0 <= v <= height - 1):
                continue
            x0 = min(int(np.floor(u)), width - 1)
            y0 = min(int(np.floor(v)), height - 1)
            x1, y1 = min(x0 + 1, width - 1), min(y0 + 1, height - 1)
            wx, wy = u - x0, v - y0
            total += (
                feature[:, y0, x0] * (1 - wx) * (1 - wy)
                + feature[:, y0, x1] * wx * (1 - wy)
                + feature[:, y1, x0] * (1 - wx) * wy
                + feature[:, y1, x1] * wx * wy
            )
            count += 1
        if count:
            out[(slice(None),) + index] = total / count
    return out


def column_scan_bev(labels: np.ndarray, num_classes: int) -> np.ndarray:
    """BEV multi-hot ground truth by scanning every column."""
    h, w, _ = labels.shape
    out = np.zeros((num_classes, h, w))
    for x in range(h):
        for y in range(w):
            for m in set(labels[x, y].tolist()):
                out[m, x, y] = 1.0
    return out


################################################################################
# Random fixtures
################################################################################


def random_rig(
    rng: SplitMix64, num_cameras: int = 3, image_size=(10, 14)
) -> CameraRig:
    """Cameras near the origin at random yaw, pitch and height."""
    cameras = []
    for _ in range(num_cameras):
        yaw = rng.uniform(-np.pi, np.pi)
        position = (
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            rng.uniform(0.5, 2.0),
        )
        cameras.append(
            Camera.look_from(
                position,
                yaw,
                rng.uniform(0.0, 0.4),
                image_size,
                rng.uniform(1.0, 2.0),
            )
        )
    return CameraRig(tuple(cameras))
