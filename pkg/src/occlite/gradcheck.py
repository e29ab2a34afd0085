"""Finite-difference checks of every analytic backward pass.

Each check draws a small random problem from a `SplitMix64` stream, reduces
the operation to a scalar (a fixed random projection of its output, or the
loss value itself) and compares the analytic gradient with central
differences.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np
import pandas as pd

from occlite.errors import ConfigurationError
from occlite.geometry import Camera, CameraRig, VoxelGridSpec
from occlite.occupancy_head import (
    bev_seg_head,
    bev_seg_head_backward,
    interp_sample,
    interp_sample_backward,
)
from occlite.supervision import (
    IGNORE_ID,
    LossValue,
    affinity_losses,
    bev_bce,
    depth_loss,
    dice_loss,
    focal_loss,
    lovasz_softmax,
)
from occlite.tensor_core import (
    ConvParams,
    channel_softmax,
    conv2d,
    conv2d_backward,
    relu,
    relu_backward,
    upsample2x_bilinear,
    upsample2x_bilinear_backward,
)
from occlite.utils.prng import SplitMix64
from occlite.utils.progress_bar import tqdm_wrapper
from occlite.view_transform import (
    DepthBinSpec,
    build_frustum,
    lift,
    lift_backward,
    voxel_pool,
    voxel_pool_backward,
)

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-6
DEFAULT_SEEDS = 20
# Inputs closer than this to a ReLU kink are re-drawn
KINK_MARGIN = 1e-3
# Lovasz errors closer than this to each other are re-drawn
SORT_MARGIN = 1e-4
MAX_REDRAWS = 50

# (label, analytic gradient, numerical gradient)
GradPair = tuple[str, np.ndarray, np.ndarray]
GradCheck = Callable[[SplitMix64, float], list[GradPair]]


def numerical_gradient(
    fn: Callable[[np.ndarray], float], x: np.ndarray, h: float = DEFAULT_STEP
) -> np.ndarray:
    """Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every
    element of `x`. `x` is left unchanged.
    """
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat, grad_flat = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        plus = fn(x)
        flat[i] = original - h
        minus = fn(x)
        flat[i] = original
        grad_flat[i] = (plus - minus) / (2.0 * h)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |a - n| divided by the largest gradient magnitude of either side.
    Returns the absolute error when both gradients vanish.
    """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.shape != numeric.shape:
        raise ConfigurationError(
            f"Gradient shapes differ: {list(analytic.shape)} vs "
            f"{list(numeric.shape)}"
        )
    if analytic.size == 0:
        return 0.0
    error = float(np.max(np.abs(analytic - numeric)))
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)))
    return error / float(scale) if scale > 0 else error


def _projected(fn: Callable[[np.ndarray], np.ndarray], probe: np.ndarray):
    return lambda x: float(np.sum(fn(x) * probe))


def _away_from_zero(rng: SplitMix64, shape: tuple[int, ...]) -> np.ndarray:
    magnitude = rng.uniform(0.05, 1.0, shape)
    sign = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    return sign * magnitude


def _redraw(
    draw: Callable[[], tuple], accept: Callable[..., bool], what: str
) -> tuple:
    for _ in range(MAX_REDRAWS):
        sample = draw()
        if accept(*sample):
            return sample
    raise ConfigurationError(f"Could not draw a smooth {what} input")


def check_conv2d(rng: SplitMix64, h: float) -> list[GradPair]:
    stride = 1 + rng.integers(0, 2)
    x = rng.normal((2, 5, 7))
    weight, bias = rng.normal((3, 2, 3, 3)), rng.normal(3)
    probe = rng.normal(conv2d(x, ConvParams(weight, bias, stride)).shape)
    grad_x, grad_w, grad_b = conv2d_backward(
        x, ConvParams(weight, bias, stride), probe
    )
    return [
        (
            "input",
            grad_x,
            numerical_gradient(
                _projected(
                    lambda v: conv2d(v, ConvParams(weight, bias, stride)),
                    probe,
                ),
                x,
                h,
            ),
        ),
        (
            "weight",
            grad_w,
            numerical_gradient(
                _projected(
                    lambda v: conv2d(x, ConvParams(v, bias, stride)), probe
                ),
                weight,
                h,
            ),
        ),
        (
            "bias",
            grad_b,
            numerical_gradient(
                _projected(
                    lambda v: conv2d(x, ConvParams(weight, v, stride)), probe
                ),
                bias,
                h,
            ),
        ),
    ]


def check_relu(rng: SplitMix64, h: float) -> list[GradPair]:
    x = _away_from_zero(rng, (3, 4, 4))
    probe = rng.normal(x.shape)
    numeric = numerical_gradient(_projected(relu, probe), x, h)
    return [("input", relu_backward(x, probe), numeric)]


def check_upsample2x(rng: SplitMix64, h: float) -> list[GradPair]:
    x = rng.normal((2, 3, 4))
    probe = rng.normal((2, 6, 8))
    numeric = numerical_gradient(_projected(upsample2x_bilinear, probe), x, h)
    return [("input", upsample2x_bilinear_backward(probe), numeric)]


def _small_scene(rng: SplitMix64) -> tuple[CameraRig, VoxelGridSpec]:
    grid = VoxelGridSpec((-4.0, -4.0, -1.0, 4.0, 4.0, 1.0), (4, 4, 2))
    cameras = []
    for i in range(2):
        yaw = np.pi * i + rng.uniform(-0.3, 0.3)
        position = (0.3 * np.cos(yaw), 0.3 * np.sin(yaw), 0.5)
        cameras.append(
            Camera.look_from(
                position, yaw, np.radians(10.0), (6, 8), np.radians(120.0)
            )
        )
    return CameraRig(tuple(cameras)), grid


def check_interp_sample(rng: SplitMix64, h: float) -> list[GradPair]:
    rig, grid = _small_scene(rng)
    features = [rng.normal((2, 6, 8)) for _ in rig]
    probe = rng.normal((2,) + grid.dims)
    grads = interp_sample_backward(features, rig, grid, probe)
    pairs = []
    for index in range(len(rig)):

        def sample(v: np.ndarray, index: int = index) -> np.ndarray:
            maps = list(features)
            maps[index] = v
            return interp_sample(maps, rig, grid).features

        numeric = numerical_gradient(
            _projected(sample, probe), features[index], h
        )
        pairs.append((f"features[{index}]", grads[index], numeric))
    return pairs


def check_voxel_pool(rng: SplitMix64, h: float) -> list[GradPair]:
    rig, grid = _small_scene(rng)
    bins = DepthBinSpec(0.5, 6.5, 3)
    frustums = [build_frustum(cam, bins) for cam in rig]
    lifted = [rng.normal((6, 8, 3, 2)) for _ in rig]
    probe = rng.normal((2,) + grid.dims)
    grads = voxel_pool_backward(frustums, probe, grid)
    pairs = []
    for index in range(len(rig)):

        def pool(v: np.ndarray, index: int = index) -> np.ndarray:
            parts = list(lifted)
            parts[index] = v
            return voxel_pool(frustums, parts, grid).features

        numeric = numerical_gradient(_projected(pool, probe), lifted[index], h)
        pairs.append((f"lifted[{index}]", grads[index], numeric))
    return pairs


def check_lift(rng: SplitMix64, h: float) -> list[GradPair]:
    depth_logits = rng.normal((4, 3, 3))
    context = rng.normal((2, 3, 3))
    probe = rng.normal((3, 3, 4, 2))
    grad_depth, grad_context = lift_backward(depth_logits, context, probe)
    return [
        (
            "depth_logits",
            grad_depth,
            numerical_gradient(
                _projected(lambda v: lift(v, context), probe), depth_logits, h
            ),
        ),
        (
            "context",
            grad_context,
            numerical_gradient(
                _projected(lambda v: lift(depth_logits, v), probe), context, h
            ),
        ),
    ]


def check_bev_seg_head(rng: SplitMix64, h: float) -> list[GradPair]:
    """bev_bce(bev_seg_head(b)) with respect to b and both layers."""

    def draw() -> tuple:
        b = rng.normal((3, 4, 4))
        conv1 = ConvParams(rng.normal((4, 3, 3, 3)), rng.normal(4))
        conv2 = ConvParams(rng.normal((2, 4, 1, 1)), rng.normal(2))
        return b, conv1, conv2

    def smooth(b: np.ndarray, conv1: ConvParams, conv2: ConvParams) -> bool:
        return bool(np.min(np.abs(conv2d(b, conv1))) > KINK_MARGIN)

    b, conv1, conv2 = _redraw(draw, smooth, "bev_seg_head")
    target = (rng.random((2, 4, 4)) < 0.5).astype(np.float64)

    def loss(
        b: np.ndarray = b, conv1: ConvParams = conv1, conv2: ConvParams = conv2
    ) -> float:
        weights = {"bev_seg.conv1": conv1, "bev_seg.conv2": conv2}
        return bev_bce(bev_seg_head(b, weights), target).value

    weights = {"bev_seg.conv1": conv1, "bev_seg.conv2": conv2}
    grad_logits = bev_bce(bev_seg_head(b, weights), target).grad
    grad_b, params = bev_seg_head_backward(b, weights, grad_logits)
    pairs = [("b", grad_b, numerical_gradient(lambda v: loss(b=v), b, h))]
    for name, layer, key in (
        ("bev_seg.conv1", conv1, "conv1"),
        ("bev_seg.conv2", conv2, "conv2"),
    ):
        grad_w, grad_bias = params[name]

        def with_weight(v: np.ndarray, layer=layer, key=key) -> float:
            return loss(**{key: ConvParams(v, layer.bias)})

        def with_bias(v: np.ndarray, layer=layer, key=key) -> float:
            return loss(**{key: ConvParams(layer.weight, v)})

        pairs += [
            (
                f"{name}.weight",
                grad_w,
                numerical_gradient(with_weight, layer.weight, h),
            ),
            (
                f"{name}.bias",
                grad_bias,
                numerical_gradient(with_bias, layer.bias, h),
            ),
        ]
    return pairs


def _occupancy_problem(
    rng: SplitMix64, num_classes: int = 3, dims: tuple[int, ...] = (3, 3, 2)
) -> tuple[np.ndarray, np.ndarray]:
    logits = rng.normal((num_classes,) + dims)
    labels = np.array(
        [rng.integers(0, num_classes) for _ in range(int(np.prod(dims)))]
    ).reshape(dims)
    # One ignored voxel per problem
    labels.reshape(-1)[rng.integers(0, labels.size)] = IGNORE_ID
    return logits, labels


def _loss_check(
    loss: Callable[[np.ndarray], LossValue], logits: np.ndarray, h: float
) -> list[GradPair]:
    numeric = numerical_gradient(lambda v: loss(v).value, logits, h)
    return [("logits", loss(logits).grad, numeric)]


def check_focal(rng: SplitMix64, h: float) -> list[GradPair]:
    logits, labels = _occupancy_problem(rng)
    return _loss_check(lambda v: focal_loss(v, labels), logits, h)


def check_sem(rng: SplitMix64, h: float) -> list[GradPair]:
    logits, labels = _occupancy_problem(rng)
    return _loss_check(lambda v: affinity_losses(v, labels)[0], logits, h)


def check_geo(rng: SplitMix64, h: float) -> list[GradPair]:
    logits, labels = _occupancy_problem(rng)
    return _loss_check(lambda v: affinity_losses(v, labels)[1], logits, h)


def check_dice(rng: SplitMix64, h: float) -> list[GradPair]:
    logits, labels = _occupancy_problem(rng)
    return _loss_check(lambda v: dice_loss(v, labels), logits, h)


def _well_separated(logits: np.ndarray, labels: np.ndarray) -> bool:
    keep = labels.reshape(-1) != IGNORE_ID
    probs = channel_softmax(logits).reshape(logits.shape[0], -1)[:, keep]
    kept = labels.reshape(-1)[keep]
    for c in range(logits.shape[0]):
        errors = np.sort(np.abs((kept == c) - probs[c]))
        if errors.size > 1 and np.min(np.diff(errors)) < SORT_MARGIN:
            return False
    return True


def check_lovasz(rng: SplitMix64, h: float) -> list[GradPair]:
    logits, labels = _redraw(
        lambda: _occupancy_problem(rng), _well_separated, "lovasz"
    )
    return _loss_check(lambda v: lovasz_softmax(v, labels), logits, h)


def check_depth(rng: SplitMix64, h: float) -> list[GradPair]:
    num_bins, dims = 5, (2, 3, 4)
    logits = rng.normal((num_bins,) + dims)
    bins = np.array(
        [rng.integers(0, num_bins) for _ in range(int(np.prod(dims)))]
    ).reshape(dims)
    targets = (np.arange(num_bins)[:, None, None, None] == bins[None]).astype(
        np.float64
    )
    valid = rng.random(dims) < 0.7
    valid.reshape(-1)[0] = True
    return _loss_check(lambda v: depth_loss(v, targets, valid), logits, h)


def check_bev(rng: SplitMix64, h: float) -> list[GradPair]:
    logits = rng.normal((3, 4, 4), scale=2.0)
    target = (rng.random((3, 4, 4)) < 0.3).astype(np.float64)
    return _loss_check(lambda v: bev_bce(v, target), logits, h)


DEFAULT_CHECKS: dict[str, GradCheck] = {
    "conv2d": check_conv2d,
    "relu": check_relu,
    "upsample2x_bilinear": check_upsample2x,
    "interp_sample": check_interp_sample,
    "voxel_pool": check_voxel_pool,
    "lift": check_lift,
    "bev_seg_head": check_bev_seg_head,
    "focal": check_focal,
    "sem": check_sem,
    "geo": check_geo,
    "dice": check_dice,
    "lovasz": check_lovasz,
    "depth": check_depth,
    "bev": check_bev,
}


@dataclass
class GradcheckResult:
    op: str
    seed: int
    # Worst relative error over every checked argument
    max_rel_error: float
    worst_argument: str
    passed: bool


@dataclass
class GradcheckReport:
    """Per-seed results of a gradient-check run."""

    results: list[GradcheckResult]
    tolerance: float
    step: float

    @property
    def all_passed(self) -> bool:
        return all(result.passed for result in self.results)

    @property
    def failures(self) -> list[str]:
        """Names of the operations with at least one failing seed."""
        failed = {result.op for result in self.results if not result.passed}
        return sorted(failed)

    def to_df(self) -> pd.DataFrame:
        """One row per operation: seeds run, worst error and verdict."""
        df = pd.DataFrame(
            [vars(result) for result in self.results],
            columns=[
                "op",
                "seed",
                "max_rel_error",
                "worst_argument",
                "passed",
            ],
        )
        summary = df.groupby("op", sort=False).agg(
            seeds=("seed", "count"),
            max_rel_error=("max_rel_error", "max"),
            passed=("passed", "all"),
        )
        return summary.reset_index()

    def __str__(self) -> str:
        verdict = "passed" if self.all_passed else "FAILED"
        header = f"Gradient check {verdict} (tol={self.tolerance})"
        return f"{header}\n{self.to_df()}"


def run_gradcheck(
    checks: Mapping[str, GradCheck] | None = None,
    seeds: int = DEFAULT_SEEDS,
    base_seed: int = 0,
    h: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    show_progress: bool = False,
) -> GradcheckReport:
    """Runs every check for seeds `base_seed .. base_seed + seeds - 1`.

    Args:
        checks: Operation name -> check. Defaults to `DEFAULT_CHECKS`.
        seeds: Number of random problems per operation.
        base_seed: First seed.
        h: Finite-difference step.
        tolerance: Largest accepted relative error.
        show_progress: Show a progress bar over operations.
    """
    if seeds < 1:
        raise ConfigurationError(f"seeds must be >= 1, got {seeds}")
    if checks is None:
        checks = DEFAULT_CHECKS
    results = []
    for name, check in tqdm_wrapper(
        list(checks.items()), desc="Gradient checks", disable=not show_progress
    ):
        for seed in range(base_seed, base_seed + seeds):
            pairs = check(SplitMix64(seed), h)
            errors = {
                label: max_relative_error(analytic, numeric)
                for label, analytic, numeric in pairs
            }
            worst = max(errors, key=errors.__getitem__)
            passed = errors[worst] < tolerance
            if not passed:
                logger.warning(
                    "%s failed for seed %d: %s relative error %.3e",
                    name,
                    seed,
                    worst,
                    errors[worst],
                )
            results.append(
                GradcheckResult(name, seed, errors[worst], worst, passed)
            )
    return GradcheckReport(results, tolerance=tolerance, step=h)
