from __future__ import annotations

import logging
import time
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd

from occlite._handle_logs import _handle_logging_level
from occlite.errors import ConfigurationError
from occlite.geometry import CameraRig, VoxelGridSpec
from occlite.metrics.flops import (
    head2d_flops_layers,
    head3d_flops_layers,
    total_flops,
)
from occlite.metrics.report import emit_frame
from occlite.occupancy_head import (
    HeadConfig,
    HeadWeights,
    bev_collapse,
    bev_decode,
    bev_seg_head,
    head_3dfcn,
    integrate,
    interp_sample,
)
from occlite.tensor_core import ConvParams
from occlite.utils.prng import SplitMix64
from occlite.utils.progress_bar import tqdm_wrapper
from occlite.view_transform import (
    DepthBinSpec,
    build_frustum,
    lift,
    voxel_pool,
)

logger = logging.getLogger(__name__)

BENCH_COLUMNS = ["stage", "flops", "median_ms", "p10_ms", "p90_ms"]
MIN_REPEATS = 5


@dataclass
class StageTiming:
    stage: str
    flops: int
    times_ms: list[float]

    @property
    def median_ms(self) -> float:
        return float(np.median(self.times_ms))

    @property
    def p10_ms(self) -> float:
        return float(np.percentile(self.times_ms, 10))

    @property
    def p90_ms(self) -> float:
        return float(np.percentile(self.times_ms, 90))


@dataclass
class BenchReport:
    """Measured wall-clock per stage next to its analytic FLOPs."""

    stages: list[StageTiming]
    repeats: int
    warmup: int
    parallel: bool
    config_echo: dict[str, Any] = field(default_factory=dict)

    @property
    def mode(self) -> str:
        return "parallel" if self.parallel else "single-threaded"

    def __getitem__(self, stage: str) -> StageTiming:
        for timing in self.stages:
            if timing.stage == stage:
                return timing
        raise KeyError(stage)

    def to_df(self) -> pd.DataFrame:
        """Returns one row per stage with columns `BENCH_COLUMNS`."""
        rows = [
            {
                "stage": s.stage,
                "flops": s.flops,
                "median_ms": s.median_ms,
                "p10_ms": s.p10_ms,
                "p90_ms": s.p90_ms,
            }
            for s in self.stages
        ]
        return pd.DataFrame(rows, columns=BENCH_COLUMNS)

    def echo(self) -> dict[str, Any]:
        return {
            "repeats": self.repeats,
            "warmup": self.warmup,
            "mode": self.mode,
            **self.config_echo,
        }

    def __str__(self) -> str:
        return f"Benchmark ({self.mode}, R={self.repeats})\n{self.to_df()}"


def emit_table(report: BenchReport, fmt: str) -> str:
    """Renders a report as CSV or markdown with columns stage, flops,
    median_ms, p10_ms, p90_ms.
    """
    return emit_frame(report.to_df(), fmt)


def time_call(
    fn: Callable[[], Any], repeats: int, warmup: int = 2
) -> list[float]:
    """Wall-clock milliseconds of `repeats` calls after `warmup` untimed
    calls.
    """
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append((time.perf_counter() - start) * 1e3)
    return times


def _check_repeats(repeats: int) -> None:
    if repeats < MIN_REPEATS:
        raise ConfigurationError(
            f"Benchmarks need at least {MIN_REPEATS} repeats, got {repeats}"
        )


def _random_inputs(
    config: HeadConfig, rig: CameraRig, seed: int
) -> tuple[np.ndarray, list[np.ndarray]]:
    rng = SplitMix64(seed)
    vb = rng.uniform(0.0, 1.0, (config.c2,) + config.half_dims)
    height, width = rig[0].image_size
    features = [
        rng.uniform(0.0, 1.0, (config.c1, height, width)) for _ in rig
    ]
    return vb, features


def bench_heads(
    config: HeadConfig,
    rig: CameraRig,
    grid: VoxelGridSpec,
    weights: Mapping[str, ConvParams] | None = None,
    seed: int = 0,
    repeats: int = 9,
    warmup: int = 2,
    parallel: bool = False,
    show_progress: bool = False,
) -> BenchReport:
    """Times the collapsed-BEV head (collapse, decode, interpolation
    sampling, integration) against the 3D FCN head on the same V_B.
    """
    _check_repeats(repeats)
    if weights is None:
        weights = HeadWeights.init(config, seed)
    vb, features = _random_inputs(config, rig, seed)
    decoded = bev_decode(bev_collapse(vb), weights, config)
    sampled = (
        interp_sample(features, rig, grid, parallel)
        if config.use_interp_fusion
        else None
    )

    def head2d() -> None:
        b = bev_decode(bev_collapse(vb), weights, config)
        p = (
            interp_sample(features, rig, grid, parallel)
            if config.use_interp_fusion
            else None
        )
        integrate(b, p, weights, config)

    layers2d = head2d_flops_layers(config, len(rig), include_bev_head=False)

    def stage_flops(stage: str) -> int:
        return total_flops([lay for lay in layers2d if lay.stage == stage])

    stages: list[tuple[str, int, Callable[[], Any]]] = [
        ("head2d_collapse", 0, lambda: bev_collapse(vb)),
        (
            "head2d_decode",
            stage_flops("head2d_decode"),
            lambda: bev_decode(bev_collapse(vb), weights, config),
        ),
    ]
    if config.use_interp_fusion:
        stages.append(
            (
                "head2d_interp",
                stage_flops("head2d_interp"),
                lambda: interp_sample(features, rig, grid, parallel),
            )
        )
    stages += [
        (
            "head2d_integrate",
            stage_flops("head2d_integrate"),
            lambda: integrate(decoded, sampled, weights, config),
        ),
        ("head2d_total", total_flops(layers2d), head2d),
        (
            "head3d_total",
            total_flops(head3d_flops_layers(config)),
            lambda: head_3dfcn(vb, weights, config),
        ),
    ]

    timings = []
    with _handle_logging_level():
        for name, flops, fn in tqdm_wrapper(
            stages, desc="Benchmarking heads", disable=not show_progress
        ):
            times = time_call(fn, repeats, warmup)
            timings.append(StageTiming(name, flops, times))
    return BenchReport(
        timings,
        repeats=repeats,
        warmup=warmup,
        parallel=parallel,
        config_echo={
            "grid": list(grid.dims),
            "c1": config.c1,
            "c2": config.c2,
            "c3": config.c3,
            "kernel_size": config.kernel_size,
            "num_cameras": len(rig),
        },
    )


def bench_pipeline(
    config: HeadConfig,
    rig: CameraRig,
    grid: VoxelGridSpec,
    bins: DepthBinSpec,
    weights: Mapping[str, ConvParams] | None = None,
    seed: int = 0,
    repeats: int = 9,
    warmup: int = 2,
    parallel: bool = False,
) -> BenchReport:
    """Latency breakdown of a whole forward pass: per-camera lift (2D),
    voxel pooling (2D-to-3D), the occupancy head (3D) and the total.

    The lift is costed at one multiply per lifted element.
    """
    _check_repeats(repeats)
    if weights is None:
        weights = HeadWeights.init(config, seed)
    rng = SplitMix64(seed)
    height, width = rig[0].image_size
    depth_shape = (bins.num_bins, height, width)
    depth_logits = [rng.normal(depth_shape) for _ in rig]
    context_shape = (config.c2, height, width)
    context = [rng.uniform(0.0, 1.0, context_shape) for _ in rig]
    _, features = _random_inputs(config, rig, seed + 1)
    frustums = [build_frustum(cam, bins) for cam in rig]
    half = grid.halved()

    def lift_all() -> list[np.ndarray]:
        return [lift(d, c) for d, c in zip(depth_logits, context)]

    def pool(lifted: list[np.ndarray]) -> np.ndarray:
        return voxel_pool(frustums, lifted, half, parallel)

    def head(vb: np.ndarray) -> None:
        b = bev_decode(bev_collapse(vb), weights, config)
        if config.use_bev_supervision:
            bev_seg_head(b, weights)
        p = (
            interp_sample(features, rig, grid, parallel)
            if config.use_interp_fusion
            else None
        )
        integrate(b, p, weights, config)

    lifted = lift_all()
    vb = pool(lifted)
    lift_flops = len(rig) * height * width * bins.num_bins * config.c2
    head_flops = total_flops(head2d_flops_layers(config, len(rig)))
    stages: list[tuple[str, int, Callable[[], Any]]] = [
        ("pipeline_2d", lift_flops, lift_all),
        ("pipeline_2d_to_3d", 0, lambda: pool(lifted)),
        ("pipeline_3d", head_flops, lambda: head(vb)),
        (
            "pipeline_total",
            lift_flops + head_flops,
            lambda: head(pool(lift_all())),
        ),
    ]
    timings = []
    with _handle_logging_level():
        for name, flops, fn in stages:
            times = time_call(fn, repeats, warmup)
            logger.debug("%s: median %.3f ms", name, float(np.median(times)))
            timings.append(StageTiming(name, flops, times))
    return BenchReport(
        timings,
        repeats=repeats,
        warmup=warmup,
        parallel=parallel,
        config_echo={
            "grid": list(grid.dims),
            "depth_bins": bins.num_bins,
            "num_cameras": len(rig),
        },
    )
