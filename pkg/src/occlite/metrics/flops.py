"""Analytic multiply-accumulate counts. Bias and activation costs are not
counted.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import pandas as pd

from occlite.errors import ConfigurationError, RejectedInputError
from occlite.occupancy_head.config import HeadConfig
from occlite.occupancy_head.weights import (
    decoder_layer_shapes,
    head3d_layer_shapes,
)

LayerKind = Literal["conv2d", "conv3d", "interp"]


@dataclass(frozen=True)
class FlopsLayerSpec:
    """One costed layer.

    For `interp`, `c_in` is the sampled channel count C, `num_cameras` is N
    and `out_dims` is the fine grid (H, W, Z).
    """

    kind: LayerKind
    c_in: int
    c_out: int
    k: int
    out_dims: tuple[int, ...]
    num_cameras: int = 1
    name: str = ""
    stage: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "out_dims", tuple(self.out_dims))
        expected_rank = {"conv2d": 2, "conv3d": 3, "interp": 3}
        if self.kind not in expected_rank:
            raise ConfigurationError(f"Unknown layer kind '{self.kind}'")
        if len(self.out_dims) != expected_rank[self.kind]:
            raise ConfigurationError(
                f"{self.kind} layer {self.name!r} needs "
                f"{expected_rank[self.kind]} output dims, got {self.out_dims}"
            )
        values = (self.c_in, self.c_out, self.k, self.num_cameras)
        if min(values + self.out_dims) < 1:
            raise ConfigurationError(
                f"Layer {self.name!r} has a non-positive dimension"
            )
        if self.k % 2 == 0:
            raise ConfigurationError(f"Layer {self.name!r} has an even k")

    @classmethod
    def interp(
        cls, n: int, c: int, h: int, w: int, z: int, **kwargs
    ) -> FlopsLayerSpec:
        return cls("interp", c, c, 1, (h, w, z), num_cameras=n, **kwargs)


def _require(spec: FlopsLayerSpec, kind: LayerKind) -> None:
    if spec.kind != kind:
        raise RejectedInputError(
            f"Expected a {kind} layer, got {spec.kind} ({spec.name!r})"
        )


def flops_conv3d(spec: FlopsLayerSpec) -> int:
    """C_in * k^3 * C_out * H * W * Z."""
    _require(spec, "conv3d")
    h, w, z = spec.out_dims
    return spec.c_in * spec.k**3 * spec.c_out * h * w * z


def flops_conv2d(spec: FlopsLayerSpec) -> int:
    """C_in * k^2 * C_out * H * W."""
    _require(spec, "conv2d")
    h, w = spec.out_dims
    return spec.c_in * spec.k**2 * spec.c_out * h * w


def flops_interp(n: int, c: int, h: int, w: int, z: int) -> int:
    """Four neighbour reads per channel, voxel and camera: 4 N C H W Z."""
    if min(n, c, h, w, z) < 1:
        raise RejectedInputError("flops_interp needs positive arguments")
    return 4 * n * c * h * w * z


def layer_flops(spec: FlopsLayerSpec) -> int:
    if spec.kind == "conv3d":
        return flops_conv3d(spec)
    if spec.kind == "conv2d":
        return flops_conv2d(spec)
    return flops_interp(spec.num_cameras, spec.c_in, *spec.out_dims)


def speedup_ratio(spec3d: FlopsLayerSpec, spec2d: FlopsLayerSpec) -> Fraction:
    """FLOPs3D / FLOPs2D for a matched pair, which equals k * Z."""
    _require(spec3d, "conv3d")
    _require(spec2d, "conv2d")
    matched = (
        spec3d.c_in == spec2d.c_in
        and spec3d.c_out == spec2d.c_out
        and spec3d.k == spec2d.k
        and spec3d.out_dims[:2] == spec2d.out_dims
    )
    if not matched:
        raise RejectedInputError(
            f"Layers {spec3d.name!r} and {spec2d.name!r} are not a matched "
            "pair (C_in, C_out, k and H x W must agree)"
        )
    return Fraction(flops_conv3d(spec3d), flops_conv2d(spec2d))


def matched_conv2d(spec3d: FlopsLayerSpec) -> FlopsLayerSpec:
    """The 2D layer with the same channels, kernel and BEV size."""
    _require(spec3d, "conv3d")
    return FlopsLayerSpec(
        "conv2d",
        spec3d.c_in,
        spec3d.c_out,
        spec3d.k,
        spec3d.out_dims[:2],
        name=f"{spec3d.name}.bev",
        stage=spec3d.stage,
    )


def head2d_flops_layers(
    config: HeadConfig, num_cameras: int, include_bev_head: bool = True
) -> list[FlopsLayerSpec]:
    """Costed layers of the collapsed-BEV head in execution order."""
    shapes = decoder_layer_shapes(config)
    placed = [("bev_decode.stem", config.half_dims[:2])]
    for stage in range(1, config.num_stages + 1):
        dims = config.stage_dims(stage)
        placed += [
            (f"bev_decode.stage{stage}.{part}", dims)
            for part in ("conv1", "conv2", "skip")
        ]
        placed.append((f"bev_decode.lateral{stage}", dims))

    layers = []
    for name, dims in placed:
        shape = shapes[name]
        layers.append(
            FlopsLayerSpec(
                "conv2d",
                shape.in_channels,
                shape.out_channels,
                shape.kernel_size,
                dims,
                name=name,
                stage="head2d_decode",
            )
        )
    if include_bev_head and config.use_bev_supervision:
        layers += [
            FlopsLayerSpec(
                "conv2d",
                config.c3,
                config.seg_channels,
                config.kernel_size,
                config.half_dims[:2],
                name="bev_seg.conv1",
                stage="head2d_bevseg",
            ),
            FlopsLayerSpec(
                "conv2d",
                config.seg_channels,
                config.num_classes,
                1,
                config.half_dims[:2],
                name="bev_seg.conv2",
                stage="head2d_bevseg",
            ),
        ]
    if config.use_interp_fusion:
        layers.append(
            FlopsLayerSpec.interp(
                num_cameras,
                config.c1,
                *config.grid_dims,
                name="interp_sample",
                stage="head2d_interp",
            )
        )
    layers += [
        FlopsLayerSpec(
            "conv3d",
            config.fuse_in_channels,
            config.fused_channels,
            1,
            config.grid_dims,
            name="fuse",
            stage="head2d_integrate",
        ),
        FlopsLayerSpec(
            "conv3d",
            config.fused_channels,
            config.num_classes,
            1,
            config.grid_dims,
            name="classifier",
            stage="head2d_integrate",
        ),
    ]
    return layers


def head3d_flops_layers(config: HeadConfig) -> list[FlopsLayerSpec]:
    return [
        FlopsLayerSpec(
            "conv3d",
            shape.in_channels,
            shape.out_channels,
            shape.kernel_size,
            config.grid_dims,
            name=name,
            stage="head3d",
        )
        for name, shape in head3d_layer_shapes(config).items()
    ]


def total_flops(layers: list[FlopsLayerSpec]) -> int:
    return sum(layer_flops(layer) for layer in layers)


def flops_table(config: HeadConfig, num_cameras: int) -> pd.DataFrame:
    """Per-layer FLOPs of both heads, then one `subtotal` row per stage and
    one `total` row per head. Every 3D layer also carries the FLOPs ratio to
    its matched 2D layer.
    """
    rows = []
    head2d = head2d_flops_layers(config, num_cameras)
    head3d = head3d_flops_layers(config)
    all_layers = head2d + head3d
    for layer in all_layers:
        ratio = ""
        if layer.kind == "conv3d" and layer.k > 1:
            ratio = str(speedup_ratio(layer, matched_conv2d(layer)))
        rows.append(
            {
                "stage": layer.stage,
                "layer": layer.name,
                "kind": layer.kind,
                "flops": layer_flops(layer),
                "ratio": ratio,
            }
        )
    summaries = [
        (stage, "subtotal", [lay for lay in all_layers if lay.stage == stage])
        for stage in dict.fromkeys(lay.stage for lay in all_layers)
    ]
    summaries += [
        ("head2d_total", "total", head2d),
        ("head3d_total", "total", head3d),
    ]
    for stage, kind, layers in summaries:
        rows.append(
            {
                "stage": stage,
                "layer": "",
                "kind": kind,
                "flops": total_flops(layers),
                "ratio": "",
            }
        )
    columns = ["stage", "layer", "kind", "flops", "ratio"]
    return pd.DataFrame(rows, columns=columns)
