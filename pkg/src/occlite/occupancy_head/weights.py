from __future__ import annotations

import logging
from collections.abc import Iterator, Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from occlite.errors import ConfigurationError
from occlite.occupancy_head.config import HeadConfig
from occlite.tensor_core import ConvParams, Tensor
from occlite.utils.io import load_json, save_json
from occlite.utils.prng import SplitMix64

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LayerShape:
    in_channels: int
    out_channels: int
    kernel_size: int
    spatial_rank: int

    @property
    def weight_shape(self) -> tuple[int, ...]:
        return (self.out_channels, self.in_channels) + (
            self.kernel_size,
        ) * self.spatial_rank


def decoder_layer_shapes(config: HeadConfig) -> dict[str, LayerShape]:
    k = config.kernel_size
    shapes = {
        "bev_decode.stem": LayerShape(
            config.collapsed_channels, config.decoder_widths[0], k, 2
        )
    }
    in_channels = config.decoder_widths[0]
    for stage, width in enumerate(config.decoder_widths, start=1):
        prefix = f"bev_decode.stage{stage}"
        shapes[f"{prefix}.conv1"] = LayerShape(in_channels, width, k, 2)
        shapes[f"{prefix}.conv2"] = LayerShape(width, width, k, 2)
        shapes[f"{prefix}.skip"] = LayerShape(in_channels, width, 1, 2)
        shapes[f"bev_decode.lateral{stage}"] = LayerShape(
            width, config.c3, 1, 2
        )
        in_channels = width
    return shapes


def head2d_layer_shapes(config: HeadConfig) -> dict[str, LayerShape]:
    """Every layer of the collapsed-BEV head, in execution order."""
    shapes = decoder_layer_shapes(config)
    if config.use_bev_supervision:
        shapes["bev_seg.conv1"] = LayerShape(
            config.c3, config.seg_channels, config.kernel_size, 2
        )
        shapes["bev_seg.conv2"] = LayerShape(
            config.seg_channels, config.num_classes, 1, 2
        )
    shapes["fuse"] = LayerShape(
        config.fuse_in_channels, config.fused_channels, 1, 3
    )
    shapes["classifier"] = LayerShape(
        config.fused_channels, config.num_classes, 1, 3
    )
    return shapes


def head3d_layer_shapes(config: HeadConfig) -> dict[str, LayerShape]:
    shapes = {}
    in_channels = config.c2
    for index, width in enumerate(config.fcn3d_widths, start=1):
        shapes[f"fcn3d.layer{index}"] = LayerShape(
            in_channels, width, config.kernel_size, 3
        )
        in_channels = width
    shapes["fcn3d.classifier"] = LayerShape(
        in_channels, config.num_classes, 1, 3
    )
    return shapes


def layer_shapes(config: HeadConfig) -> dict[str, LayerShape]:
    return {**head2d_layer_shapes(config), **head3d_layer_shapes(config)}


class HeadWeights(Mapping[str, ConvParams]):
    """Read-only mapping from layer name to `ConvParams`.

    On disk, a weight set is a JSON manifest mapping `<layer>.weight` and
    `<layer>.bias` to `.occt` files. Relative paths resolve against the
    manifest's directory.
    """

    def __init__(self, layers: Mapping[str, ConvParams]) -> None:
        self._layers = dict(layers)

    def __getitem__(self, name: str) -> ConvParams:
        try:
            return self._layers[name]
        except KeyError:
            raise ConfigurationError(f"Missing weights for layer '{name}'")

    def __iter__(self) -> Iterator[str]:
        return iter(self._layers)

    def __len__(self) -> int:
        return len(self._layers)

    def validate(self, config: HeadConfig) -> None:
        """Checks that every layer the config needs exists with the right
        shape. Extra layers are allowed.
        """
        for name, shape in layer_shapes(config).items():
            params = self[name]
            if params.weight.shape != shape.weight_shape:
                raise ConfigurationError(
                    f"Layer '{name}' has weight shape "
                    f"{list(params.weight.shape)}, expected "
                    f"{list(shape.weight_shape)}"
                )

    @classmethod
    def init(
        cls,
        config: HeadConfig,
        seed: int = 0,
        mode: Literal["random", "zeros"] = "random",
    ) -> HeadWeights:
        """Builds weights for every layer of both heads.

        `random` draws He-scaled normal weights from SplitMix64 in layer
        order with zero biases; `zeros` gives all-zero weights.
        """
        if mode not in ("random", "zeros"):
            raise ConfigurationError(f"Unknown weight init mode '{mode}'")
        rng = SplitMix64(seed)
        layers = {}
        for name, shape in layer_shapes(config).items():
            if mode == "zeros":
                weight = np.zeros(shape.weight_shape)
            else:
                taps = shape.kernel_size**shape.spatial_rank
                fan_in = shape.in_channels * taps
                weight = rng.normal(
                    shape.weight_shape, scale=float(np.sqrt(2.0 / fan_in))
                )
            layers[name] = ConvParams(
                weight, np.zeros(shape.out_channels), name=name
            )
        return cls(layers)

    @classmethod
    def load(cls, manifest_path: str | Path) -> HeadWeights:
        manifest_path = Path(manifest_path)
        manifest = load_json(manifest_path)
        if not isinstance(manifest, dict):
            raise ConfigurationError(
                f"{manifest_path} must map tensor names to files"
            )
        names = sorted(
            {key.rsplit(".", 1)[0] for key in manifest if "." in key}
        )
        layers = {}
        for name in names:
            files = {}
            for part in ("weight", "bias"):
                key = f"{name}.{part}"
                if key not in manifest:
                    raise ConfigurationError(
                        f"{manifest_path} has no entry for '{key}'"
                    )
                path = Path(manifest[key])
                if not path.is_absolute():
                    path = manifest_path.parent / path
                files[part] = Tensor.load(path, name=key).data
            layers[name] = ConvParams(files["weight"], files["bias"], name=name)
        logger.info("Loaded %d layers from %s", len(layers), manifest_path)
        return cls(layers)

    def save(self, directory: str | Path) -> Path:
        """Writes one `.occt` file per tensor plus `weights.json`.

        Returns:
            The manifest path.
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {}
        for name, params in self._layers.items():
            for part in ("weight", "bias"):
                filename = f"{name}.{part}.occt"
                tensor = Tensor(getattr(params, part), name=f"{name}.{part}")
                tensor.save(directory / filename)
                manifest[f"{name}.{part}"] = filename
        manifest_path = directory / "weights.json"
        save_json(manifest, manifest_path)
        return manifest_path
