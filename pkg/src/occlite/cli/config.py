import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from omegaconf import DictConfig, OmegaConf
from omegaconf.errors import ConfigKeyError, ValidationError

from occlite.errors import ConfigurationError
from occlite.geometry import CameraRig, VoxelGridSpec
from occlite.occupancy_head import HeadConfig, HeadWeights
from occlite.scenegen import RigSpec, SceneSpec, camera_from_dict, ring_rig
from occlite.supervision import LossConfig as LossTerms
from occlite.view_transform import DepthBinSpec

DESK_CONFIG_PATH = os.path.join(
    os.path.dirname(__file__), "config", "desk.yaml"
)


@dataclass
class GridConfig:
    point_range: List[float] = field(
        default_factory=lambda: [-20.0, -20.0, -1.0, 20.0, 20.0, 3.0]
    )
    dims: List[int] = field(default_factory=lambda: [40, 40, 8])


@dataclass
class RigConfig:
    # Explicit cameras ({intrinsics, extrinsics, image_size}); a ring is
    # generated from the remaining fields when empty
    cameras: List[Any] = field(default_factory=list)
    num_cameras: int = 4
    radius: float = 0.5
    height: float = 1.0
    pitch_deg: float = 10.0
    fov_deg: float = 100.0
    image_size: List[int] = field(default_factory=lambda: [24, 40])


@dataclass
class DepthBinConfig:
    d_min: float = 1.0
    d_max: float = 33.0
    num_bins: int = 16


@dataclass
class HeadSection:
    c1: int = 8
    c2: int = 8
    c3: int = 16
    num_classes: int = 5
    decoder_widths: List[int] = field(default_factory=lambda: [16, 32, 64])
    kernel_size: int = 3
    c_out: Optional[int] = None
    seg_hidden: Optional[int] = None
    fcn3d_widths: List[int] = field(default_factory=lambda: [16, 16, 16])
    use_interp_fusion: bool = True
    use_bev_supervision: bool = True
    # "random" or "zeros"; used when no weights manifest is given
    weight_init: str = "random"


@dataclass
class SceneSection:
    class_names: List[str] = field(
        default_factory=lambda: [
            "empty",
            "ground",
            "vehicle",
            "pole",
            "structure",
        ]
    )
    num_boxes: int = 6
    num_pillars: int = 4
    ground_class: int = 1
    ground_thickness: int = 1
    keep_out_radius: float = 3.0
    max_retries: int = 100
    step: Optional[float] = None
    noise_std: float = 0.0
    depth_sharpness: float = 8.0


@dataclass
class LossConfig:
    focal_gamma: float = 2.0
    dice_eps: float = 1e-6
    ignore_id: int = 255


@dataclass
class BenchConfig:
    repeats: int = 9
    warmup: int = 2
    parallel: bool = False


@dataclass
class GradcheckConfig:
    seeds: int = 20
    step: float = 1e-5
    tolerance: float = 1e-6


@dataclass
class PathsConfig:
    weights_manifest: Optional[str] = None
    scene_dir: Optional[str] = None
    out_dir: str = "occlite_out"


@dataclass
class RunConfig:
    seed: int = 0
    grid: GridConfig = field(default_factory=GridConfig)
    rig: RigConfig = field(default_factory=RigConfig)
    depth_bins: DepthBinConfig = field(default_factory=DepthBinConfig)
    head: HeadSection = field(default_factory=HeadSection)
    scene: SceneSection = field(default_factory=SceneSection)
    loss: LossConfig = field(default_factory=LossConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)
    gradcheck: GradcheckConfig = field(default_factory=GradcheckConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)


def load_run_config(
    path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None
) -> DictConfig:
    """Merges the packaged desk defaults, an optional user config file and
    flag overrides onto the `RunConfig` schema.

    Args:
        path: A JSON or YAML config file.
        overrides: Nested values taking precedence over both files.

    Raises:
        ConfigurationError: A key is not part of the schema or a value has
            the wrong type. The message names the dotted key.
    """
    layers = [OmegaConf.structured(RunConfig), OmegaConf.load(DESK_CONFIG_PATH)]
    if path is not None:
        layers.append(OmegaConf.load(path))
    if overrides:
        layers.append(OmegaConf.create(overrides))
    try:
        conf = OmegaConf.merge(*layers)
    except ConfigKeyError as err:
        raise ConfigurationError(
            f"Unknown config key '{err.full_key}'"
        ) from err
    except ValidationError as err:
        raise ConfigurationError(
            f"Invalid value for config key '{err.full_key}': {err.msg}"
        ) from err
    assert isinstance(conf, DictConfig)
    return conf


def build_grid(conf: DictConfig) -> VoxelGridSpec:
    return VoxelGridSpec(
        tuple(conf.grid.point_range),  # type: ignore[arg-type]
        tuple(conf.grid.dims),  # type: ignore[arg-type]
    )


def build_rig_spec(conf: DictConfig) -> RigSpec:
    rig = conf.rig
    return RigSpec(
        num_cameras=rig.num_cameras,
        radius=rig.radius,
        height=rig.height,
        pitch_deg=rig.pitch_deg,
        fov_deg=rig.fov_deg,
        image_size=tuple(rig.image_size),  # type: ignore[arg-type]
    )


def build_rig(conf: DictConfig) -> CameraRig:
    """Explicit cameras when the config lists any, a ring otherwise."""
    if conf.rig.cameras:
        cameras = OmegaConf.to_container(conf.rig.cameras)
        assert isinstance(cameras, list)
        return CameraRig(tuple(camera_from_dict(cam) for cam in cameras))
    return ring_rig(build_rig_spec(conf))


def build_bins(conf: DictConfig) -> DepthBinSpec:
    bins = conf.depth_bins
    return DepthBinSpec(bins.d_min, bins.d_max, bins.num_bins)


def build_head_config(
    conf: DictConfig, grid: Optional[VoxelGridSpec] = None
) -> HeadConfig:
    head = conf.head
    grid = grid or build_grid(conf)
    return HeadConfig(
        c1=head.c1,
        c2=head.c2,
        c3=head.c3,
        num_classes=head.num_classes,
        grid_dims=grid.dims,
        decoder_widths=tuple(head.decoder_widths),
        kernel_size=head.kernel_size,
        c_out=head.c_out,
        seg_hidden=head.seg_hidden,
        fcn3d_widths=tuple(head.fcn3d_widths),
        use_interp_fusion=head.use_interp_fusion,
        use_bev_supervision=head.use_bev_supervision,
    )


def build_scene_spec(conf: DictConfig) -> SceneSpec:
    scene = conf.scene
    return SceneSpec(
        seed=conf.seed,
        grid=build_grid(conf),
        num_classes=conf.head.num_classes,
        num_boxes=scene.num_boxes,
        num_pillars=scene.num_pillars,
        ground_class=scene.ground_class,
        ground_thickness=scene.ground_thickness,
        keep_out_radius=scene.keep_out_radius,
        max_retries=scene.max_retries,
        rig=build_rig_spec(conf),
        class_names=tuple(scene.class_names),
    )


def build_loss_terms(conf: DictConfig) -> LossTerms:
    return LossTerms(
        focal_gamma=conf.loss.focal_gamma,
        dice_eps=conf.loss.dice_eps,
        ignore_id=conf.loss.ignore_id,
    )


def build_weights(conf: DictConfig, config: HeadConfig) -> HeadWeights:
    """Loads the weights manifest when one is configured, otherwise draws
    weights from the run seed.
    """
    if conf.paths.weights_manifest:
        weights = HeadWeights.load(conf.paths.weights_manifest)
        weights.validate(config)
        return weights
    return HeadWeights.init(config, conf.seed, mode=conf.head.weight_init)
