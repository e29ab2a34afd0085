from occlite.scenegen.inputs import (
    feature_images,
    synthetic_context,
    synthetic_depth_logits,
)
from occlite.scenegen.io import (
    SceneBundle,
    camera_from_dict,
    camera_to_dict,
    load_scene,
    save_scene,
)
from occlite.scenegen.render import (
    INVALID_DEPTH,
    RenderedView,
    default_step,
    first_hit_voxels,
    render_camera,
    render_views,
)
from occlite.scenegen.scene import (
    PlacedBox,
    RigSpec,
    SceneSpec,
    gen_scene,
    plan_objects,
    ring_rig,
)
from occlite.utils.prng import SplitMix64

__all__ = [
    "INVALID_DEPTH",
    "PlacedBox",
    "RenderedView",
    "RigSpec",
    "SceneBundle",
    "SceneSpec",
    "SplitMix64",
    "camera_from_dict",
    "camera_to_dict",
    "default_step",
    "feature_images",
    "first_hit_voxels",
    "gen_scene",
    "load_scene",
    "plan_objects",
    "render_camera",
    "render_views",
    "ring_rig",
    "save_scene",
    "synthetic_context",
    "synthetic_depth_logits",
]
