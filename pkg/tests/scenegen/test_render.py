import numpy as np
import pytest

from occlite.errors import RejectedInputError
from occlite.geometry import Camera, CameraRig, VoxelGridSpec
from occlite.occupancy_head import interp_sample
from occlite.scenegen import (
    INVALID_DEPTH,
    RigSpec,
    SceneSpec,
    default_step,
    first_hit_voxels,
    gen_scene,
    render_views,
    ring_rig,
)
from occlite.supervision import OccupancyVolume
from occlite.view_transform import camera_to_ego, pixel_rays

# x in [0, 10) ahead of a camera at the origin, one voxel per metre
CORRIDOR = VoxelGridSpec((0.0, -1.5, -1.5, 10.0, 1.5, 1.5), (10, 3, 3))


def _axis_camera(image_size=(5, 7)):
    return Camera.look_from((0.0, 0.0, 0.0), 0.0, 0.0, image_size, 1.0)


def test_default_step(desk_grid):
    assert default_step(desk_grid) == 0.25
    assert default_step(CORRIDOR) == 0.5


def test_empty_scene_renders_background(small_grid, small_rig):
    scene = OccupancyVolume.from_labels(np.zeros(small_grid.dims), 3)
    views = render_views(scene, small_rig, small_grid)
    assert len(views) == len(small_rig)
    for view, cam in zip(views, small_rig):
        height, width = cam.image_size
        assert view.features.shape == (3, height, width)
        assert not view.valid.any()
        assert (view.depth == INVALID_DEPTH).all()
        assert (view.hit_voxel == -1).all()
        np.testing.assert_array_equal(view.features[0], 1.0)
        assert not view.features[1:].any()


def test_single_voxel_on_the_optical_axis():
    labels = np.zeros(CORRIDOR.dims, dtype=np.int64)
    labels[5, 1, 1] = 2
    scene = OccupancyVolume.from_labels(labels, 3)
    rig = CameraRig((_axis_camera(),))
    (view,) = render_views(scene, rig, CORRIDOR)

    # Odd image: the principal point is the center pixel (2, 3)
    assert view.valid[2, 3]
    assert view.hit_voxel[2, 3].tolist() == [5, 1, 1]
    np.testing.assert_array_equal(view.features[:, 2, 3], [0.0, 0.0, 1.0])
    # Front face at x = 5, center at x = 5.5
    assert 5.0 - 1e-9 <= view.depth[2, 3] <= 5.0 + default_step(CORRIDOR)
    assert abs(view.depth[2, 3] - 5.5) <= 0.5 + default_step(CORRIDOR)


def test_nearer_voxel_occludes():
    labels = np.zeros(CORRIDOR.dims, dtype=np.int64)
    labels[7, 1, 1] = 1
    labels[3, 1, 1] = 2
    scene = OccupancyVolume.from_labels(labels, 3)
    (view,) = render_views(scene, CameraRig((_axis_camera(),)), CORRIDOR)
    assert view.hit_voxel[2, 3].tolist() == [3, 1, 1]
    assert view.features[2, 2, 3] == 1.0


def test_finer_step_keeps_the_hit():
    labels = np.zeros(CORRIDOR.dims, dtype=np.int64)
    labels[5, 1, 1] = 1
    scene = OccupancyVolume.from_labels(labels, 2)
    rig = CameraRig((_axis_camera(),))
    (coarse,) = render_views(scene, rig, CORRIDOR)
    (fine,) = render_views(scene, rig, CORRIDOR, step=0.05)
    np.testing.assert_array_equal(coarse.hit_voxel, fine.hit_voxel)
    assert abs(fine.depth[2, 3] - 5.0) <= 0.05 + 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_hits_lie_inside_their_voxel(seed, desk_grid, small_rig):
    scene = gen_scene(SceneSpec(seed, desk_grid))
    labels = scene.hard_labels()
    views = render_views(scene, small_rig, desk_grid)
    for view, cam in zip(views, small_rig):
        assert view.valid.any()
        points = camera_to_ego(pixel_rays(cam) * view.depth[..., None], cam)
        idx = view.hit_voxel[view.valid]
        lo = desk_grid.start + idx * desk_grid.step
        hi = lo + desk_grid.step
        inside = points[view.valid]
        assert np.all(inside >= lo - 1e-9)
        assert np.all(inside <= hi + 1e-9)
        # The hit voxel is occupied and its class is the rendered one
        hit_class = labels[tuple(idx.T)]
        assert (hit_class != 0).all()
        np.testing.assert_array_equal(
            np.argmax(view.features, axis=0)[view.valid], hit_class
        )
        assert (view.depth[view.valid] > 0.0).all()


def test_noise_is_seeded(small_grid, small_rig):
    scene = gen_scene(SceneSpec(0, small_grid, num_boxes=1, num_pillars=0))
    clean = render_views(scene, small_rig, small_grid)
    first = render_views(scene, small_rig, small_grid, noise_std=0.1, seed=3)
    second = render_views(scene, small_rig, small_grid, noise_std=0.1, seed=3)
    other = render_views(scene, small_rig, small_grid, noise_std=0.1, seed=4)
    for a, b, c, base in zip(first, second, other, clean):
        np.testing.assert_array_equal(a.features, b.features)
        assert not np.array_equal(a.features, c.features)
        assert not np.array_equal(a.features, base.features)
        # Noise leaves the geometry alone
        np.testing.assert_array_equal(a.depth, base.depth)
        np.testing.assert_array_equal(a.hit_voxel, base.hit_voxel)


@pytest.mark.parametrize("step", [0.0, -1.0, 0.6])
def test_rejects_bad_step(step, small_grid, small_rig):
    scene = OccupancyVolume.from_labels(np.zeros(small_grid.dims), 2)
    with pytest.raises(RejectedInputError, match="step"):
        render_views(scene, small_rig, small_grid, step=step)


def test_rejects_scene_on_other_grid(desk_grid, small_rig):
    scene = OccupancyVolume.from_labels(np.zeros((8, 8, 4)), 2)
    with pytest.raises(RejectedInputError, match="does not match grid"):
        render_views(scene, small_rig, desk_grid)
    with pytest.raises(RejectedInputError, match="does not match grid"):
        first_hit_voxels(scene, small_rig, desk_grid)


def test_first_hit_voxels_on_the_axis():
    labels = np.zeros(CORRIDOR.dims, dtype=np.int64)
    labels[3, 1, 1] = 1
    labels[7, 1, 1] = 2
    scene = OccupancyVolume.from_labels(labels, 3)
    hits = first_hit_voxels(scene, CameraRig((_axis_camera(),)), CORRIDOR)
    assert hits.shape == CORRIDOR.dims
    assert hits[3, 1, 1]
    # Hidden behind the nearer voxel
    assert not hits[7, 1, 1]
    assert np.count_nonzero(hits) == 1


def test_first_hit_voxels_empty_scene(small_grid, small_rig):
    scene = OccupancyVolume.from_labels(np.zeros(small_grid.dims), 2)
    assert not first_hit_voxels(scene, small_rig, small_grid).any()


def test_interp_of_renders_recovers_visible_classes(desk_grid):
    rig = ring_rig(RigSpec(image_size=(128, 224)))
    correct = total = 0
    for seed in range(10):
        scene = gen_scene(SceneSpec(seed, desk_grid))
        labels = scene.hard_labels()
        views = render_views(scene, rig, desk_grid)
        sampled = interp_sample([v.features for v in views], rig, desk_grid)
        visible = first_hit_voxels(scene, rig, desk_grid)
        predicted = np.argmax(sampled.features, axis=0)
        correct += int(np.sum(predicted[visible] == labels[visible]))
        total += int(np.count_nonzero(visible))
    assert total > 0
    assert correct / total >= 0.99
