import itertools

import numpy as np
import pytest

from occlite.errors import RejectedInputError
from occlite.geometry import (
    Camera,
    CameraRig,
    VoxelGridSpec,
    project_points,
    voxel_centers,
)
from occlite.gradcheck import numerical_gradient
from occlite.occupancy_head import (
    bilinear_sample,
    interp_sample,
    interp_sample_backward,
)
from occlite.utils.prng import SplitMix64
from tests.utils import brute_force_interp, random_rig


def _features(rng, rig, channels=3):
    return [rng.normal((channels,) + cam.image_size) for cam in rig]


def test_bilinear_four_neighbours():
    feature = np.array([[[0.0, 1.0], [2.0, 3.0]]])
    out = bilinear_sample(feature, np.array([[0.5, 0.5]]))
    np.testing.assert_allclose(out, [[1.5]])


def test_bilinear_image_border():
    feature = np.arange(6.0).reshape(1, 2, 3)
    out = bilinear_sample(feature, np.array([[2.0, 1.0], [0.0, 0.0]]))
    np.testing.assert_array_equal(out, [[5.0, 0.0]])


def test_constant_features(small_grid):
    rig = random_rig(SplitMix64(0))
    features = [np.full((2,) + cam.image_size, 4.25) for cam in rig]
    volume = interp_sample(features, rig, small_grid)
    assert volume.observed.any()
    assert not volume.observed.all()
    np.testing.assert_allclose(volume.features[:, volume.observed], 4.25)
    np.testing.assert_array_equal(volume.features[:, ~volume.observed], 0.0)


def test_exact_pixel():
    cam = Camera(np.diag([5.0, 5.0, 1.0]), np.eye(4), (3, 3))
    # Single voxel centered at (1, 2, 5), projecting to u=1, v=2
    grid = VoxelGridSpec((0.5, 1.5, 4.5, 1.5, 2.5, 5.5), (1, 1, 1))
    feature = SplitMix64(1).normal((4, 3, 3))
    volume = interp_sample([feature], CameraRig((cam,)), grid)
    np.testing.assert_allclose(volume.features[:, 0, 0, 0], feature[:, 2, 1])
    assert volume.count[0, 0, 0] == 1


@pytest.mark.parametrize("seed", range(3))
def test_matches_brute_force(seed):
    grid = VoxelGridSpec((-6.0, -6.0, -1.0, 6.0, 6.0, 3.0), (6, 6, 4))
    rng = SplitMix64(seed)
    rig = random_rig(rng)
    features = _features(rng, rig)
    volume = interp_sample(features, rig, grid)
    expected = brute_force_interp(features, rig, grid)
    np.testing.assert_allclose(volume.features, expected, rtol=0, atol=1e-12)


def test_convex_hull(small_grid):
    rng = SplitMix64(3)
    rig = random_rig(rng)
    features = _features(rng, rig)
    volume = interp_sample(features, rig, small_grid)
    observed = volume.features[:, volume.observed]
    for c in range(3):
        lo = min(f[c].min() for f in features)
        hi = max(f[c].max() for f in features)
        assert np.all(observed[c] >= lo - 1e-12)
        assert np.all(observed[c] <= hi + 1e-12)


def test_camera_order_invariance(small_grid):
    rng = SplitMix64(4)
    rig = random_rig(rng, num_cameras=4)
    features = _features(rng, rig)
    forward = interp_sample(features, rig, small_grid)
    for order in itertools.islice(itertools.permutations(range(4)), 1, 6):
        permuted = interp_sample(
            [features[i] for i in order],
            CameraRig(tuple(rig[i] for i in order)),
            small_grid,
        )
        np.testing.assert_allclose(
            permuted.features, forward.features, rtol=0, atol=1e-12
        )
        np.testing.assert_array_equal(permuted.count, forward.count)


def test_observed_mask_is_union_of_projections(small_grid):
    rng = SplitMix64(5)
    rig = random_rig(rng)
    volume = interp_sample(_features(rng, rig), rig, small_grid)
    centers = voxel_centers(small_grid)
    valid = [project_points(centers, cam)[2] for cam in rig]
    np.testing.assert_array_equal(volume.observed, np.any(valid, axis=0))
    np.testing.assert_array_equal(volume.count, np.sum(valid, axis=0))


def test_parallel_is_bit_identical(small_grid):
    rng = SplitMix64(6)
    rig = random_rig(rng, num_cameras=4)
    features = _features(rng, rig)
    serial = interp_sample(features, rig, small_grid)
    threaded = interp_sample(features, rig, small_grid, parallel=True)
    np.testing.assert_array_equal(serial.features, threaded.features)


def test_backward_matches_finite_differences():
    grid = VoxelGridSpec((-4.0, -4.0, -1.0, 4.0, 4.0, 1.0), (4, 4, 2))
    rng = SplitMix64(7)
    rig = random_rig(rng, num_cameras=2, image_size=(4, 5))
    features = _features(rng, rig, channels=2)
    upstream = rng.normal((2,) + grid.dims)
    grads = interp_sample_backward(features, rig, grid, upstream)
    for index in range(len(rig)):
        def objective(x, index=index):
            replaced = list(features)
            replaced[index] = x
            volume = interp_sample(replaced, rig, grid)
            return float(np.sum(volume.features * upstream))

        numeric = numerical_gradient(objective, features[index])
        np.testing.assert_allclose(grads[index], numeric, atol=1e-8)


def test_rejects_inconsistent_features(small_rig, small_grid):
    good = [np.zeros((2,) + cam.image_size) for cam in small_rig]
    with pytest.raises(RejectedInputError):
        interp_sample(good[:2], small_rig, small_grid)
    with pytest.raises(RejectedInputError):
        interp_sample(good[:2] + [np.zeros((3, 9, 12))], small_rig, small_grid)
    with pytest.raises(RejectedInputError):
        interp_sample([np.zeros((2, 5, 5))] * 3, small_rig, small_grid)
