import numpy as np
import pytest

from occlite.errors import ConfigurationError
from occlite.geometry import VoxelGridSpec, voxel_centers


def test_voxel_size_paper_range():
    grid = VoxelGridSpec((-40.0, -40.0, -1.0, 40.0, 40.0, 5.4), (200, 200, 16))
    np.testing.assert_allclose(grid.voxel_size(), [0.4, 0.4, 0.4])


def test_voxel_size_is_ordered_w_h_z():
    grid = VoxelGridSpec((0.0, 0.0, 0.0, 10.0, 4.0, 2.0), (5, 8, 4))
    # W extent 4 over 8 voxels first, then H extent 10 over 5 voxels
    assert grid.voxel_size() == [0.5, 2.0, 0.5]
    np.testing.assert_array_equal(grid.step, [2.0, 0.5, 0.5])


def test_first_center():
    grid = VoxelGridSpec((-40.0, -40.0, -1.0, 40.0, 40.0, 5.4), (200, 200, 16))
    centers = voxel_centers(grid)
    assert centers.shape == (200, 200, 16, 3)
    np.testing.assert_allclose(centers[0, 0, 0], [-39.8, -39.8, -0.8])


def test_single_voxel_center():
    grid = VoxelGridSpec((0.0, 0.0, 0.0, 1.0, 1.0, 1.0), (1, 1, 1))
    np.testing.assert_array_equal(voxel_centers(grid)[0, 0, 0], [0.5] * 3)


def test_centers_lie_strictly_inside(desk_grid):
    centers = voxel_centers(desk_grid)
    assert np.all(centers > desk_grid.start)
    assert np.all(centers < desk_grid.end)


def test_centers_locate_to_their_own_index(small_grid):
    centers = voxel_centers(small_grid)
    indices, inside = small_grid.locate(centers)
    assert inside.all()
    expected = np.stack(
        np.meshgrid(*(np.arange(n) for n in small_grid.dims), indexing="ij"),
        axis=-1,
    )
    np.testing.assert_array_equal(indices, expected)


def test_locate_is_half_open():
    grid = VoxelGridSpec((0.0, 0.0, 0.0, 2.0, 2.0, 2.0), (2, 2, 2))
    indices, inside = grid.locate(
        np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [2.0, 1.0, 1.0]])
    )
    np.testing.assert_array_equal(indices[0], [0, 0, 0])
    # Points on an inner face belong to the upper voxel
    np.testing.assert_array_equal(indices[1], [1, 1, 1])
    # The upper range boundary is outside
    assert inside.tolist() == [True, True, False]


def test_locate_rejects_points_below_range():
    grid = VoxelGridSpec((0.0, 0.0, 0.0, 2.0, 2.0, 2.0), (2, 2, 2))
    _, inside = grid.locate(np.array([[-1e-9, 0.5, 0.5], [0.5, 0.5, -3.0]]))
    assert not inside.any()


def test_flat_index_matches_ravel(small_grid):
    indices = np.array([[0, 0, 0], [1, 2, 3], [7, 7, 3]])
    expected = np.ravel_multi_index(tuple(indices.T), small_grid.dims)
    np.testing.assert_array_equal(small_grid.flat_index(indices), expected)


def test_halved(desk_grid):
    half = desk_grid.halved()
    assert half.dims == (20, 20, 4)
    assert half.point_range == desk_grid.point_range
    np.testing.assert_array_equal(half.step, 2 * desk_grid.step)


def test_halved_needs_even_dims():
    grid = VoxelGridSpec((0.0, 0.0, 0.0, 3.0, 2.0, 2.0), (3, 2, 2))
    with pytest.raises(ConfigurationError, match="even"):
        grid.halved()


def test_num_voxels(desk_grid):
    assert desk_grid.num_voxels == 40 * 40 * 8


@pytest.mark.parametrize(
    "point_range,dims",
    [
        ((0.0, 0.0, 0.0, 0.0, 1.0, 1.0), (1, 1, 1)),
        ((0.0, 0.0, 1.0, 1.0, 1.0, 0.0), (1, 1, 1)),
        ((0.0, 0.0, 0.0, 1.0, 1.0, 1.0), (1, 0, 1)),
        ((0.0, 0.0, 0.0, 1.0, 1.0), (1, 1, 1)),
        ((0.0, 0.0, 0.0, 1.0, 1.0, 1.0), (1, 1)),
    ],
)
def test_invalid_specs(point_range, dims):
    with pytest.raises(ConfigurationError):
        VoxelGridSpec(point_range, dims)
