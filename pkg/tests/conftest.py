import logging
import os

import pytest

from occlite.geometry import VoxelGridSpec
from occlite.scenegen import RigSpec, ring_rig


@pytest.fixture(autouse=True)
def clean_environment():
    original_env = dict(os.environ)
    original_disable = logging.root.manager.disable

    yield

    os.environ.clear()
    os.environ.update(original_env)
    logging.disable(original_disable)


@pytest.fixture
def desk_grid():
    return VoxelGridSpec((-20.0, -20.0, -1.0, 20.0, 20.0, 3.0), (40, 40, 8))


@pytest.fixture
def small_grid():
    return VoxelGridSpec((-8.0, -8.0, -1.0, 8.0, 8.0, 3.0), (8, 8, 4))


@pytest.fixture
def small_rig():
    return ring_rig(RigSpec(num_cameras=3, image_size=(9, 12)))
