# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only

import atexit
import os
import shutil
import sys
import tempfile

import numpy as np
import pytest

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def _install_collection():
    """Expose the checkout as ansible_collections.lowlight.splatprep."""
    search_root = tempfile.mkdtemp(prefix='splatprep-collections-')
    namespace = os.path.join(search_root, 'ansible_collections', 'lowlight')
    os.makedirs(namespace)
    os.symlink(REPO_ROOT, os.path.join(namespace, 'splatprep'))
    sys.path.insert(0, search_root)
    atexit.register(shutil.rmtree, search_root, True)


_install_collection()

from ansible_collections.lowlight.splatprep.plugins.module_utils.imagecore import (  # noqa: E402
    ImageBuffer,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.ppm import (  # noqa: E402
    CameraSet,
    PointCloud,
    Transform,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_io import (  # noqa: E402
    write_cameras,
    write_ply,
)

MINI_SCENE_SCALE = 2.0
MINI_SCENE_TRANSLATION = (1.0, 0.5, -0.25)
MINI_SCENE_CAMERAS = [
    [2.0, 0.0, 0.5],
    [0.0, 2.0, 0.5],
    [-2.0, 0.0, 0.7],
    [0.0, -2.0, 0.3],
    [1.0, 1.0, 2.0],
]


def rotation_z(degrees):
    angle = np.radians(degrees)
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def random_image(seed, width=64, height=64, channels=3):
    rng = np.random.default_rng(seed)
    return ImageBuffer(rng.random((channels, height, width)))


def smooth_image(seed, width=64, height=64):
    """Low-contrast color gradients with mild texture, values inside (0.05, 0.95)."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width] / max(width, height)
    phases = rng.random(3) * np.pi
    planes = [0.5 + 0.3 * np.sin(2.0 * x + 3.0 * y + phase) for phase in phases]
    texture = 0.05 * rng.random((3, height, width))
    return ImageBuffer(np.clip(np.stack(planes) + texture, 0.05, 0.95))


def cluster_halo_cloud(seed, count=1000):
    """Dense Gaussian cluster plus a sparse uniform halo."""
    rng = np.random.default_rng(seed)
    cluster = rng.normal(0.0, 0.02, size=(count * 7 // 10, 3))
    halo = rng.uniform(-0.5, 0.5, size=(count - len(cluster), 3))
    return PointCloud(positions=np.concatenate([cluster, halo]))


@pytest.fixture
def mini_scene(tmp_path):
    """200 grid points on 0.1 spacing with five cameras under a known sim3 offset.

    The cloud and source cameras are stored in the reconstruction frame; the
    target cameras and ``world_points`` are in the target frame.
    """
    transform = Transform(MINI_SCENE_SCALE, rotation_z(90.0), MINI_SCENE_TRANSLATION)
    axes = np.meshgrid(np.arange(8) * 0.1, np.arange(5) * 0.1, np.arange(5) * 0.1,
                       indexing='ij')
    world_points = np.stack([axis.ravel() for axis in axes], axis=1) + [0.05, 0.05, 0.05]
    to_source = transform.inverse()

    ids = ['cam{0}'.format(index) for index in range(len(MINI_SCENE_CAMERAS))]
    world_centers = np.array(MINI_SCENE_CAMERAS)
    paths = dict(
        ply=str(tmp_path / 'scene.ply'),
        src_cameras=str(tmp_path / 'cameras_recon.json'),
        dst_cameras=str(tmp_path / 'cameras_world.json'),
    )
    write_ply(PointCloud(positions=to_source.apply_points(world_points)), paths['ply'])
    write_cameras(CameraSet(ids=ids, centers=to_source.apply_points(world_centers)),
                  paths['src_cameras'])
    write_cameras(CameraSet(ids=ids, centers=world_centers), paths['dst_cameras'])

    scene = dict(paths)
    scene.update(transform=transform, world_points=world_points, directory=tmp_path)
    return scene


@pytest.fixture(scope='session')
def make_random_image():
    return random_image


@pytest.fixture(scope='session')
def make_smooth_image():
    return smooth_image


@pytest.fixture(scope='session')
def make_cluster_halo_cloud():
    return cluster_halo_cloud


@pytest.fixture(scope='session')
def make_rotation_z():
    return rotation_z
