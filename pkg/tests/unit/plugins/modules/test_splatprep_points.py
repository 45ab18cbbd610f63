# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only

import json

import numpy as np
import pytest

from ansible_collections.lowlight.splatprep.plugins.module_utils.ppm import voxel_pool
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_io import (
    read_ply,
    write_ply,
)
from ansible_collections.lowlight.splatprep.plugins.modules import splatprep_points


def test_pipeline(mini_scene, run_module):
    directory = mini_scene['directory']
    failed, result = run_module(splatprep_points, dict(
        operation='pipeline', input=mini_scene['ply'], output=str(directory / 'final.ply'),
        report=str(directory / 'report.json'), src_cameras=mini_scene['src_cameras'],
        dst_cameras=mini_scene['dst_cameras'], mode='sim3', ply_format='ascii',
        prune=dict(seed=42)))
    assert not failed
    assert result['changed']
    assert result['report']['final_count'] == 200
    assert result['transform']['scale'] == pytest.approx(2.0, abs=1e-6)
    final = read_ply(str(directory / 'final.ply')).positions
    np.testing.assert_allclose(final.min(axis=0), mini_scene['world_points'].min(axis=0),
                               rtol=0.0, atol=1e-6)
    with open(str(directory / 'report.json')) as handle:
        assert json.load(handle) == result['report']


def test_prune_with_environment_threads(tmp_path, run_module, monkeypatch, make_cluster_halo_cloud):
    source = str(tmp_path / 'pooled.ply')
    write_ply(voxel_pool(make_cluster_halo_cloud(92), 0.01), source)
    counts = []
    for threads in ('1', '4'):
        monkeypatch.setenv('NAKAGS_THREADS', threads)
        failed, result = run_module(splatprep_points, dict(
            operation='prune', input=source, output=str(tmp_path / 'pruned.ply'),
            prune=dict(seed=42)))
        assert not failed
        counts.append(result['report'])
    assert counts[0] == counts[1]


def test_pool(tmp_path, run_module, make_cluster_halo_cloud):
    source = str(tmp_path / 'cloud.ply')
    write_ply(make_cluster_halo_cloud(93, 300), source)
    failed, result = run_module(splatprep_points, dict(
        operation='pool', input=source, output=str(tmp_path / 'pooled.ply'),
        prune=dict(voxel_size=0.05)))
    assert not failed
    assert result['points_after'] < result['points_before'] == 300


def test_degenerate_alignment_fails(tmp_path, run_module, mini_scene):
    cameras = tmp_path / 'line.json'
    cameras.write_text(json.dumps([dict(id=name, center=[float(index), 0.0, 0.0])
                                   for index, name in enumerate('abc')]))
    failed, result = run_module(splatprep_points, dict(
        operation='align', input=mini_scene['ply'], output=str(tmp_path / 'o.ply'),
        src_cameras=str(cameras), dst_cameras=str(cameras), mode='rigid'))
    assert failed
    assert 'collinear' in result['msg']


def test_check_mode_skips(tmp_path, run_module, mini_scene):
    failed, result = run_module(splatprep_points, dict(
        operation='prune', input=mini_scene['ply'], output=str(tmp_path / 'o.ply'),
        _ansible_check_mode=True))
    assert not failed and result['skipped']
    assert not (tmp_path / 'o.ply').exists()
