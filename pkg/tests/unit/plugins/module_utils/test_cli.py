# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only

import json
import os

import numpy as np
import pytest

from ansible_collections.lowlight.splatprep.plugins.module_utils.chroma import identity_maps
from ansible_collections.lowlight.splatprep.plugins.module_utils.cli import main
from ansible_collections.lowlight.splatprep.plugins.module_utils.imagecore import (
    ImageBuffer,
    psnr,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.ppm import (
    CameraSet,
    PointCloud,
    voxel_pool,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep import THREADS_ENV
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_io import (
    read_maps,
    read_ply,
    read_png,
    write_cameras,
    write_maps,
    write_ply,
    write_png,
)


@pytest.fixture(autouse=True)
def clear_threads_env(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    monkeypatch.setenv('COLUMNS', '200')


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 and out.strip() else None)


class TestUsage:
    def test_help_lists_defaults(self, capsys):
        assert main(['prune', '--help']) == 0
        text = capsys.readouterr().out
        for flag, default in [('--tau0', '0.005'), ('--beta', '0.01'), ('--iters', '6'),
                              ('--seed', '0'), ('--min-keep', '0.3')]:
            assert flag in text
            assert '(default: {0})'.format(default) in text

    def test_enhance_help_lists_naka_defaults(self, capsys):
        assert main(['enhance', '--help']) == 0
        text = capsys.readouterr().out
        assert '(default: 0.05)' in text and '(default: 1.0)' in text
        assert '(default: 16)' in text

    def test_fit_help_lists_grid_default(self, capsys):
        assert main(['fit-correction', '--help']) == 0
        assert '(default: 16 x 16)' in capsys.readouterr().out

    def test_zero_sigma_is_a_usage_error(self, tmp_path):
        assert main(['enhance', '--input', str(tmp_path), '--output', str(tmp_path),
                     '--sigma', '0']) == 2

    def test_missing_command(self):
        assert main([]) == 2

    def test_bad_config_file_is_an_input_error(self, tmp_path):
        config = tmp_path / 'config.json'
        config.write_text(json.dumps(dict(prune=dict(tau0=-1.0))))
        assert main(['pool', '--config', str(config), '--ply', 'x.ply', '--output', 'y.ply']) == 2


class TestEnhance:
    def test_black_image_stays_black(self, tmp_path, capsys):
        source = str(tmp_path / 'black.png')
        write_png(ImageBuffer.filled(6, 4, 3, 0.0), source)
        code, payload = run(capsys, 'enhance', '--input', source, '--output', str(tmp_path / 'out'))
        assert code == 0
        assert payload['outputs'] == [str(tmp_path / 'out' / 'black.png')]
        assert not np.any(read_png(payload['outputs'][0]).data)

    def test_directory_names_are_mirrored(self, tmp_path, capsys, make_random_image):
        source = tmp_path / 'low'
        source.mkdir()
        for index, name in enumerate(['a.png', 'b.png', 'c.png']):
            write_png(ImageBuffer(make_random_image(index, 8, 8).data * 0.2), str(source / name))
        code, _ = run(capsys, 'enhance', '--input', str(source), '--output', str(tmp_path / 'out'),
                      '--threads', '2', '--depth', '8')
        assert code == 0
        assert sorted(os.listdir(str(tmp_path / 'out'))) == ['a.png', 'b.png', 'c.png']

    def test_sigma_flag_changes_the_response(self, tmp_path, capsys):
        source = str(tmp_path / 'gray.png')
        write_png(ImageBuffer.filled(4, 4, 3, 0.2), source, depth=16)
        code, _ = run(capsys, 'enhance', '--input', source, '--output', str(tmp_path / 'out'),
                      '--sigma', '0.2')
        assert code == 0
        out = read_png(str(tmp_path / 'out' / 'gray.png')).data
        np.testing.assert_allclose(out, 0.5, atol=1.0 / 65535)

    def test_unreadable_input(self, tmp_path):
        assert main(['enhance', '--input', str(tmp_path / 'absent.png'),
                     '--output', str(tmp_path / 'out')]) == 2

    def test_unwritable_output(self, tmp_path):
        source = str(tmp_path / 'img.png')
        write_png(ImageBuffer.filled(4, 4, 3, 0.1), source)
        blocker = tmp_path / 'blocker'
        blocker.write_text('')
        assert main(['enhance', '--input', source, '--output', str(blocker)]) == 1


class TestCorrection:
    def test_identity_maps_reproduce_the_input(self, tmp_path, capsys, make_smooth_image):
        naka = str(tmp_path / 'naka.png')
        maps = str(tmp_path / 'identity.nkgs')
        out = str(tmp_path / 'out.png')
        write_png(make_smooth_image(70, 16, 12), naka, depth=16)
        write_maps(identity_maps(16, 12), maps)
        code, _ = run(capsys, 'correct', '--naka', naka, '--maps', maps, '--output', out)
        assert code == 0
        np.testing.assert_allclose(read_png(out).data, read_png(naka).data, atol=1.0 / 65535)

    def test_zero_iteration_fit_writes_identity_maps(self, tmp_path, capsys, make_smooth_image):
        paths = dict((name, str(tmp_path / (name + '.png'))) for name in ('low', 'naka', 'gt'))
        image = make_smooth_image(71, 16, 16)
        for path in paths.values():
            write_png(image, path)
        maps_out = str(tmp_path / 'maps.nkgs')
        code, payload = run(capsys, 'fit-correction', '--low', paths['low'], '--naka', paths['naka'],
                            '--gt', paths['gt'], '--maps-out', maps_out, '--iters', '0')
        assert code == 0
        assert len(payload['trace']) == 1
        maps = read_maps(maps_out)
        assert np.all(maps.mul.data == 1.0) and not np.any(maps.add.data)

    def test_fit_shape_mismatch(self, tmp_path, make_smooth_image):
        low, naka, gt = (str(tmp_path / name) for name in ('low.png', 'naka.png', 'gt.png'))
        write_png(make_smooth_image(72, 16, 16), low)
        write_png(make_smooth_image(72, 16, 16), naka)
        write_png(make_smooth_image(72, 12, 16), gt)
        assert main(['fit-correction', '--low', low, '--naka', naka, '--gt', gt,
                     '--maps-out', str(tmp_path / 'maps.nkgs')]) == 2

    def test_enhance_then_fit_beats_the_low_light_input(self, tmp_path, capsys, make_smooth_image):
        gt = make_smooth_image(73, 48, 48)
        low = ImageBuffer(0.1 * gt.data ** 2.2)
        low_path, gt_path = str(tmp_path / 'low.png'), str(tmp_path / 'gt.png')
        write_png(low, low_path, depth=16)
        write_png(gt, gt_path, depth=16)

        code, _ = run(capsys, 'enhance', '--input', low_path, '--output', str(tmp_path / 'naka'),
                      '--sigma', '0.05', '--exponent', '1')
        assert code == 0
        naka_path = str(tmp_path / 'naka' / 'low.png')
        maps_path = str(tmp_path / 'maps.nkgs')
        code, payload = run(capsys, 'fit-correction', '--low', low_path, '--naka', naka_path,
                            '--gt', gt_path, '--maps-out', maps_path, '--grid', '16',
                            '--iters', '200', '--seed', '3')
        assert code == 0
        assert payload['report']['total'] <= payload['initial_total']
        corrected_path = str(tmp_path / 'corrected.png')
        code, _ = run(capsys, 'correct', '--naka', naka_path, '--maps', maps_path,
                      '--output', corrected_path)
        assert code == 0

        reference = read_png(gt_path)
        gain = psnr(read_png(corrected_path), reference) - psnr(read_png(low_path), reference)
        assert gain >= 3.0

    def test_metrics_report_every_term(self, tmp_path, capsys, make_random_image):
        pred, gt = str(tmp_path / 'pred.png'), str(tmp_path / 'gt.png')
        write_png(make_random_image(74, 16, 16), pred)
        write_png(make_random_image(75, 16, 16), gt)
        code, payload = run(capsys, 'metrics', '--pred', pred, '--gt', gt)
        assert code == 0
        assert sorted(payload['metrics']) == sorted(
            ['rgb', 'chroma', 'ssim_loss', 'edge', 'reg', 'mse', 'gray', 'bright', 'total',
             'psnr_db', 'ssim'])
        assert payload['metrics']['reg'] == 0.0

    def test_identical_images_print_strict_json(self, tmp_path, capsys, make_random_image):
        image = str(tmp_path / 'same.png')
        write_png(make_random_image(76, 16, 16), image)
        assert main(['metrics', '--pred', image, '--gt', image]) == 0

        def refuse(token):
            raise ValueError(token)

        payload = json.loads(capsys.readouterr().out, parse_constant=refuse)
        assert payload['metrics']['psnr_db'] == 'inf'
        assert payload['metrics']['ssim'] == 1.0


class TestPoints:
    def test_align_none_keeps_positions(self, tmp_path, capsys, make_cluster_halo_cloud):
        source = str(tmp_path / 'cloud.ply')
        output = str(tmp_path / 'aligned.ply')
        write_ply(make_cluster_halo_cloud(80, 100), source)
        code, payload = run(capsys, 'align', '--ply', source, '--output', output)
        assert code == 0
        assert payload['transform']['scale'] == 1.0 and payload['rms'] is None
        np.testing.assert_array_equal(read_ply(output).positions, read_ply(source).positions)

    def test_align_recovers_the_scene_transform(self, mini_scene, capsys):
        output = str(mini_scene['directory'] / 'aligned.ply')
        code, payload = run(capsys, 'align', '--ply', mini_scene['ply'], '--output', output,
                            '--src-cams', mini_scene['src_cameras'],
                            '--dst-cams', mini_scene['dst_cameras'], '--mode', 'sim3')
        assert code == 0
        assert payload['transform']['scale'] == pytest.approx(2.0, abs=1e-6)
        assert payload['rms'] < 1e-6

    def test_collinear_cameras_exit_three(self, tmp_path, make_cluster_halo_cloud):
        source = str(tmp_path / 'cloud.ply')
        write_ply(make_cluster_halo_cloud(81, 20), source)
        cameras = str(tmp_path / 'cams.json')
        write_cameras(CameraSet(ids=['a', 'b', 'c'],
                                centers=[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]), cameras)
        assert main(['align', '--ply', source, '--output', str(tmp_path / 'out.ply'),
                     '--src-cams', cameras, '--dst-cams', cameras, '--mode', 'rigid']) == 3

    def test_mismatched_camera_ids_exit_two(self, mini_scene, tmp_path):
        other = str(tmp_path / 'other.json')
        write_cameras(CameraSet(ids=['x', 'y', 'z'], centers=np.eye(3)), other)
        assert main(['align', '--ply', mini_scene['ply'], '--output', str(tmp_path / 'o.ply'),
                     '--src-cams', mini_scene['src_cameras'], '--dst-cams', other,
                     '--mode', 'sim3']) == 2

    def test_pool_merges_duplicates(self, tmp_path, capsys):
        source = str(tmp_path / 'dup.ply')
        write_ply(PointCloud(positions=[[0.0, 0.0, 0.0], [0.001, 0.0, 0.0], [1.0, 0.0, 0.0]]),
                  source)
        code, payload = run(capsys, 'pool', '--ply', source, '--output', str(tmp_path / 'p.ply'),
                            '--voxel', '0.1')
        assert code == 0
        assert (payload['points_before'], payload['points_after']) == (3, 2)

    def test_full_retention_rolls_back(self, tmp_path, capsys, make_cluster_halo_cloud):
        pooled = voxel_pool(make_cluster_halo_cloud(82), 0.01)
        source = str(tmp_path / 'pooled.ply')
        write_ply(pooled, source)
        output, report = str(tmp_path / 'pruned.ply'), str(tmp_path / 'report.json')
        code, payload = run(capsys, 'prune', '--ply', source, '--output', output,
                            '--report', report, '--min-keep', '1.0', '--tau0', '0.05',
                            '--seed', '42')
        assert code == 0
        assert len(read_ply(output)) == len(read_ply(source))
        with open(report) as handle:
            document = json.load(handle)
        assert document == payload['report']
        assert document['iterations'][-1]['rolled_back'] is True

    def test_prune_output_is_independent_of_thread_count(self, tmp_path, monkeypatch,
                                                         make_cluster_halo_cloud):
        source = str(tmp_path / 'cloud.ply')
        write_ply(voxel_pool(make_cluster_halo_cloud(83), 0.01), source)
        outputs = []
        for threads in ('1', '4'):
            monkeypatch.setenv(THREADS_ENV, threads)
            output = tmp_path / 'pruned_{0}.ply'.format(threads)
            assert main(['prune', '--ply', source, '--output', str(output), '--seed', '42']) == 0
            outputs.append(output.read_bytes())
        assert outputs[0] == outputs[1]


class TestPipeline:
    def test_mini_scene_lands_in_the_target_frame(self, mini_scene, capsys):
        directory = mini_scene['directory']
        config = directory / 'pipeline.json'
        config.write_text(json.dumps(dict(
            input=mini_scene['ply'],
            output=str(directory / 'final.ply'),
            report=str(directory / 'report.json'),
            src_cameras=mini_scene['src_cameras'],
            dst_cameras=mini_scene['dst_cameras'],
            mode='sim3',
            prune=dict(seed=42),
        )))
        code, payload = run(capsys, 'pipeline', '--config', str(config))
        assert code == 0

        final = read_ply(str(directory / 'final.ply')).positions
        world = mini_scene['world_points']
        np.testing.assert_allclose(final.min(axis=0), world.min(axis=0), rtol=0.0, atol=1e-6)
        np.testing.assert_allclose(final.max(axis=0), world.max(axis=0), rtol=0.0, atol=1e-6)
        assert payload['report']['initial_count'] == 200
        assert payload['report']['final_count'] == 200
        assert payload['transform']['scale'] == pytest.approx(2.0, abs=1e-6)
        with open(str(directory / 'report.json')) as handle:
            assert json.load(handle)['final_count'] == 200

    def test_flags_override_the_config(self, mini_scene, capsys):
        directory = mini_scene['directory']
        config = directory / 'pipeline.json'
        config.write_text(json.dumps(dict(input=mini_scene['ply'], output=str(directory / 'a.ply'))))
        code, payload = run(capsys, 'pipeline', '--config', str(config),
                            '--output', str(directory / 'b.ply'))
        assert code == 0
        assert os.path.exists(str(directory / 'b.ply'))
        assert not os.path.exists(str(directory / 'a.ply'))
        assert payload['transform']['scale'] == 1.0

    def test_pipeline_needs_input_and_output(self, tmp_path):
        assert main(['pipeline']) == 2

    def test_alignment_without_cameras(self, mini_scene, tmp_path):
        assert main(['pipeline', '--input', mini_scene['ply'], '--output', str(tmp_path / 'o.ply'),
                     '--mode', 'sim3']) == 2
