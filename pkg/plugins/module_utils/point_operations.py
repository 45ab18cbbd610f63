# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only

import logging

from ansible_collections.lowlight.splatprep.plugins.module_utils.ppm import (
    alignment_rms,
    apply_transform,
    estimate_alignment,
    progressive_prune,
    run_ppm,
    voxel_pool,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_errors import (
    SplatprepInputError,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_io import (
    read_cameras,
    read_ply,
    write_ply,
    write_report,
)

logger = logging.getLogger(__name__)

POINT_OPERATIONS = ['align', 'pool', 'prune', 'pipeline']


class PointOperations():
    def __init__(self, config, params=None):
        self.config = config
        self.params = params or dict()

    def manage_operations(self, operation=None):
        if operation == "align":
            return self.align()

        if operation == "pool":
            return self.pool()

        if operation == "prune":
            return self.prune()

        if operation == "pipeline":
            return self.pipeline()

        raise SplatprepInputError("Please provide a valid point operation")

    def _require(self, *names):
        missing = [name for name in names if not self.params.get(name)]
        if missing:
            raise SplatprepInputError(
                "missing required parameter(s): {0}".format(', '.join(missing)))
        return [self.params.get(name) for name in names]

    def _ply_format(self):
        return self.params.get('ply_format') or 'binary_le'

    def _cameras(self, mode):
        if mode == 'none':
            return None, None
        src_path = self.params.get('src_cameras') or self.config.src_cameras
        dst_path = self.params.get('dst_cameras') or self.config.dst_cameras
        if not src_path or not dst_path:
            raise SplatprepInputError("{0} alignment needs source and target cameras".format(mode))
        return read_cameras(src_path), read_cameras(dst_path)

    def _alignment_summary(self, transform, src, dst):
        summary = dict(transform=transform.to_dict(), rms=None)
        if src is not None:
            src_points, dst_points = src.centers_for(sorted(src.ids)), dst.centers_for(sorted(src.ids))
            summary['rms'] = alignment_rms(src_points, dst_points, transform)
        return summary

    def align(self):
        ply, output = self._require('ply', 'output')
        mode = self.params.get('mode') or self.config.mode
        response = dict()

        src, dst = self._cameras(mode)
        cloud = read_ply(ply)
        transform = estimate_alignment(src, dst, mode)
        write_ply(apply_transform(cloud, transform), output, self._ply_format())

        response.update(self._alignment_summary(transform, src, dst))
        response['points'] = len(cloud)
        response['msg'] = 'Point cloud {0} has been aligned ({1})'.format(ply, mode)
        response['changed'] = True

        return response

    def pool(self):
        ply, output = self._require('ply', 'output')
        response = dict()

        cloud = read_ply(ply)
        pooled = voxel_pool(cloud, self.config.prune.voxel_size)
        write_ply(pooled, output, self._ply_format())

        response['points_before'] = len(cloud)
        response['points_after'] = len(pooled)
        response['msg'] = 'Point cloud {0} has been pooled into {1} voxels'.format(ply, len(pooled))
        response['changed'] = True

        return response

    def prune(self):
        ply, output = self._require('ply', 'output')
        response = dict()

        cloud = read_ply(ply)
        pruned, report = progressive_prune(cloud, self.config.prune, self.config.workers)
        write_ply(pruned, output, self._ply_format())
        if self.params.get('report'):
            write_report(report, self.params.get('report'))

        response['report'] = report.to_dict()
        response['msg'] = 'Point cloud {0} has been pruned to {1} points'.format(
            ply, report.final_count)
        response['changed'] = True

        return response

    def pipeline(self):
        config = self.config
        if not config.input or not config.output:
            raise SplatprepInputError("pipeline config needs 'input' and 'output'")
        response = dict()

        src, dst = self._cameras(config.mode)
        cloud = read_ply(config.input)
        pruned, report = run_ppm(cloud, src, dst, config.mode, config.prune, config.workers)
        write_ply(pruned, config.output, self._ply_format())
        if config.report:
            write_report(report, config.report)

        response.update(self._alignment_summary(report.alignment, src, dst))
        response['report'] = report.to_dict()
        response['msg'] = 'Point cloud {0} has been preprocessed into {1}'.format(
            config.input, config.output)
        response['changed'] = True

        return response
