# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only

# !/usr/bin/python

ANSIBLE_METADATA = {
    'metadata_version': '1.1',
    'status': ['preview'],
    'supported_by': 'community'
}

DOCUMENTATION = '''
---
module: splatprep_points
short_description: Align, pool and prune point clouds for splatting initialization
version_added: "1.0.0"
description:
    - Point preprocessing of PLY clouds; camera-center alignment, voxel
      pooling and progressive distance-adaptive pruning.

options:
    operation:
        description:
            - operation to perform on the point cloud
        choices: ['align', 'pool', 'prune', 'pipeline']
        required: true
    input:
        description:
            - input PLY file
        required: true
    output:
        description:
            - output PLY file
        required: true
    report:
        description:
            - PruneReport JSON file written by prune and pipeline
        required: false
    src_cameras:
        description:
            - camera centers in the frame of the input cloud
            - required unless mode is none
        required: false
    dst_cameras:
        description:
            - camera centers in the target frame
            - required unless mode is none
        required: false
    mode:
        description:
            - alignment model
        choices: ['sim3', 'rigid', 'none']
        default: none
        required: false
    ply_format:
        description:
            - PLY encoding of the output
        choices: ['ascii', 'binary_le']
        default: binary_le
        required: false
    prune:
        description:
            - pruning parameters (tau0, beta, epsilon, iterations,
              min_keep_fraction, seed, voxel_size, recompute_nn)
        required: false
    threads:
        description:
            - nearest neighbor query workers, 0 uses all CPUs
            - falls back to the NAKAGS_THREADS environment variable
        required: false
author:
    - splatprep contributors
'''

EXAMPLES = '''
- name: preprocess a reconstruction
  splatprep_points:
    operation: pipeline
    input: "scene/points.ply"
    output: "scene/points_init.ply"
    report: "scene/prune_report.json"
    src_cameras: "scene/cameras_recon.json"
    dst_cameras: "scene/cameras_world.json"
    mode: sim3
    prune:
      seed: 42
  register: output
'''

RETURN = '''
msg: success/failure message corresponding to point operation
changed: true if the output cloud has been written else false
transform: estimated scale, rotation and translation (align, pipeline)
rms: camera-center residual of the transform (align, pipeline)
report: PruneReport with initial_count, final_count and iterations (prune, pipeline)
'''

from ansible_collections.lowlight.splatprep.plugins.module_utils.point_operations import (
    POINT_OPERATIONS,
    PointOperations,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.ppm import ALIGNMENT_MODES
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_io import (
    PLY_WRITE_FORMATS,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep import (
    SplatprepAnsibleModule,
)


def splatprep_points_argument_spec():
    return dict(
        operation=dict(choices=POINT_OPERATIONS, required=True),
        input=dict(type='path', required=True),
        output=dict(type='path', required=True),
        report=dict(type='path', required=False, default=None),
        src_cameras=dict(type='path', required=False, default=None),
        dst_cameras=dict(type='path', required=False, default=None),
        mode=dict(type='str', required=False, default='none', choices=ALIGNMENT_MODES),
        ply_format=dict(type='str', required=False, default='binary_le',
                        choices=sorted(PLY_WRITE_FORMATS)),
    )


class SplatprepPoints(SplatprepAnsibleModule):
    def __init__(self, **kwargs):
        super(SplatprepPoints, self).__init__(**kwargs)
        params = dict(
            ply=self.params.get('input'),
            output=self.params.get('output'),
            report=self.params.get('report'),
            ply_format=self.params.get('ply_format'),
        )
        self.operations = PointOperations(self.config, params)

    def manage_operations(self):
        operation = self.params.get('operation')

        return self.operations.manage_operations(operation)


def main():
    argument_spec = splatprep_points_argument_spec()
    response = dict(msg=dict(type='str'))
    module = SplatprepPoints(argument_spec=argument_spec, supports_check_mode=True)

    try:
        if module.check_mode:
            response = dict()
            response['changed'] = False
            response['msg'] = "skipped, running in check mode"
            response['skipped'] = True
        elif module.params.get('operation'):
            response = module.manage_operations()
        else:
            raise Exception('Please provide the operation for the point cloud')

    except Exception as error:
        response['msg'] = str(error)
        module.fail_json(**response)
    else:
        module.exit_json(**response)


if __name__ == '__main__':
    main()
