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
module: splatprep_image
short_description: Low-light enhancement and chroma correction of PNG images
version_added: "1.0.0"
description:
    - Naka-Rushton enhancement, correction map fitting and application,
      and image quality metrics.

options:
    operation:
        description:
            - operation to perform on the images
        choices: ['enhance', 'correct', 'fit_correction', 'metrics']
        required: true
    input:
        description:
            - PNG file or directory of PNG files to enhance
            - required for enhance
        required: false
    output:
        description:
            - output directory for enhance, output PNG for correct
        required: false
    depth:
        description:
            - bit depth of written PNG files
        choices: [8, 16]
        default: 16
        required: false
    low_image:
        description:
            - low-light PNG, required for fit_correction
        required: false
    naka_image:
        description:
            - enhanced PNG, required for correct and fit_correction
        required: false
    gt_image:
        description:
            - reference PNG, required for fit_correction and metrics
        required: false
    pred_image:
        description:
            - predicted PNG, required for metrics
        required: false
    maps:
        description:
            - correction maps raster read by correct and metrics
        required: false
    maps_out:
        description:
            - correction maps raster written by fit_correction
        required: false
    preview:
        description:
            - path prefix for PNG previews of fitted maps
        required: false
    naka:
        description:
            - Naka-Rushton parameters (sigma, exponent)
        required: false
    blur:
        description:
            - frequency split parameters (sigma, radius, boundary)
        required: false
    loss:
        description:
            - objective weights (w_rgb, w_chroma, w_ssim, w_edge, w_reg, w_mse,
              w_gray, w_bright, charbonnier_eps, mul_range)
        required: false
    fit:
        description:
            - map fitting parameters (grid_w, grid_h, iterations, step_size, seed)
        required: false
    threads:
        description:
            - worker count for batch enhancement, 0 uses all CPUs
            - falls back to the NAKAGS_THREADS environment variable
        required: false
author:
    - splatprep contributors
'''

EXAMPLES = '''
- name: enhance a directory of low-light frames
  splatprep_image:
    operation: enhance
    input: "frames/low"
    output: "frames/naka"
    naka:
      sigma: 0.05

- name: fit correction maps
  splatprep_image:
    operation: fit_correction
    low_image: "frames/low/0001.png"
    naka_image: "frames/naka/0001.png"
    gt_image: "frames/gt/0001.png"
    maps_out: "maps/0001.nkgs"
    fit:
      iterations: 200
  register: output
'''

RETURN = '''
msg: success/failure message corresponding to image operation
changed: true if files have been written else false
outputs: enhanced PNG paths (enhance)
report: final loss terms of the fitted maps (fit_correction)
trace: loss after every fit iteration (fit_correction)
metrics: loss terms with psnr_db and ssim (metrics)
'''

from ansible_collections.lowlight.splatprep.plugins.module_utils.photometric_operations import (
    PHOTOMETRIC_OPERATIONS,
    PhotometricOperations,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep import (
    SplatprepAnsibleModule,
)

# module option -> operation parameter
IMAGE_PARAMS = dict(
    input='input',
    output='output',
    depth='depth',
    low_image='low',
    naka_image='naka',
    gt_image='gt',
    pred_image='pred',
    maps='maps',
    maps_out='maps_out',
    preview='preview',
)


def splatprep_image_argument_spec():
    return dict(
        operation=dict(choices=PHOTOMETRIC_OPERATIONS, required=True),
        input=dict(type='path', required=False, default=None),
        output=dict(type='path', required=False, default=None),
        depth=dict(type='int', required=False, default=16, choices=[8, 16]),
        low_image=dict(type='path', required=False, default=None),
        naka_image=dict(type='path', required=False, default=None),
        gt_image=dict(type='path', required=False, default=None),
        pred_image=dict(type='path', required=False, default=None),
        maps=dict(type='path', required=False, default=None),
        maps_out=dict(type='path', required=False, default=None),
        preview=dict(type='path', required=False, default=None),
    )


class SplatprepImage(SplatprepAnsibleModule):
    def __init__(self, **kwargs):
        super(SplatprepImage, self).__init__(**kwargs)
        params = dict((target, self.params.get(option))
                      for option, target in IMAGE_PARAMS.items())
        self.operations = PhotometricOperations(self.config, params)

    def manage_operations(self):
        operation = self.params.get('operation')

        return self.operations.manage_operations(operation)


def main():
    argument_spec = splatprep_image_argument_spec()
    response = dict(msg=dict(type='str'))
    module = SplatprepImage(argument_spec=argument_spec, supports_check_mode=True)

    try:
        if module.check_mode:
            response = dict()
            response['changed'] = False
            response['msg'] = "skipped, running in check mode"
            response['skipped'] = True
        elif module.params.get('operation'):
            response = module.manage_operations()
        else:
            raise Exception('Please provide the operation for the images')

    except Exception as error:
        response['msg'] = str(error)
        module.fail_json(**response)
    else:
        module.exit_json(**response)


if __name__ == '__main__':
    main()
