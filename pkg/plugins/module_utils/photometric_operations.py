# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only

import logging
import os
from concurrent.futures import ThreadPoolExecutor

from ansible_collections.lowlight.splatprep.plugins.module_utils.chroma import (
    apply_correction,
    fit_correction,
    identity_maps,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.imagecore import psnr, ssim
from ansible_collections.lowlight.splatprep.plugins.module_utils.naka import naka_transform
from ansible_collections.lowlight.splatprep.plugins.module_utils.objective import compound_loss
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_errors import (
    ImageReadError,
    OutputWriteError,
    SplatprepInputError,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_io import (
    json_number,
    list_pngs,
    read_maps,
    read_png,
    write_maps,
    write_maps_preview,
    write_png,
)

logger = logging.getLogger(__name__)

PHOTOMETRIC_OPERATIONS = ['enhance', 'correct', 'fit_correction', 'metrics']


def _ensure_directory(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as error:
        raise OutputWriteError(path, error.strerror or str(error))


def metrics_payload(pred, gt, maps, weights):
    """LossReport terms plus PSNR/SSIM under the fixed metric key names.

    Identical images have infinite PSNR, reported as the string ``'inf'``.
    """
    payload = compound_loss(pred, gt, maps, weights).to_dict()
    payload['psnr_db'] = json_number(psnr(pred, gt))
    payload['ssim'] = ssim(pred, gt)
    return payload


class PhotometricOperations():
    def __init__(self, config, params=None):
        self.config = config
        self.params = params or dict()

    def manage_operations(self, operation=None):
        if operation == "enhance":
            return self.enhance()

        if operation == "correct":
            return self.correct()

        if operation == "fit_correction":
            return self.fit_correction()

        if operation == "metrics":
            return self.metrics()

        raise SplatprepInputError("Please provide a valid photometric operation")

    def _require(self, *names):
        missing = [name for name in names if not self.params.get(name)]
        if missing:
            raise SplatprepInputError(
                "missing required parameter(s): {0}".format(', '.join(missing)))
        return [self.params.get(name) for name in names]

    def _enhance_file(self, source, output_dir, depth):
        target = os.path.join(output_dir, os.path.basename(source))
        enhanced = naka_transform(read_png(source), self.config.naka)
        write_png(enhanced, target, depth)
        return target

    def enhance(self):
        source, output_dir = self._require('input', 'output')
        depth = self.params.get('depth') or 16
        response = dict()
        response['changed'] = False

        if os.path.isdir(source):
            sources = list_pngs(source)
        elif os.path.isfile(source):
            sources = [source]
        else:
            raise ImageReadError(source, "no such file or directory")
        _ensure_directory(output_dir)

        workers = min(self.config.workers, max(1, len(sources)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(
                lambda path: self._enhance_file(path, output_dir, depth), sources))

        logger.info("enhanced %d image(s) with sigma %g, n %g",
                    len(outputs), self.config.naka.sigma, self.config.naka.exponent_n)
        response['outputs'] = outputs
        response['msg'] = 'Image(s) {0} have been enhanced'.format(
            [os.path.basename(path) for path in outputs])
        response['changed'] = bool(outputs)

        return response

    def correct(self):
        naka_path, maps_path, output = self._require('naka', 'maps', 'output')
        depth = self.params.get('depth') or 16
        response = dict()

        corrected = apply_correction(read_png(naka_path), read_maps(maps_path), self.config.blur)
        write_png(corrected, output, depth)
        response['msg'] = 'Corrected image {0} has been written'.format(output)
        response['changed'] = True

        return response

    def fit_correction(self):
        low_path, naka_path, gt_path, maps_out = self._require('low', 'naka', 'gt', 'maps_out')
        response = dict()

        low, naka, gt = read_png(low_path), read_png(naka_path), read_png(gt_path)
        maps, trace = fit_correction(low, naka, gt, self.config.fit, self.config.loss,
                                     self.config.blur)
        write_maps(maps, maps_out)
        if self.params.get('preview'):
            response['previews'] = list(write_maps_preview(maps, self.params.get('preview')))

        corrected = apply_correction(naka, maps, self.config.blur)
        report = compound_loss(corrected, gt, maps, self.config.loss)
        response['report'] = report.to_dict()
        response['initial_total'] = trace[0]
        response['trace'] = trace
        response['msg'] = 'Correction maps {0} have been fitted'.format(maps_out)
        response['changed'] = True

        return response

    def metrics(self):
        pred_path, gt_path = self._require('pred', 'gt')
        response = dict()
        response['changed'] = False

        pred, gt = read_png(pred_path), read_png(gt_path)
        if self.params.get('maps'):
            maps = read_maps(self.params.get('maps'))
        else:
            maps = identity_maps(pred.width, pred.height)
        response['metrics'] = metrics_payload(pred, gt, maps, self.config.loss)
        response['msg'] = 'Metrics for {0} have been computed'.format(pred_path)

        return response
