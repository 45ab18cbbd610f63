# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only

import copy
import os
from dataclasses import dataclass

from ansible.module_utils.basic import AnsibleModule, env_fallback
from ansible.module_utils.common.arg_spec import ArgumentSpecValidator

from ansible_collections.lowlight.splatprep.plugins.module_utils.chroma import FitConfig
from ansible_collections.lowlight.splatprep.plugins.module_utils.imagecore import (
    BOUNDARY_MODES,
    BlurParams,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.naka import NakaParams
from ansible_collections.lowlight.splatprep.plugins.module_utils.objective import LossWeights
from ansible_collections.lowlight.splatprep.plugins.module_utils.ppm import (
    ALIGNMENT_MODES,
    PruneConfig,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_errors import (
    ConfigError,
    InvalidParameterError,
)

THREADS_ENV = 'NAKAGS_THREADS'
CONFIG_SECTIONS = ['naka', 'blur', 'loss', 'fit', 'prune']


def naka_argument_spec():
    return dict(
        sigma=dict(type='float', default=0.05),
        exponent=dict(type='float', default=1.0),
    )


def blur_argument_spec():
    return dict(
        sigma=dict(type='float', default=2.0),
        radius=dict(type='int', required=False, default=None),
        boundary=dict(type='str', default='reflect', choices=sorted(BOUNDARY_MODES)),
    )


def loss_argument_spec():
    return dict(
        w_rgb=dict(type='float', default=1.0),
        w_chroma=dict(type='float', default=0.5),
        w_ssim=dict(type='float', default=0.2),
        w_edge=dict(type='float', default=0.1),
        w_reg=dict(type='float', default=0.01),
        w_mse=dict(type='float', default=0.0),
        w_gray=dict(type='float', default=1.0),
        w_bright=dict(type='float', default=0.8),
        charbonnier_eps=dict(type='float', default=1e-3),
        mul_range=dict(type='list', elements='float', default=[0.2, 5.0]),
    )


def fit_argument_spec():
    return dict(
        grid_w=dict(type='int', default=16),
        grid_h=dict(type='int', default=16),
        iterations=dict(type='int', default=200),
        step_size=dict(type='float', default=0.05),
        seed=dict(type='int', default=0),
    )


def prune_argument_spec():
    return dict(
        tau0=dict(type='float', default=0.005),
        beta=dict(type='float', default=0.01),
        epsilon=dict(type='float', default=1e-8),
        iterations=dict(type='int', default=6),
        min_keep_fraction=dict(type='float', default=0.3),
        seed=dict(type='int', default=0),
        voxel_size=dict(type='float', default=0.01),
        recompute_nn=dict(type='bool', default=True),
    )


def splatprep_argument_spec():
    return dict(
        naka=dict(type='dict', apply_defaults=True, options=naka_argument_spec()),
        blur=dict(type='dict', apply_defaults=True, options=blur_argument_spec()),
        loss=dict(type='dict', apply_defaults=True, options=loss_argument_spec()),
        fit=dict(type='dict', apply_defaults=True, options=fit_argument_spec()),
        prune=dict(type='dict', apply_defaults=True, options=prune_argument_spec()),
        threads=dict(type='int', default=0, fallback=(env_fallback, [THREADS_ENV])),
    )


def pipeline_argument_spec():
    argument_spec = splatprep_argument_spec()
    argument_spec.update(
        input=dict(type='path', required=False),
        output=dict(type='path', required=False),
        report=dict(type='path', required=False),
        src_cameras=dict(type='path', required=False),
        dst_cameras=dict(type='path', required=False),
        mode=dict(type='str', default='none', choices=ALIGNMENT_MODES),
    )
    return argument_spec


@dataclass(frozen=True)
class PipelineConfig:
    naka: NakaParams
    blur: BlurParams
    loss: LossWeights
    fit: FitConfig
    prune: PruneConfig
    input: str = None
    output: str = None
    report: str = None
    src_cameras: str = None
    dst_cameras: str = None
    mode: str = 'none'
    threads: int = 0

    @property
    def workers(self):
        return resolve_workers(self.threads)


def _build_section(section, factory, values):
    try:
        return factory(**values)
    except InvalidParameterError as error:
        raise ConfigError("invalid value for {0}.{1}".format(section, error))


def build_pipeline_config(params):
    """Turn validated parameters into typed config objects."""
    naka = dict(params['naka'])
    loss = dict(params['loss'])
    loss['mul_range'] = tuple(loss['mul_range'])
    if len(loss['mul_range']) != 2:
        raise ConfigError("invalid value for loss.mul_range: expected [lo, hi]")
    threads = params.get('threads') or 0
    if threads < 0:
        raise ConfigError("invalid value for threads: must be >= 0, got {0}".format(threads))

    return PipelineConfig(
        naka=_build_section('naka', NakaParams,
                            dict(sigma=naka['sigma'], exponent_n=naka['exponent'])),
        blur=_build_section('blur', BlurParams, params['blur']),
        loss=_build_section('loss', LossWeights, loss),
        fit=_build_section('fit', FitConfig, params['fit']),
        prune=_build_section('prune', PruneConfig, params['prune']),
        input=params.get('input'),
        output=params.get('output'),
        report=params.get('report'),
        src_cameras=params.get('src_cameras'),
        dst_cameras=params.get('dst_cameras'),
        mode=params.get('mode') or 'none',
        threads=threads,
    )


def merge_overrides(params, overrides):
    """Overlay non-None values; nested dicts are merged one level deep."""
    merged = copy.deepcopy(params)
    for key, value in overrides.items():
        if isinstance(value, dict):
            section = dict(merged.get(key) or {})
            section.update((name, item) for name, item in value.items() if item is not None)
            if section:
                merged[key] = section
        elif value is not None:
            merged[key] = value
    return merged


def validate_pipeline_params(params, source='config'):
    if not isinstance(params, dict):
        raise ConfigError("{0}: expected a JSON object".format(source))
    result = ArgumentSpecValidator(pipeline_argument_spec()).validate(params)
    if result.error_messages:
        raise ConfigError("{0}: {1}".format(source, '; '.join(result.error_messages)))
    return build_pipeline_config(result.validated_parameters)


def resolve_workers(threads):
    if threads and threads > 0:
        return threads
    return os.cpu_count() or 1


class SplatprepAnsibleModule(AnsibleModule):
    def __init__(self, *args, **kwargs):
        argument_spec = splatprep_argument_spec()
        argument_spec.update(kwargs.get('argument_spec', dict()))
        kwargs['argument_spec'] = argument_spec

        super(SplatprepAnsibleModule, self).__init__(*args, **kwargs)
        self.config = self.load_config()

    def load_config(self):
        try:
            return build_pipeline_config(self.params)
        except ConfigError as error:
            self.fail_json(msg=str(error))
