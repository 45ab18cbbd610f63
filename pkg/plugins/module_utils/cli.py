# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only

"""Command-line front end: ``python -m ...module_utils.cli <command> [flags]``.

Exit codes: 0 success, 1 output failure, 2 bad input or flags,
3 degenerate alignment.
"""

import argparse
import logging
import sys

from ansible_collections.lowlight.splatprep.plugins.module_utils.photometric_operations import (
    PhotometricOperations,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.point_operations import (
    PointOperations,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.ppm import ALIGNMENT_MODES
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep import (
    THREADS_ENV,
    pipeline_argument_spec,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_errors import (
    DegenerateAlignmentError,
    SplatprepInputError,
    SplatprepOutputError,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_io import (
    PLY_WRITE_FORMATS,
    dump_json,
    read_config,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_OUTPUT = 1
EXIT_INPUT = 2
EXIT_DEGENERATE = 3

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


def positive_float(value):
    try:
        number = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a number, got {0!r}".format(value))
    if not number > 0:
        raise argparse.ArgumentTypeError("must be > 0, got {0}".format(value))
    return number


def non_negative_int(value):
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected an integer, got {0!r}".format(value))
    if number < 0:
        raise argparse.ArgumentTypeError("must be >= 0, got {0}".format(value))
    return number


def grid_size(value):
    """``16`` or ``16x8`` (width x height)."""
    parts = value.lower().split('x')
    if len(parts) not in (1, 2):
        raise argparse.ArgumentTypeError("expected N or WxH, got {0!r}".format(value))
    sizes = [non_negative_int(part) for part in parts]
    if min(sizes) < 1:
        raise argparse.ArgumentTypeError("grid sizes must be >= 1, got {0!r}".format(value))
    return (sizes[0], sizes[-1])


def _default(section, key):
    spec = pipeline_argument_spec()
    if section is None:
        return spec[key].get('default')
    return spec[section]['options'][key].get('default')


def _config_flag(parser, flag, section, key, help, **kwargs):
    """Flag overriding a config value; help shows the built-in default."""
    keys = key if isinstance(key, tuple) else (key,)
    default = ' x '.join(str(_default(section, name)) for name in keys)
    parser.add_argument(flag, default=None,
                        help="{0} (default: {1})".format(help, default), **kwargs)
    parser.set_defaults(_overrides=parser.get_default('_overrides') + [
        (flag.lstrip('-').replace('-', '_'), section, keys)])


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', metavar='FILE', default=None,
                        help="JSON pipeline config; flags override its values (default: none)")
    common.add_argument('--threads', type=non_negative_int, default=None,
                        help="worker count, 0 = all CPUs (default: ${0} or {1})".format(
                            THREADS_ENV, _default(None, 'threads')))
    common.add_argument('--verbose', '-v', action='store_true',
                        help="log debug detail to stderr (default: off)")
    return common


def _add_command(subparsers, name, common, help):
    parser = subparsers.add_parser(name, parents=[common], help=help, description=help)
    parser.set_defaults(command=name, _overrides=[])
    return parser


def _ply_format_flag(parser):
    parser.add_argument('--ply-format', choices=sorted(PLY_WRITE_FORMATS), default='binary_le',
                        help="PLY encoding of the output (default: binary_le)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog='splatprep',
        description="Low-light enhancement and point-cloud preprocessing for splatting.")
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True
    common = _common_parser()

    enhance = _add_command(subparsers, 'enhance', common,
                           "Naka-Rushton enhancement of a PNG or a directory of PNGs")
    enhance.add_argument('--input', required=True, metavar='DIR|FILE', help="PNG file or directory")
    enhance.add_argument('--output', required=True, metavar='DIR', help="output directory")
    enhance.add_argument('--depth', type=int, choices=[8, 16], default=16,
                         help="output PNG bit depth (default: 16)")
    _config_flag(enhance, '--sigma', 'naka', 'sigma', "half-saturation constant",
                 type=positive_float)
    _config_flag(enhance, '--exponent', 'naka', 'exponent', "response exponent n",
                 type=positive_float)
    _config_flag(enhance, '--blur-sigma', 'blur', 'sigma', "frequency split blur sigma",
                 type=positive_float)

    correct = _add_command(subparsers, 'correct', common,
                           "apply a correction maps raster to an enhanced image")
    correct.add_argument('--naka', required=True, metavar='FILE', help="enhanced PNG")
    correct.add_argument('--maps', required=True, metavar='FILE', help="NKGSMAPS raster")
    correct.add_argument('--output', required=True, metavar='FILE', help="corrected PNG")
    correct.add_argument('--depth', type=int, choices=[8, 16], default=16,
                         help="output PNG bit depth (default: 16)")
    _config_flag(correct, '--blur-sigma', 'blur', 'sigma', "frequency split blur sigma",
                 type=positive_float)

    fit = _add_command(subparsers, 'fit-correction', common,
                       "fit correction maps against a reference image")
    fit.add_argument('--low', required=True, metavar='FILE', help="low-light PNG")
    fit.add_argument('--naka', required=True, metavar='FILE', help="enhanced PNG")
    fit.add_argument('--gt', required=True, metavar='FILE', help="reference PNG")
    fit.add_argument('--maps-out', required=True, metavar='FILE', help="fitted NKGSMAPS raster")
    fit.add_argument('--preview', metavar='PREFIX', default=None,
                     help="also write PREFIX_mul.png and PREFIX_add.png (default: none)")
    _config_flag(fit, '--grid', 'fit', ('grid_w', 'grid_h'), "coarse grid, N or WxH",
                 type=grid_size)
    _config_flag(fit, '--iters', 'fit', 'iterations', "search iterations",
                 type=non_negative_int)
    _config_flag(fit, '--seed', 'fit', 'seed', "search seed", type=non_negative_int)
    _config_flag(fit, '--step-size', 'fit', 'step_size', "largest search radius",
                 type=positive_float)
    _config_flag(fit, '--blur-sigma', 'blur', 'sigma', "frequency split blur sigma",
                 type=positive_float)

    metrics = _add_command(subparsers, 'metrics', common,
                           "loss terms, PSNR and SSIM of a prediction")
    metrics.add_argument('--pred', required=True, metavar='FILE', help="predicted PNG")
    metrics.add_argument('--gt', required=True, metavar='FILE', help="reference PNG")
    metrics.add_argument('--maps', metavar='FILE', default=None,
                         help="maps raster for the regularizer (default: identity maps)")

    align = _add_command(subparsers, 'align', common,
                         "align a point cloud from camera-center correspondences")
    align.add_argument('--ply', required=True, metavar='FILE', help="input PLY")
    align.add_argument('--output', required=True, metavar='FILE', help="aligned PLY")
    _config_flag(align, '--src-cams', None, 'src_cameras', "camera centers in the cloud frame",
                 metavar='FILE')
    _config_flag(align, '--dst-cams', None, 'dst_cameras', "camera centers in the target frame",
                 metavar='FILE')
    _config_flag(align, '--mode', None, 'mode', "alignment model", choices=ALIGNMENT_MODES)
    _ply_format_flag(align)

    pool = _add_command(subparsers, 'pool', common, "voxel pooling of a point cloud")
    pool.add_argument('--ply', required=True, metavar='FILE', help="input PLY")
    pool.add_argument('--output', required=True, metavar='FILE', help="pooled PLY")
    _config_flag(pool, '--voxel', 'prune', 'voxel_size', "voxel edge length",
                 type=positive_float)
    _ply_format_flag(pool)

    prune = _add_command(subparsers, 'prune', common, "progressive distance-adaptive pruning")
    prune.add_argument('--ply', required=True, metavar='FILE', help="input PLY")
    prune.add_argument('--output', required=True, metavar='FILE', help="pruned PLY")
    prune.add_argument('--report', metavar='FILE', default=None,
                       help="PruneReport JSON file (default: none)")
    _config_flag(prune, '--tau0', 'prune', 'tau0', "initial threshold", type=positive_float)
    _config_flag(prune, '--beta', 'prune', 'beta', "threshold update rate", type=float)
    _config_flag(prune, '--iters', 'prune', 'iterations', "pruning passes",
                 type=non_negative_int)
    _config_flag(prune, '--seed', 'prune', 'seed', "pruning seed", type=non_negative_int)
    _config_flag(prune, '--min-keep', 'prune', 'min_keep_fraction',
                 "retention floor as a fraction of the input", type=float)
    _ply_format_flag(prune)

    pipeline = _add_command(subparsers, 'pipeline', common, "align, pool and prune in one run")
    _config_flag(pipeline, '--input', None, 'input', "input PLY", metavar='FILE')
    _config_flag(pipeline, '--output', None, 'output', "final PLY", metavar='FILE')
    _config_flag(pipeline, '--report', None, 'report', "PruneReport JSON file", metavar='FILE')
    _config_flag(pipeline, '--src-cams', None, 'src_cameras',
                 "camera centers in the cloud frame", metavar='FILE')
    _config_flag(pipeline, '--dst-cams', None, 'dst_cameras',
                 "camera centers in the target frame", metavar='FILE')
    _config_flag(pipeline, '--mode', None, 'mode', "alignment model", choices=ALIGNMENT_MODES)
    _config_flag(pipeline, '--seed', 'prune', 'seed', "pruning seed", type=non_negative_int)
    _ply_format_flag(pipeline)

    return parser


def collect_overrides(args):
    """Nested config overrides from the flags that were actually given."""
    overrides = dict(threads=args.threads)
    for dest, section, keys in args._overrides:
        value = getattr(args, dest)
        if value is None:
            continue
        values = value if len(keys) > 1 else (value,)
        target = overrides if section is None else overrides.setdefault(section, dict())
        target.update(zip(keys, values))
    return overrides


OPERATIONS = {
    'enhance': (PhotometricOperations, 'enhance', ['input', 'output', 'depth']),
    'correct': (PhotometricOperations, 'correct', ['naka', 'maps', 'output', 'depth']),
    'fit-correction': (PhotometricOperations, 'fit_correction',
                       ['low', 'naka', 'gt', 'maps_out', 'preview']),
    'metrics': (PhotometricOperations, 'metrics', ['pred', 'gt', 'maps']),
    'align': (PointOperations, 'align', ['ply', 'output', 'ply_format']),
    'pool': (PointOperations, 'pool', ['ply', 'output', 'ply_format']),
    'prune': (PointOperations, 'prune', ['ply', 'output', 'report', 'ply_format']),
    'pipeline': (PointOperations, 'pipeline', ['ply_format']),
}


def run_command(args):
    """Execute a parsed command and return its JSON payload."""
    service, operation, names = OPERATIONS[args.command]
    config = read_config(args.config, collect_overrides(args))
    params = dict((name, getattr(args, name, None)) for name in names)

    response = service(config, params).manage_operations(operation)
    logger.info(response.pop('msg'))
    response.pop('changed', None)
    for warning in response.pop('warnings', []):
        logger.warning(warning)
    return response


def configure_logging(verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger('ansible_collections.lowlight.splatprep').setLevel(
        logging.DEBUG if verbose else logging.WARNING)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return error.code if isinstance(error.code, int) else EXIT_INPUT

    configure_logging(args.verbose)
    try:
        payload = run_command(args)
    except DegenerateAlignmentError as error:
        logger.error(str(error))
        return EXIT_DEGENERATE
    except SplatprepInputError as error:
        logger.error(str(error))
        return EXIT_INPUT
    except SplatprepOutputError as error:
        logger.error(str(error))
        return EXIT_OUTPUT

    sys.stdout.write(dump_json(payload))
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
