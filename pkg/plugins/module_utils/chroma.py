# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only

"""Frequency-decoupled correction and a coarse-grid fitter for the maps.

Only the blurred (low-frequency) part of the Naka image is corrected::

    base = lf * mul + add
    out = clip(base + hf, 0, 1)

``fit_correction`` searches the maps on a coarse grid, upsampled bilinearly to
full resolution, minimizing ``objective.compound_loss`` against a reference
image.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ansible_collections.lowlight.splatprep.plugins.module_utils.imagecore import (
    BlurParams,
    ImageBuffer,
    require_channels,
    require_same_shape,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.naka import (
    build_dual_branch,
    frequency_decompose,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.objective import (
    LossWeights,
    compound_loss,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_errors import (
    InvalidParameterError,
    ShapeMismatchError,
)

logger = logging.getLogger(__name__)

# search radius never drops below this fraction of step_size
MIN_RADIUS_FRACTION = 1e-3
RADIUS_GROWTH = 1.25
RADIUS_SHRINK = 0.5


@dataclass(frozen=True)
class CorrectionMaps:
    mul: ImageBuffer
    add: ImageBuffer

    def __post_init__(self):
        require_channels(self.mul, 1)
        require_channels(self.add, 3)
        if self.mul.shape[1:] != self.add.shape[1:]:
            raise ShapeMismatchError(
                "mul {0} and add {1} differ spatially".format(self.mul.shape, self.add.shape))
        if self.mul.data.min() < 0.0:
            raise InvalidParameterError('mul', 'multiplicative map must be >= 0')

    @property
    def width(self):
        return self.mul.width

    @property
    def height(self):
        return self.mul.height


@dataclass(frozen=True)
class FitConfig:
    grid_w: int = 16
    grid_h: int = 16
    iterations: int = 200
    step_size: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.grid_w < 1:
            raise InvalidParameterError('grid_w', 'must be >= 1, got {0}'.format(self.grid_w))
        if self.grid_h < 1:
            raise InvalidParameterError('grid_h', 'must be >= 1, got {0}'.format(self.grid_h))
        if self.iterations < 0:
            raise InvalidParameterError(
                'iterations', 'must be >= 0, got {0}'.format(self.iterations))
        if not self.step_size > 0:
            raise InvalidParameterError(
                'step_size', 'must be > 0, got {0}'.format(self.step_size))


def identity_maps(width, height):
    if width < 1 or height < 1:
        raise InvalidParameterError('size', 'maps must be at least 1x1')
    return CorrectionMaps(mul=ImageBuffer.filled(width, height, 1, 1.0),
                          add=ImageBuffer.filled(width, height, 3, 0.0))


def compose_correction(pair, maps):
    """Correct the low-frequency part of a precomputed split."""
    lf = pair.low_freq
    if lf.shape[1:] != maps.mul.shape[1:]:
        raise ShapeMismatchError(
            "image {0}x{1} vs maps {2}x{3}".format(lf.width, lf.height, maps.width, maps.height))
    base = lf.data * maps.mul.data + maps.add.data
    return ImageBuffer(np.clip(base + pair.high_freq.data, 0.0, 1.0))


def apply_correction(naka, maps, blur):
    require_channels(naka, 3)
    return compose_correction(frequency_decompose(naka, blur), maps)


def _interp_axis(values, size, axis):
    count = values.shape[axis]
    coords = np.linspace(0.0, count - 1, size) if size > 1 else np.zeros(1)
    lo = np.minimum(np.floor(coords).astype(int), count - 1)
    hi = np.minimum(lo + 1, count - 1)
    shape = [1] * values.ndim
    shape[axis] = size
    frac = (coords - lo).reshape(shape)
    start = np.take(values, lo, axis=axis)
    return start + (np.take(values, hi, axis=axis) - start) * frac


def _bilinear(data, width, height):
    return _interp_axis(_interp_axis(data, height, axis=1), width, axis=2)


def upsample_maps(coarse, width, height):
    if width < coarse.width or height < coarse.height:
        raise ShapeMismatchError(
            "cannot upsample {0}x{1} maps to {2}x{3}".format(
                coarse.width, coarse.height, width, height))
    return CorrectionMaps(mul=ImageBuffer(_bilinear(coarse.mul.data, width, height)),
                          add=ImageBuffer(_bilinear(coarse.add.data, width, height)))


def _maps_from_params(params):
    return CorrectionMaps(mul=ImageBuffer(params[:1]), add=ImageBuffer(params[1:]))


def _clamp(params):
    params = params.copy()
    np.maximum(params[0], 0.0, out=params[0])
    return params


def fit_correction(low, naka, gt, cfg, weights=None, blur=None):
    """Fit correction maps by accept-if-improving perturbation search.

    Each iteration draws a seeded +/-1 direction over the coarse parameters
    and evaluates the two antithetic candidates ``theta +/- radius * direction``.
    The better candidate replaces ``theta`` only when it lowers the loss, so the
    returned trace never increases. Returns the full-resolution maps and the
    trace, whose first entry is the loss of the identity initialization.
    """
    weights = weights or LossWeights()
    blur = blur or BlurParams()
    require_channels(naka, 3)
    require_same_shape(low, naka)
    require_same_shape(naka, gt)

    if logger.isEnabledFor(logging.DEBUG):
        stack = build_dual_branch(low, naka)
        logger.debug("dual-branch stack %s, mean residual %.6f",
                     stack.combined.shape, float(stack.means[6:9].mean()))

    width, height = naka.width, naka.height
    grid_w, grid_h = min(cfg.grid_w, width), min(cfg.grid_h, height)
    pair = frequency_decompose(naka, blur)

    def evaluate(params):
        maps = upsample_maps(_maps_from_params(params), width, height)
        return compound_loss(compose_correction(pair, maps), gt, maps, weights).total

    theta = np.zeros((4, grid_h, grid_w))
    theta[0] = 1.0
    best = evaluate(theta)
    trace = [best]

    rng = np.random.default_rng(cfg.seed)
    radius = cfg.step_size
    floor = cfg.step_size * MIN_RADIUS_FRACTION
    accepted = 0
    for iteration in range(cfg.iterations):
        direction = rng.choice((-1.0, 1.0), size=theta.shape)
        candidates = (_clamp(theta + radius * direction), _clamp(theta - radius * direction))
        losses = [evaluate(candidate) for candidate in candidates]
        pick = int(np.argmin(losses))
        if losses[pick] < best:
            theta, best = candidates[pick], losses[pick]
            radius = min(cfg.step_size, radius * RADIUS_GROWTH)
            accepted += 1
        else:
            radius = max(floor, radius * RADIUS_SHRINK)
        trace.append(best)
        logger.debug("fit iteration %d loss %.8f radius %.5f", iteration, best, radius)

    logger.info("fit finished: %d/%d candidates accepted, loss %.6f -> %.6f",
                accepted, cfg.iterations, trace[0], best)
    return upsample_maps(_maps_from_params(theta), width, height), trace
