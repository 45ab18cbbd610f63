# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only

"""Naka-Rushton pre-enhancement, frequency split and dual-branch input stack."""

from dataclasses import dataclass

import numpy as np

from ansible_collections.lowlight.splatprep.plugins.module_utils.imagecore import (
    ImageBuffer,
    gaussian_blur,
    require_channels,
    require_same_shape,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_errors import (
    InvalidParameterError,
)

STANDARDIZE_EPS = 1e-6


@dataclass(frozen=True)
class NakaParams:
    sigma: float = 0.05
    exponent_n: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidParameterError('sigma', 'must be > 0, got {0}'.format(self.sigma))
        if not self.sigma <= 1:
            raise InvalidParameterError('sigma', 'must be <= 1, got {0}'.format(self.sigma))
        if not self.exponent_n > 0:
            raise InvalidParameterError(
                'exponent', 'must be > 0, got {0}'.format(self.exponent_n))


@dataclass(frozen=True)
class FrequencyPair:
    low_freq: ImageBuffer
    high_freq: ImageBuffer


@dataclass(frozen=True)
class DualBranchInput:
    raw: ImageBuffer
    normalized: ImageBuffer
    combined: ImageBuffer
    means: np.ndarray
    stds: np.ndarray

    def restore(self):
        """Undo the standardization of the normalized branch."""
        scales = np.where(self.stds > 0, self.stds + STANDARDIZE_EPS, 0.0)
        restored = self.normalized.data * scales[:, None, None] + self.means[:, None, None]
        return ImageBuffer(restored)


def naka_rushton_response(img, params, r0=0.0, r_max=1.0):
    """R(I) = r0 + r_max * I^n / (I^n + sigma^n), applied per channel."""
    data = img.data
    if data.min() < 0.0 or data.max() > 1.0:
        raise InvalidParameterError('image', 'Naka-Rushton input must lie in [0, 1]')
    stimulus = np.power(data, params.exponent_n)
    half = params.sigma ** params.exponent_n
    response = stimulus / (stimulus + half)
    if r0 == 0.0 and r_max == 1.0:
        return ImageBuffer(response)
    return ImageBuffer(r0 + r_max * response)


def naka_transform(img, params):
    return naka_rushton_response(img, params)


def residual(low, naka):
    require_same_shape(low, naka)
    return ImageBuffer(naka.data - low.data)


def _standardize(data):
    """Per-channel (x - mean) / (std + eps); channels with zero variance map to zero."""
    means = data.mean(axis=(1, 2))
    stds = data.std(axis=(1, 2))
    out = np.zeros_like(data)
    for index, (mean, std) in enumerate(zip(means, stds)):
        if std > 0:
            out[index] = (data[index] - mean) / (std + STANDARDIZE_EPS)
    return out, means, stds


def build_dual_branch(low, naka):
    require_channels(low, 3)
    require_same_shape(low, naka)
    delta = residual(low, naka)
    raw = np.concatenate([low.data, naka.data, delta.data])
    normalized, means, stds = _standardize(raw)
    return DualBranchInput(
        raw=ImageBuffer(raw),
        normalized=ImageBuffer(normalized),
        combined=ImageBuffer(np.concatenate([raw, normalized])),
        means=means,
        stds=stds,
    )


def frequency_decompose(naka, blur):
    low_freq = gaussian_blur(naka, blur)
    return FrequencyPair(low_freq=low_freq,
                         high_freq=ImageBuffer(naka.data - low_freq.data))
