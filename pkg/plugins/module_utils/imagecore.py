# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only

"""Image container, color conversions, filters and full-reference metrics.

Images are held channel-major, ``data`` having shape ``(channels, height,
width)`` in float64. Every operation returns a new buffer.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_errors import (
    ChannelCountError,
    EmptyInputError,
    InvalidParameterError,
    ShapeMismatchError,
)

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
CB_SCALE = 1.772
CR_SCALE = 1.402

BOUNDARY_MODES = dict(reflect='reflect', replicate='nearest')

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2

LAPLACIAN_KERNEL = np.array([[0.0, 1.0, 0.0],
                             [1.0, -4.0, 1.0],
                             [0.0, 1.0, 0.0]])


@dataclass(frozen=True)
class ImageBuffer:
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[np.newaxis]
        if data.ndim != 3:
            raise ShapeMismatchError(
                "image data must be (channels, height, width), got {0}".format(data.shape))
        if data.shape[1] < 1 or data.shape[2] < 1:
            raise EmptyInputError("image must be at least 1x1")
        if not np.all(np.isfinite(data)):
            raise InvalidParameterError('data', 'image values must be finite')
        data.setflags(write=False)
        object.__setattr__(self, 'data', data)

    @classmethod
    def from_hwc(cls, array):
        array = np.asarray(array, dtype=np.float64)
        if array.ndim == 2:
            return cls(array)
        return cls(np.moveaxis(array, -1, 0))

    @classmethod
    def filled(cls, width, height, channels, value):
        return cls(np.full((channels, height, width), float(value)))

    def to_hwc(self):
        if self.channels == 1:
            return self.data[0].copy()
        return np.moveaxis(self.data, 0, -1).copy()

    @property
    def channels(self):
        return self.data.shape[0]

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def width(self):
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def channel(self, index):
        return ImageBuffer(self.data[index:index + 1])


@dataclass(frozen=True)
class BlurParams:
    sigma: float = 2.0
    radius: int = None
    boundary: str = 'reflect'

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidParameterError('sigma', 'must be > 0, got {0}'.format(self.sigma))
        if self.radius is None:
            object.__setattr__(self, 'radius', max(1, int(math.ceil(3.0 * self.sigma))))
        if self.radius < 1:
            raise InvalidParameterError('radius', 'must be >= 1, got {0}'.format(self.radius))
        if self.boundary not in BOUNDARY_MODES:
            raise InvalidParameterError(
                'boundary', 'must be one of {0}, got {1}'.format(sorted(BOUNDARY_MODES), self.boundary))

    def kernel(self):
        offsets = np.arange(-self.radius, self.radius + 1, dtype=np.float64)
        weights = np.exp(-0.5 * (offsets / self.sigma) ** 2)
        return weights / weights.sum()


def require_channels(img, expected):
    if img.channels != expected:
        raise ChannelCountError(expected, img.channels)


def require_same_shape(first, second):
    if first.shape != second.shape:
        raise ShapeMismatchError("{0} != {1}".format(first.shape, second.shape))


def to_grayscale(img):
    require_channels(img, 3)
    r, g, b = img.data
    wr, wg, wb = LUMA_WEIGHTS
    return ImageBuffer(wr * r + wg * g + wb * b)


def to_ycbcr(img):
    """Full-range BT.601; chroma planes are centered at 0.5."""
    y = to_grayscale(img).data[0]
    r, _, b = img.data
    cb = 0.5 + (b - y) / CB_SCALE
    cr = 0.5 + (r - y) / CR_SCALE
    return ImageBuffer(np.stack([y, cb, cr]))


def from_ycbcr(img):
    require_channels(img, 3)
    y, cb, cr = img.data
    wr, wg, wb = LUMA_WEIGHTS
    r = y + CR_SCALE * (cr - 0.5)
    b = y + CB_SCALE * (cb - 0.5)
    g = (y - wr * r - wb * b) / wg
    return ImageBuffer(np.stack([r, g, b]))


def gaussian_blur(img, params):
    kernel = params.kernel()
    mode = BOUNDARY_MODES[params.boundary]
    out = ndimage.convolve1d(img.data, kernel, axis=1, mode=mode)
    out = ndimage.convolve1d(out, kernel, axis=2, mode=mode)
    return ImageBuffer(out)


def laplacian(img):
    require_channels(img, 1)
    return ImageBuffer(ndimage.convolve(img.data[0], LAPLACIAN_KERNEL, mode='nearest'))


def sobel_magnitude(img):
    require_channels(img, 1)
    plane = img.data[0]
    gx = ndimage.sobel(plane, axis=1, mode='nearest')
    gy = ndimage.sobel(plane, axis=0, mode='nearest')
    return ImageBuffer(np.hypot(gx, gy))


def quantile(img, q):
    require_channels(img, 1)
    if not 0.0 <= q <= 1.0:
        raise InvalidParameterError('q', 'must lie in [0, 1], got {0}'.format(q))
    return float(np.quantile(img.data, q))


def mse(pred, gt):
    require_same_shape(pred, gt)
    return float(np.mean((pred.data - gt.data) ** 2))


def psnr(pred, gt):
    """Peak signal-to-noise ratio in dB for a peak value of 1."""
    err = mse(pred, gt)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / err)


def _ssim_plane(x, y):
    pad = (SSIM_WINDOW - 1) // 2
    truncate = pad / SSIM_SIGMA

    def window_mean(plane):
        return ndimage.gaussian_filter(plane, SSIM_SIGMA, truncate=truncate, mode='reflect')

    mu_x = window_mean(x)
    mu_y = window_mean(y)
    var_x = window_mean(x * x) - mu_x * mu_x
    var_y = window_mean(y * y) - mu_y * mu_y
    cov = window_mean(x * y) - mu_x * mu_y

    numerator = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
    denominator = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2)
    ssim_map = numerator / denominator
    return ssim_map[pad:-pad, pad:-pad]


def ssim(pred, gt):
    """Mean SSIM over the valid window positions (11x11 Gaussian, sigma 1.5)."""
    require_same_shape(pred, gt)
    if pred.height < SSIM_WINDOW or pred.width < SSIM_WINDOW:
        raise ShapeMismatchError(
            "ssim needs at least {0}x{0} pixels, got {1}x{2}".format(
                SSIM_WINDOW, pred.width, pred.height))
    if pred.channels == 3:
        pred, gt = to_grayscale(pred), to_grayscale(gt)
    if np.array_equal(pred.data, gt.data):
        return 1.0
    values = [_ssim_plane(p, g) for p, g in zip(pred.data, gt.data)]
    return float(np.clip(np.mean(values), -1.0, 1.0))
