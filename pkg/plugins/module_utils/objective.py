# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only

"""Supervision objective for the correction maps.

The total is ``base + w_gray * gray + w_bright * bright`` where ``base`` is the
weighted sum of the rgb, chroma, ssim, edge, feat, reg and mse terms. The
perceptual (feat) term needs a pretrained network and is always reported as
zero with ``feat_excluded`` set.
"""

from dataclasses import dataclass, field

import numpy as np

from ansible_collections.lowlight.splatprep.plugins.module_utils.imagecore import (
    ImageBuffer,
    laplacian,
    quantile,
    require_channels,
    require_same_shape,
    sobel_magnitude,
    ssim,
    to_grayscale,
    to_ycbcr,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_errors import (
    InvalidParameterError,
)

GRAY_MASK_EPS = 1e-8
BRIGHT_QUANTILE = 0.85
CHROMA_LUMA_WEIGHT = 0.5


@dataclass(frozen=True)
class LossWeights:
    w_rgb: float = 1.0
    w_chroma: float = 0.5
    w_ssim: float = 0.2
    w_edge: float = 0.1
    w_feat: float = 0.0
    w_reg: float = 0.01
    w_mse: float = 0.0
    w_gray: float = 1.0
    w_bright: float = 0.8
    charbonnier_eps: float = 1e-3
    mul_range: tuple = (0.2, 5.0)

    def __post_init__(self):
        for name in ('w_rgb', 'w_chroma', 'w_ssim', 'w_edge', 'w_reg',
                     'w_mse', 'w_gray', 'w_bright'):
            value = getattr(self, name)
            if not value >= 0:
                raise InvalidParameterError(name, 'must be >= 0, got {0}'.format(value))
        if self.w_feat != 0.0:
            raise InvalidParameterError('w_feat', 'the perceptual term is not available')
        if not self.charbonnier_eps > 0:
            raise InvalidParameterError(
                'charbonnier_eps', 'must be > 0, got {0}'.format(self.charbonnier_eps))
        lo, hi = self.mul_range
        if lo > hi:
            raise InvalidParameterError(
                'mul_range', 'lower bound {0} exceeds upper bound {1}'.format(lo, hi))
        object.__setattr__(self, 'mul_range', (float(lo), float(hi)))


@dataclass(frozen=True)
class LossReport:
    rgb: float
    chroma: float
    ssim: float
    edge: float
    reg: float
    mse: float
    gray: float
    bright: float
    total: float
    feat: float = 0.0
    feat_excluded: bool = field(default=True)

    def to_dict(self):
        return dict(
            rgb=self.rgb,
            chroma=self.chroma,
            ssim_loss=self.ssim,
            edge=self.edge,
            reg=self.reg,
            mse=self.mse,
            gray=self.gray,
            bright=self.bright,
            total=self.total,
        )


def _difference(pred, gt):
    require_same_shape(pred, gt)
    return pred.data - gt.data


def loss_rgb(pred, gt, eps=1e-3):
    """Charbonnier penalty (zero at d = 0) plus an L1 term."""
    d = _difference(pred, gt)
    charbonnier = np.sqrt(d * d + eps * eps) - eps
    return float(np.mean(charbonnier) + np.mean(np.abs(d)))


def loss_chroma(pred, gt):
    require_channels(pred, 3)
    require_same_shape(pred, gt)
    pred_ycc = to_ycbcr(pred).data
    gt_ycc = to_ycbcr(gt).data
    err = np.abs(pred_ycc - gt_ycc).mean(axis=(1, 2))
    return float(err[1] + err[2] + CHROMA_LUMA_WEIGHT * err[0])


def loss_ssim(pred, gt):
    return 1.0 - ssim(pred, gt)


def _gray(img):
    if img.channels == 3:
        return to_grayscale(img)
    return img


def loss_edge(pred, gt):
    require_same_shape(pred, gt)
    pred_edges = sobel_magnitude(_gray(pred)).data
    gt_edges = sobel_magnitude(_gray(gt)).data
    return float(np.mean(np.abs(pred_edges - gt_edges)))


def loss_mse(pred, gt):
    d = _difference(pred, gt)
    return float(np.mean(d * d))


def total_variation(plane_stack):
    """Mean absolute forward difference, pooled over x and y."""
    dx = np.abs(np.diff(plane_stack, axis=-1)).ravel()
    dy = np.abs(np.diff(plane_stack, axis=-2)).ravel()
    diffs = np.concatenate([dx, dy])
    if diffs.size == 0:
        return 0.0
    return float(diffs.mean())


def loss_reg(maps, mul_range=(0.2, 5.0)):
    lo, hi = mul_range
    if lo > hi:
        raise InvalidParameterError(
            'mul_range', 'lower bound {0} exceeds upper bound {1}'.format(lo, hi))
    mul = maps.mul.data
    below = np.maximum(0.0, lo - mul)
    above = np.maximum(0.0, mul - hi)
    range_penalty = float(np.mean(below + above))
    return range_penalty + total_variation(mul) + total_variation(maps.add.data)


def gray_edge_mask(gt):
    response = np.abs(laplacian(to_grayscale(gt)).data)
    return ImageBuffer(np.sqrt(response / (response.max() + GRAY_MASK_EPS)))


def _masked_error(mask, pred, gt):
    err = np.abs(_difference(pred, gt))
    return float(np.mean(mask.data * err))


def loss_gray(pred, gt):
    require_same_shape(pred, gt)
    return _masked_error(gray_edge_mask(gt), pred, gt)


def bright_mask(pred):
    gray = to_grayscale(pred)
    tau = quantile(gray, BRIGHT_QUANTILE)
    return ImageBuffer((gray.data >= tau).astype(np.float64)), tau


def loss_bright(pred, gt):
    require_same_shape(pred, gt)
    mask, _ = bright_mask(pred)
    return _masked_error(mask, pred, gt)


def compound_loss(pred, gt, maps, weights):
    require_same_shape(pred, gt)
    terms = dict(
        rgb=loss_rgb(pred, gt, weights.charbonnier_eps),
        chroma=loss_chroma(pred, gt),
        ssim=loss_ssim(pred, gt),
        edge=loss_edge(pred, gt),
        reg=loss_reg(maps, weights.mul_range),
        mse=loss_mse(pred, gt),
        gray=loss_gray(pred, gt),
        bright=loss_bright(pred, gt),
    )
    base = (weights.w_rgb * terms['rgb']
            + weights.w_chroma * terms['chroma']
            + weights.w_ssim * terms['ssim']
            + weights.w_edge * terms['edge']
            + weights.w_feat * 0.0
            + weights.w_reg * terms['reg']
            + weights.w_mse * terms['mse'])
    total = base + weights.w_gray * terms['gray'] + weights.w_bright * terms['bright']
    return LossReport(total=total, **terms)
