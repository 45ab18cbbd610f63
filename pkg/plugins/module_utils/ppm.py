# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only

"""Point preprocessing: alignment, voxel pooling and progressive pruning.

``run_ppm`` chains the stages in a fixed order::

    estimate_alignment -> apply_transform -> voxel_pool -> progressive_prune

Pruning keeps each point with probability ``min(1, d_min / (tau + eps))`` and
grows the threshold after every pass by ``exp(beta * M_t / M_0)``, where
``M_0`` is the pooled candidate count and ``M_t`` the survivors of pass t.
A pass that would drop below ``ceil(min_keep_fraction * M_0)`` survivors is
undone and pruning stops.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.spatial import cKDTree

from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_errors import (
    AlignmentInputError,
    DegenerateAlignmentError,
    DegenerateSceneError,
    EmptyInputError,
    InvalidParameterError,
    ShapeMismatchError,
)

logger = logging.getLogger(__name__)

ALIGNMENT_MODES = ['sim3', 'rigid', 'none']

NORMAL_TOLERANCE = 1e-4
ROTATION_TOLERANCE = 1e-9
# relative singular-value cutoff below which camera centers count as collinear
RANK_TOLERANCE = 1e-10
# absorbs representation error in min_keep_fraction * M_0 (0.3 * 10 != 3.0)
FLOOR_SLACK = 1e-9

UINT64_MASK = (1 << 64) - 1


def _as_points(values, name):
    array = np.array(values, dtype=np.float64)
    if array.size == 0:
        array = array.reshape(0, 3)
    if array.ndim != 2 or array.shape[1] != 3:
        raise ShapeMismatchError("{0} must be Nx3, got {1}".format(name, array.shape))
    return array


@dataclass(frozen=True)
class PointCloud:
    positions: np.ndarray
    colors: Optional[np.ndarray] = None
    normals: Optional[np.ndarray] = None

    def __post_init__(self):
        positions = _as_points(self.positions, 'positions')
        if not np.all(np.isfinite(positions)):
            raise InvalidParameterError('positions', 'must be finite')
        object.__setattr__(self, 'positions', positions)
        count = len(positions)

        if self.colors is not None:
            colors = _as_points(self.colors, 'colors')
            if len(colors) != count:
                raise ShapeMismatchError("{0} colors for {1} points".format(len(colors), count))
            if colors.size and (colors.min() < 0.0 or colors.max() > 1.0):
                raise InvalidParameterError('colors', 'must lie in [0, 1]')
            object.__setattr__(self, 'colors', colors)

        if self.normals is not None:
            normals = _as_points(self.normals, 'normals')
            if len(normals) != count:
                raise ShapeMismatchError("{0} normals for {1} points".format(len(normals), count))
            lengths = np.linalg.norm(normals, axis=1)
            if np.any(np.abs(lengths - 1.0) > NORMAL_TOLERANCE):
                raise InvalidParameterError('normals', 'must be unit length')
            object.__setattr__(self, 'normals', normals)

    def __len__(self):
        return len(self.positions)

    def subset(self, indices):
        return PointCloud(
            positions=self.positions[indices],
            colors=None if self.colors is None else self.colors[indices],
            normals=None if self.normals is None else self.normals[indices],
        )


@dataclass(frozen=True)
class CameraSet:
    ids: tuple
    centers: np.ndarray

    def __post_init__(self):
        ids = tuple(str(camera_id) for camera_id in self.ids)
        centers = _as_points(self.centers, 'centers')
        if len(ids) < 1:
            raise EmptyInputError("camera set is empty")
        if len(ids) != len(centers):
            raise ShapeMismatchError("{0} ids for {1} centers".format(len(ids), len(centers)))
        if len(set(ids)) != len(ids):
            duplicates = sorted({camera_id for camera_id in ids if ids.count(camera_id) > 1})
            raise InvalidParameterError('ids', 'duplicate camera id(s) {0}'.format(duplicates))
        if not np.all(np.isfinite(centers)):
            raise InvalidParameterError('centers', 'must be finite')
        object.__setattr__(self, 'ids', ids)
        object.__setattr__(self, 'centers', centers)

    def centers_for(self, ids):
        lookup = dict(zip(self.ids, self.centers))
        return np.array([lookup[camera_id] for camera_id in ids])


@dataclass(frozen=True)
class Transform:
    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=np.float64)
        translation = np.array(self.translation, dtype=np.float64).reshape(3)
        if rotation.shape != (3, 3):
            raise ShapeMismatchError("rotation must be 3x3, got {0}".format(rotation.shape))
        if not self.scale > 0:
            raise InvalidParameterError('scale', 'must be > 0, got {0}'.format(self.scale))
        if not np.allclose(rotation.T @ rotation, np.eye(3), rtol=0.0, atol=ROTATION_TOLERANCE):
            raise InvalidParameterError('rotation', 'must be orthonormal')
        if abs(np.linalg.det(rotation) - 1.0) > ROTATION_TOLERANCE:
            raise InvalidParameterError('rotation', 'determinant must be +1')
        object.__setattr__(self, 'scale', float(self.scale))
        object.__setattr__(self, 'rotation', rotation)
        object.__setattr__(self, 'translation', translation)

    @classmethod
    def identity(cls):
        return cls(1.0, np.eye(3), np.zeros(3))

    def is_identity(self):
        return (self.scale == 1.0 and np.array_equal(self.rotation, np.eye(3))
                and not np.any(self.translation))

    def apply_points(self, points):
        return self.scale * (np.asarray(points) @ self.rotation.T) + self.translation

    def as_matrix(self):
        matrix = np.eye(4)
        matrix[:3, :3] = self.scale * self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def inverse(self):
        rotation = self.rotation.T
        scale = 1.0 / self.scale
        return Transform(scale, rotation, -scale * (rotation @ self.translation))

    def compose(self, other):
        """Transform applying ``other`` first, then ``self``."""
        return Transform(self.scale * other.scale,
                         self.rotation @ other.rotation,
                         self.apply_points(other.translation))

    def to_dict(self):
        return dict(scale=self.scale,
                    rotation=self.rotation.tolist(),
                    translation=self.translation.tolist())


@dataclass(frozen=True)
class PruneConfig:
    tau0: float = 0.005
    beta: float = 0.01
    epsilon: float = 1e-8
    iterations: int = 6
    min_keep_fraction: float = 0.3
    seed: int = 0
    voxel_size: float = 0.01
    recompute_nn: bool = True

    def __post_init__(self):
        if not self.tau0 > 0:
            raise InvalidParameterError('tau0', 'must be > 0, got {0}'.format(self.tau0))
        if not self.epsilon >= 0:
            raise InvalidParameterError('epsilon', 'must be >= 0, got {0}'.format(self.epsilon))
        if self.iterations < 0:
            raise InvalidParameterError(
                'iterations', 'must be >= 0, got {0}'.format(self.iterations))
        if not 0.0 < self.min_keep_fraction <= 1.0:
            raise InvalidParameterError(
                'min_keep_fraction', 'must lie in (0, 1], got {0}'.format(self.min_keep_fraction))
        if not 0 <= self.seed <= UINT64_MASK:
            raise InvalidParameterError('seed', 'must be an unsigned 64-bit integer')
        if not self.voxel_size > 0:
            raise InvalidParameterError(
                'voxel_size', 'must be > 0, got {0}'.format(self.voxel_size))


@dataclass
class PruneRecord:
    tau_applied: float
    points_before: int
    points_after: int
    rolled_back: bool = False
    expected_after: float = 0.0
    variance: float = 0.0

    def to_dict(self):
        return dict(tau_applied=self.tau_applied,
                    points_before=self.points_before,
                    points_after=self.points_after,
                    rolled_back=self.rolled_back)


@dataclass
class PruneReport:
    initial_count: int
    final_count: int
    iterations: List[PruneRecord] = field(default_factory=list)
    alignment: Optional[Transform] = None

    @property
    def rolled_back(self):
        return any(record.rolled_back for record in self.iterations)

    def to_dict(self):
        return dict(initial_count=self.initial_count,
                    final_count=self.final_count,
                    iterations=[record.to_dict() for record in self.iterations])


def alignment_rms(src_points, dst_points, transform):
    residual = np.asarray(dst_points) - transform.apply_points(src_points)
    return float(np.sqrt(np.mean(np.sum(residual ** 2, axis=1))))


def _matched_centers(src, dst):
    if set(src.ids) != set(dst.ids):
        missing = sorted(set(src.ids) ^ set(dst.ids))
        raise AlignmentInputError("camera ids differ between sets: {0}".format(missing))
    ids = sorted(src.ids)
    return src.centers_for(ids), dst.centers_for(ids)


def estimate_alignment(src, dst, mode='sim3'):
    """Least-squares similarity (Umeyama) mapping src centers onto dst centers."""
    if mode not in ALIGNMENT_MODES:
        raise InvalidParameterError('mode', 'must be one of {0}, got {1}'.format(ALIGNMENT_MODES, mode))
    if mode == 'none':
        return Transform.identity()

    src_points, dst_points = _matched_centers(src, dst)
    count = len(src_points)
    if count < 3:
        raise DegenerateAlignmentError(
            "{0} alignment needs at least 3 camera pairs, got {1}".format(mode, count))

    src_mean = src_points.mean(axis=0)
    dst_mean = dst_points.mean(axis=0)
    src_demean = src_points - src_mean
    dst_demean = dst_points - dst_mean

    for name, demeaned in (('source', src_demean), ('target', dst_demean)):
        spread = np.linalg.svd(demeaned, compute_uv=False)
        if spread[0] == 0.0 or spread[1] <= RANK_TOLERANCE * spread[0]:
            raise DegenerateAlignmentError(
                "{0} camera centers are coincident or collinear".format(name))

    covariance = dst_demean.T @ src_demean / count
    u, singular, vt = np.linalg.svd(covariance)
    signs = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        signs[2] = -1.0
    rotation = u @ np.diag(signs) @ vt

    if mode == 'sim3':
        src_variance = src_demean.var(axis=0).sum()
        scale = float(singular @ signs / src_variance)
    else:
        scale = 1.0

    translation = dst_mean - scale * (rotation @ src_mean)
    transform = Transform(scale, rotation, translation)
    logger.info("%s alignment from %d cameras: scale %.9g, rms %.3g",
                mode, count, scale, alignment_rms(src_points, dst_points, transform))
    return transform


def apply_transform(cloud, transform):
    if transform.is_identity():
        return cloud
    normals = None
    if cloud.normals is not None:
        normals = cloud.normals @ transform.rotation.T
        normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    return PointCloud(positions=transform.apply_points(cloud.positions),
                      colors=cloud.colors, normals=normals)


def voxel_pool(cloud, voxel_size):
    """One point per occupied voxel, at the attribute means of its members.

    Output is ordered by ascending lexicographic voxel index.
    """
    if not voxel_size > 0:
        raise InvalidParameterError('voxel_size', 'must be > 0, got {0}'.format(voxel_size))
    if len(cloud) == 0:
        return cloud

    keys = np.floor(cloud.positions / voxel_size).astype(np.int64)
    voxels, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)

    def voxel_mean(values):
        sums = np.zeros((len(voxels), values.shape[1]))
        np.add.at(sums, inverse, values)
        return sums / counts[:, None]

    colors = None
    if cloud.colors is not None:
        colors = np.clip(voxel_mean(cloud.colors), 0.0, 1.0)

    normals = None
    if cloud.normals is not None:
        normals = voxel_mean(cloud.normals)
        lengths = np.linalg.norm(normals, axis=1)
        _, first_member = np.unique(inverse, return_index=True)
        cancelled = lengths < NORMAL_TOLERANCE
        normals[cancelled] = cloud.normals[first_member[cancelled]]
        lengths[cancelled] = 1.0
        normals = normals / lengths[:, None]

    pooled = PointCloud(positions=voxel_mean(cloud.positions), colors=colors, normals=normals)
    logger.info("voxel pooling at %g: %d -> %d points", voxel_size, len(cloud), len(pooled))
    return pooled


def nearest_neighbor_distances(cloud, workers=1):
    """Exact Euclidean distance from every point to its nearest other point.

    The KD-tree only nominates candidates; distances are recomputed from the
    coordinates so the result matches an all-pairs evaluation exactly.
    """
    count = len(cloud)
    if count < 2:
        raise EmptyInputError("nearest neighbors need at least 2 points, got {0}".format(count))
    positions = cloud.positions
    tree = cKDTree(positions)
    _, candidates = tree.query(positions, k=min(3, count), workers=workers)
    offsets = positions[candidates] - positions[:, None, :]
    distances = np.sqrt((offsets ** 2).sum(axis=-1))
    distances[candidates == np.arange(count)[:, None]] = np.inf
    return distances.min(axis=1)


def _check_keep_params(tau, epsilon):
    if not tau > 0:
        raise InvalidParameterError('tau', 'must be > 0, got {0}'.format(tau))
    if not epsilon >= 0:
        raise InvalidParameterError('epsilon', 'must be >= 0, got {0}'.format(epsilon))


def keep_probability(d_min, tau, epsilon):
    _check_keep_params(tau, epsilon)
    if not d_min >= 0:
        raise InvalidParameterError('d_min', 'must be >= 0, got {0}'.format(d_min))
    return min(1.0, d_min / (tau + epsilon))


def keep_probabilities(d_min, tau, epsilon):
    _check_keep_params(tau, epsilon)
    return np.minimum(1.0, np.asarray(d_min) / (tau + epsilon))


def threshold_update(tau, beta, m_t, m_0):
    if m_0 < 1:
        raise InvalidParameterError('m_0', 'must be >= 1, got {0}'.format(m_0))
    if not 0 <= m_t <= m_0:
        raise InvalidParameterError('m_t', 'must lie in [0, {0}], got {1}'.format(m_0, m_t))
    return tau * math.exp(beta * m_t / m_0)


def keep_draws(seed, iteration, count):
    """Uniform draws for stable point indices 0..count-1 of one pruning pass.

    Philox is counter-based: draw k depends only on (seed, iteration, k).
    """
    key = ((seed & UINT64_MASK) << 64) | (iteration & UINT64_MASK)
    return np.random.Generator(np.random.Philox(key=key)).random(count)


def retention_floor(min_keep_fraction, initial_count):
    return int(math.ceil(min_keep_fraction * initial_count - FLOOR_SLACK))


def progressive_prune(cloud, cfg, workers=1):
    initial_count = len(cloud)
    report = PruneReport(initial_count=initial_count, final_count=initial_count)
    if initial_count < 2:
        return cloud, report

    floor = retention_floor(cfg.min_keep_fraction, initial_count)
    survivors = np.arange(initial_count)
    initial_distances = None
    if not cfg.recompute_nn:
        initial_distances = nearest_neighbor_distances(cloud, workers)

    tau = cfg.tau0
    for iteration in range(cfg.iterations):
        before = len(survivors)
        if before < 2:
            break
        if cfg.recompute_nn:
            distances = nearest_neighbor_distances(cloud.subset(survivors), workers)
        else:
            distances = initial_distances[survivors]
        probabilities = keep_probabilities(distances, tau, cfg.epsilon)
        draws = keep_draws(cfg.seed, iteration, initial_count)[survivors]
        keep = draws < probabilities
        after = int(keep.sum())
        record = PruneRecord(tau_applied=tau,
                             points_before=before,
                             points_after=after,
                             expected_after=float(probabilities.sum()),
                             variance=float((probabilities * (1.0 - probabilities)).sum()))
        report.iterations.append(record)

        if after < floor:
            record.points_after = before
            record.rolled_back = True
            logger.info("pruning pass %d would keep %d < %d points; rolled back",
                        iteration, after, floor)
            break

        survivors = survivors[keep]
        logger.debug("pruning pass %d at tau %.6g: %d -> %d points",
                     iteration, tau, before, after)
        tau = threshold_update(tau, cfg.beta, after, initial_count)

    report.final_count = len(survivors)
    return cloud.subset(survivors), report


def normalize_scene(cloud):
    """Center the cloud and scale its farthest point to distance 1."""
    if len(cloud) < 1:
        raise EmptyInputError("cannot normalize an empty cloud")
    centroid = cloud.positions.mean(axis=0)
    radius = float(np.linalg.norm(cloud.positions - centroid, axis=1).max())
    if radius == 0.0:
        raise DegenerateSceneError("all points coincide; scene scale is zero")
    scale = 1.0 / radius
    transform = Transform(scale, np.eye(3), -scale * centroid)
    return apply_transform(cloud, transform), transform


def run_ppm(cloud, src_cams, dst_cams, mode, cfg, workers=1):
    transform = Transform.identity()
    if mode != 'none':
        transform = estimate_alignment(src_cams, dst_cams, mode)
    aligned = apply_transform(cloud, transform)
    pooled = voxel_pool(aligned, cfg.voxel_size)
    pruned, report = progressive_prune(pooled, cfg, workers)
    report.alignment = transform
    logger.info("point preprocessing: %d input, %d pooled, %d kept",
                len(cloud), report.initial_count, report.final_count)
    return pruned, report
