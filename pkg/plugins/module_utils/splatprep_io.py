# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only

"""Readers and writers for point clouds, images, cameras, maps and configs."""

import json
import logging
import math
import os
import struct

import cv2
import numpy as np

from ansible_collections.lowlight.splatprep.plugins.module_utils.chroma import CorrectionMaps
from ansible_collections.lowlight.splatprep.plugins.module_utils.imagecore import ImageBuffer
from ansible_collections.lowlight.splatprep.plugins.module_utils.ppm import CameraSet, PointCloud
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep import (
    merge_overrides,
    validate_pipeline_params,
)
from ansible_collections.lowlight.splatprep.plugins.module_utils.splatprep_errors import (
    CameraFileError,
    ConfigError,
    ImageReadError,
    InputFileError,
    InvalidParameterError,
    MapsFileError,
    OutputWriteError,
    PlyHeaderError,
    PlyLayoutError,
    PlyTruncatedError,
    UnsupportedColorTypeError,
)

logger = logging.getLogger(__name__)

PLY_TYPES = dict(
    char='i1', int8='i1', uchar='u1', uint8='u1',
    short='i2', int16='i2', ushort='u2', uint16='u2',
    int='i4', int32='i4', uint='u4', uint32='u4',
    float='f4', float32='f4', double='f8', float64='f8',
)
PLY_FORMATS = dict(ascii=None, binary_little_endian='<', binary_big_endian='>')
PLY_WRITE_FORMATS = dict(ascii='ascii', binary_le='binary_little_endian')

POSITION_FIELDS = ('x', 'y', 'z')
COLOR_FIELDS = ('red', 'green', 'blue')
NORMAL_FIELDS = ('nx', 'ny', 'nz')

PNG_DEPTHS = {8: (np.uint8, 255), 16: (np.uint16, 65535)}

MAPS_MAGIC = b'NKGSMAPS'
MAPS_HEADER = struct.Struct('<8sII')


def _write_bytes(path, payload):
    try:
        with open(path, 'wb') as handle:
            handle.write(payload)
    except OSError as error:
        raise OutputWriteError(path, error.strerror or str(error))


# PLY

def _parse_ply_header(handle, path):
    if handle.readline().strip() != b'ply':
        raise PlyHeaderError(path, "missing 'ply' magic line")
    fmt = None
    elements = []
    while True:
        raw = handle.readline()
        if not raw:
            raise PlyHeaderError(path, "missing end_header")
        try:
            line = raw.decode('ascii').strip()
        except UnicodeDecodeError:
            raise PlyHeaderError(path, "non-ASCII header line")
        words = line.split()
        if not words or words[0] in ('comment', 'obj_info'):
            continue
        if words[0] == 'end_header':
            break
        if words[0] == 'format':
            if len(words) != 3 or words[1] not in PLY_FORMATS:
                raise PlyHeaderError(path, "bad format line {0!r}".format(line))
            fmt = words[1]
        elif words[0] == 'element':
            if len(words) != 3 or not words[2].isdigit():
                raise PlyHeaderError(path, "bad element line {0!r}".format(line))
            elements.append((words[1], int(words[2]), []))
        elif words[0] == 'property':
            if not elements:
                raise PlyHeaderError(path, "property declared before any element")
            if len(words) == 5 and words[1] == 'list':
                elements[-1][2].append(('list', words[4]))
            elif len(words) == 3 and words[1] in PLY_TYPES:
                elements[-1][2].append((words[1], words[2]))
            else:
                raise PlyHeaderError(path, "bad property line {0!r}".format(line))
        else:
            raise PlyHeaderError(path, "unexpected header line {0!r}".format(line))
    if fmt is None:
        raise PlyHeaderError(path, "missing format line")
    return fmt, elements


def _vertex_layout(elements, path):
    if not elements or elements[0][0] != 'vertex':
        raise PlyLayoutError(path, "the first element must be 'vertex'")
    _, count, properties = elements[0]
    names = [name for _, name in properties]
    if any(kind == 'list' for kind, _ in properties):
        raise PlyLayoutError(path, "list properties on vertices are not supported")
    if len(set(names)) != len(names):
        raise PlyLayoutError(path, "duplicate vertex property names")
    for group in (POSITION_FIELDS, COLOR_FIELDS, NORMAL_FIELDS):
        present = [name in names for name in group]
        if group is POSITION_FIELDS and not all(present):
            raise PlyLayoutError(path, "vertex element needs x, y and z")
        if any(present) and not all(present):
            raise PlyLayoutError(path, "incomplete property group {0}".format(group))
    return count, properties


def _read_binary_vertices(handle, path, fmt, count, properties):
    dtype = np.dtype([(name, PLY_FORMATS[fmt] + PLY_TYPES[kind]) for kind, name in properties])
    payload = handle.read(dtype.itemsize * count)
    if len(payload) < dtype.itemsize * count:
        raise PlyTruncatedError(
            path, "expected {0} vertices, found {1}".format(count, len(payload) // dtype.itemsize))
    return np.frombuffer(payload, dtype=dtype, count=count)


def _read_ascii_vertices(handle, path, count, properties):
    rows = []
    for index in range(count):
        line = handle.readline()
        if not line:
            raise PlyTruncatedError(path, "expected {0} vertices, found {1}".format(count, index))
        tokens = line.decode('ascii', 'replace').split()
        if len(tokens) < len(properties):
            raise PlyTruncatedError(
                path, "vertex {0} has {1} of {2} values".format(index, len(tokens), len(properties)))
        rows.append(tokens[:len(properties)])

    dtype = np.dtype([(name, PLY_TYPES[kind]) for kind, name in properties])
    vertices = np.zeros(count, dtype=dtype)
    for column, (kind, name) in enumerate(properties):
        tokens = [row[column] for row in rows]
        try:
            if PLY_TYPES[kind].startswith('f'):
                vertices[name] = np.array(tokens, dtype=np.float64).astype(PLY_TYPES[kind])
            else:
                values = np.array(tokens, dtype=np.int64)
        except (ValueError, OverflowError):
            raise PlyLayoutError(path, "property {0} holds a non-{1} value".format(name, kind))
        if not PLY_TYPES[kind].startswith('f'):
            limits = np.iinfo(PLY_TYPES[kind])
            outside = np.flatnonzero((values < limits.min) | (values > limits.max))
            if outside.size:
                raise PlyLayoutError(
                    path, "vertex {0} property {1} value {2} is out of range for {3}".format(
                        outside[0], name, values[outside[0]], kind))
            vertices[name] = values.astype(PLY_TYPES[kind])
    return vertices


def _stack(vertices, fields):
    return np.stack([vertices[name].astype(np.float64) for name in fields], axis=1)


def read_ply(path):
    try:
        with open(path, 'rb') as handle:
            fmt, elements = _parse_ply_header(handle, path)
            count, properties = _vertex_layout(elements, path)
            if fmt == 'ascii':
                vertices = _read_ascii_vertices(handle, path, count, properties)
            else:
                vertices = _read_binary_vertices(handle, path, fmt, count, properties)
    except OSError as error:
        raise InputFileError(path, error.strerror or str(error))

    names = vertices.dtype.names
    colors = None
    if COLOR_FIELDS[0] in names:
        colors = _stack(vertices, COLOR_FIELDS)
        if vertices.dtype[COLOR_FIELDS[0]] == np.uint8:
            colors = colors / 255.0
    normals = None
    if NORMAL_FIELDS[0] in names:
        normals = _stack(vertices, NORMAL_FIELDS)
        if not np.any(normals):
            logger.debug("%s: all-zero normals dropped", path)
            normals = None
    return PointCloud(positions=_stack(vertices, POSITION_FIELDS), colors=colors, normals=normals)


def write_ply(cloud, path, fmt='binary_le'):
    if fmt not in PLY_WRITE_FORMATS:
        raise InvalidParameterError('format', 'must be one of {0}'.format(sorted(PLY_WRITE_FORMATS)))
    fields = [(name, '<f4') for name in POSITION_FIELDS]
    if cloud.normals is not None:
        fields += [(name, '<f4') for name in NORMAL_FIELDS]
    if cloud.colors is not None:
        fields += [(name, 'u1') for name in COLOR_FIELDS]

    vertices = np.zeros(len(cloud), dtype=np.dtype(fields))
    for axis, name in enumerate(POSITION_FIELDS):
        vertices[name] = cloud.positions[:, axis]
    if cloud.normals is not None:
        for axis, name in enumerate(NORMAL_FIELDS):
            vertices[name] = cloud.normals[:, axis]
    if cloud.colors is not None:
        quantized = np.clip(np.floor(cloud.colors * 255.0 + 0.5), 0, 255).astype(np.uint8)
        for axis, name in enumerate(COLOR_FIELDS):
            vertices[name] = quantized[:, axis]

    header = ['ply', 'format {0} 1.0'.format(PLY_WRITE_FORMATS[fmt]),
              'element vertex {0}'.format(len(cloud))]
    for name, code in fields:
        header.append('property {0} {1}'.format('float' if code == '<f4' else 'uchar', name))
    header.append('end_header')
    payload = ('\n'.join(header) + '\n').encode('ascii')

    if fmt == 'binary_le':
        payload += vertices.tobytes()
    else:
        lines = []
        for vertex in vertices:
            values = [repr(float(value)) if code == '<f4' else str(int(value))
                      for value, (_, code) in zip(vertex, fields)]
            lines.append(' '.join(values))
        payload += ''.join(line + '\n' for line in lines).encode('ascii')
    _write_bytes(path, payload)


# PNG

def read_png(path):
    try:
        encoded = np.fromfile(path, dtype=np.uint8)
    except OSError as error:
        raise ImageReadError(path, error.strerror or str(error))
    image = cv2.imdecode(encoded, cv2.IMREAD_UNCHANGED) if encoded.size else None
    if image is None:
        raise ImageReadError(path, "not a decodable image")
    if image.dtype == np.uint8:
        maxval = 255.0
    elif image.dtype == np.uint16:
        maxval = 65535.0
    else:
        raise UnsupportedColorTypeError(path, "unsupported sample type {0}".format(image.dtype))

    if image.ndim == 2:
        planes = image[np.newaxis]
    elif image.ndim == 3 and image.shape[2] == 3:
        planes = np.moveaxis(cv2.cvtColor(image, cv2.COLOR_BGR2RGB), -1, 0)
    else:
        raise UnsupportedColorTypeError(
            path, "unsupported color type with {0} channels".format(image.shape[2]))
    return ImageBuffer(planes.astype(np.float64) / maxval)


def write_png(img, path, depth=8):
    if depth not in PNG_DEPTHS:
        raise InvalidParameterError('depth', 'must be 8 or 16, got {0}'.format(depth))
    if img.channels not in (1, 3):
        raise InvalidParameterError('channels', 'PNG output needs 1 or 3 channels')
    if img.data.min() < 0.0 or img.data.max() > 1.0:
        raise InvalidParameterError('image', 'values must lie in [0, 1] to be written')
    dtype, maxval = PNG_DEPTHS[depth]
    samples = np.floor(img.to_hwc() * maxval + 0.5).astype(dtype)
    if img.channels == 3:
        samples = cv2.cvtColor(samples, cv2.COLOR_RGB2BGR)
    ok, encoded = cv2.imencode('.png', samples)
    if not ok:
        raise OutputWriteError(path, "PNG encoding failed")
    _write_bytes(path, encoded.tobytes())


def list_pngs(directory):
    return sorted(os.path.join(directory, name) for name in os.listdir(directory)
                  if name.lower().endswith('.png'))


# Cameras

def read_cameras(path):
    try:
        with open(path) as handle:
            entries = json.load(handle)
    except OSError as error:
        raise CameraFileError(path, error.strerror or str(error))
    except ValueError as error:
        raise CameraFileError(path, "invalid JSON: {0}".format(error))
    if not isinstance(entries, list):
        raise CameraFileError(path, "expected a JSON array of cameras")

    ids = []
    centers = []
    for index, entry in enumerate(entries):
        if not isinstance(entry, dict) or 'id' not in entry or 'center' not in entry:
            raise CameraFileError(path, "entry {0}: expected 'id' and 'center'".format(index))
        camera_id = str(entry['id'])
        center = entry['center']
        if (not isinstance(center, list) or len(center) != 3
                or not all(isinstance(value, (int, float)) for value in center)):
            raise CameraFileError(path, "camera {0!r}: center must be [x, y, z]".format(camera_id))
        if not all(math.isfinite(value) for value in center):
            raise CameraFileError(path, "camera {0!r}: center is not finite".format(camera_id))
        if camera_id in ids:
            raise CameraFileError(path, "duplicate camera id {0!r}".format(camera_id))
        ids.append(camera_id)
        centers.append([float(value) for value in center])
    if not ids:
        raise CameraFileError(path, "no cameras listed")
    return CameraSet(ids=tuple(ids), centers=np.array(centers))


def write_cameras(cameras, path):
    entries = [dict(id=camera_id, center=[float(value) for value in center])
               for camera_id, center in zip(cameras.ids, cameras.centers)]
    write_json(entries, path)


# Correction maps

def write_maps(maps, path):
    header = MAPS_HEADER.pack(MAPS_MAGIC, maps.width, maps.height)
    planes = np.concatenate([maps.mul.data, maps.add.data]).astype('<f4')
    _write_bytes(path, header + planes.tobytes())


def read_maps(path):
    try:
        with open(path, 'rb') as handle:
            payload = handle.read()
    except OSError as error:
        raise MapsFileError(path, error.strerror or str(error))
    if len(payload) < MAPS_HEADER.size:
        raise MapsFileError(path, "file shorter than the maps header")
    magic, width, height = MAPS_HEADER.unpack_from(payload)
    if magic != MAPS_MAGIC:
        raise MapsFileError(path, "bad magic {0!r}".format(magic))
    if width < 1 or height < 1:
        raise MapsFileError(path, "invalid size {0}x{1}".format(width, height))
    expected = MAPS_HEADER.size + 4 * 4 * width * height
    if len(payload) != expected:
        raise MapsFileError(path, "expected {0} bytes, found {1}".format(expected, len(payload)))
    planes = np.frombuffer(payload, dtype='<f4', offset=MAPS_HEADER.size)
    planes = planes.astype(np.float64).reshape(4, height, width)
    try:
        return CorrectionMaps(mul=ImageBuffer(planes[:1]), add=ImageBuffer(planes[1:]))
    except InvalidParameterError as error:
        raise MapsFileError(path, str(error))


def write_maps_preview(maps, prefix, depth=8):
    """PNG previews: mul scaled by 0.5 and add offset by 0.5, both clipped."""
    mul_path = prefix + '_mul.png'
    add_path = prefix + '_add.png'
    write_png(ImageBuffer(np.clip(maps.mul.data * 0.5, 0.0, 1.0)), mul_path, depth)
    write_png(ImageBuffer(np.clip(maps.add.data + 0.5, 0.0, 1.0)), add_path, depth)
    return mul_path, add_path


# JSON documents

def json_number(value):
    """Finite values pass through; inf, -inf and nan become those strings."""
    if math.isfinite(value):
        return value
    if math.isnan(value):
        return 'nan'
    return 'inf' if value > 0 else '-inf'


def dump_json(payload):
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + '\n'


def write_json(payload, path):
    _write_bytes(path, dump_json(payload).encode('utf-8'))


def write_report(report, path):
    write_json(report.to_dict(), path)


def read_config(path, overrides=None):
    """Parse a JSON pipeline config; ``overrides`` (CLI flags) win over the file."""
    params = dict()
    if path:
        try:
            with open(path) as handle:
                params = json.load(handle)
        except OSError as error:
            raise ConfigError("{0}: {1}".format(path, error.strerror or error))
        except ValueError as error:
            raise ConfigError("{0}: invalid JSON: {1}".format(path, error))
        if not isinstance(params, dict):
            raise ConfigError("{0}: expected a JSON object".format(path))
    if overrides:
        params = merge_overrides(params, overrides)
    return validate_pipeline_params(params, source=path or 'flags')
