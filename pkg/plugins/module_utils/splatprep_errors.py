# Copyright (c) 2026 splatprep contributors
# SPDX-License-Identifier: BSD-2-Clause OR GPL-3.0-only


class SplatprepError(Exception):
    def __init__(self, msg):
        Exception.__init__(self, msg)


class SplatprepInputError(SplatprepError):
    """Bad flags, parameters, shapes or input files (CLI exit 2)."""


class SplatprepOutputError(SplatprepError):
    """Output could not be written (CLI exit 1)."""


class InvalidParameterError(SplatprepInputError):
    def __init__(self, field, msg):
        self.field = field
        SplatprepInputError.__init__(self, "{0}: {1}".format(field, msg))


class ShapeMismatchError(SplatprepInputError):
    def __init__(self, msg):
        SplatprepInputError.__init__(self, " ShapeMismatchError [" + msg + "]")


class ChannelCountError(SplatprepInputError):
    def __init__(self, expected, found):
        SplatprepInputError.__init__(
            self, "expected {0} channel(s), found {1}".format(expected, found))


class EmptyInputError(SplatprepInputError):
    def __init__(self, msg):
        SplatprepInputError.__init__(self, msg)


class AlignmentInputError(SplatprepInputError):
    def __init__(self, msg):
        SplatprepInputError.__init__(self, msg)


class DegenerateAlignmentError(SplatprepError):
    """Camera centers do not determine a transform (CLI exit 3)."""


class DegenerateSceneError(SplatprepInputError):
    def __init__(self, msg):
        SplatprepInputError.__init__(self, msg)


class ConfigError(SplatprepInputError):
    def __init__(self, msg):
        SplatprepInputError.__init__(self, msg)


class PlyHeaderError(SplatprepInputError):
    def __init__(self, path, msg):
        SplatprepInputError.__init__(
            self, "{0}: malformed PLY header: {1}".format(path, msg))


class PlyLayoutError(SplatprepInputError):
    def __init__(self, path, msg):
        SplatprepInputError.__init__(
            self, "{0}: unsupported PLY layout: {1}".format(path, msg))


class PlyTruncatedError(SplatprepInputError):
    def __init__(self, path, msg):
        SplatprepInputError.__init__(
            self, "{0}: truncated PLY body: {1}".format(path, msg))


class InputFileError(SplatprepInputError):
    def __init__(self, path, msg):
        SplatprepInputError.__init__(self, "{0}: {1}".format(path, msg))


class ImageReadError(InputFileError):
    pass


class UnsupportedColorTypeError(ImageReadError):
    pass


class CameraFileError(SplatprepInputError):
    def __init__(self, path, msg):
        SplatprepInputError.__init__(self, "{0}: {1}".format(path, msg))


class MapsFileError(SplatprepInputError):
    def __init__(self, path, msg):
        SplatprepInputError.__init__(self, "{0}: {1}".format(path, msg))


class OutputWriteError(SplatprepOutputError):
    def __init__(self, path, msg):
        SplatprepOutputError.__init__(
            self, "failed to write {0}: {1}".format(path, msg))
