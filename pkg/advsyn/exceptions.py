"""Custom exceptions and errors"""

from difflib import get_close_matches


class AdvsynException(Exception):
    """Base exception for advsyn errors"""


class ShapeError(AdvsynException, ValueError):
    """Raised when an operation receives tensors with incompatible shapes

    Attributes:
        op (str): Name of the operation rejecting its inputs
        detail (str): Description naming the offending dimension
    """

    def __init__(self, op, detail):
        self.op = op
        self.detail = detail

        super(ShapeError, self).__init__('{}: {}'.format(self.op, self.detail))


class GradientError(AdvsynException, RuntimeError):
    """Raised when a backward pass cannot be performed"""


class DivergenceError(AdvsynException, FloatingPointError):
    """Raised when a loss or gradient stops being finite

    Attributes:
        where (str): Sub-network, loss or parameter name that produced the non-finite value
        epoch (int): Epoch index at failure, or None
        step (int): Global step at failure, or None
    """

    def __init__(self, where, epoch=None, step=None, value=None):
        self.where = where
        self.epoch = epoch
        self.step = step
        self.value = value

        message = 'Non-finite value in {}'.format(self.where)
        if self.value is not None:
            message += ' ({!r})'.format(self.value)
        if self.epoch is not None:
            message += ' at epoch {}'.format(self.epoch)
        if self.step is not None:
            message += ' at step {}'.format(self.step)

        super(DivergenceError, self).__init__(message)


class UnknownParameter(AdvsynException, KeyError):
    """Raised anytime access is attempted to a parameter or config key that does not exist

    Attributes:
        owner (object): ParamStore or config rejecting the key
        name (str): Name that was requested
        similar_names (list(str)): Known names that are potentially similar to name
    """

    def __init__(self, owner, name, name_pool):
        self.owner = owner
        self.name = name
        self.similar_names = get_close_matches(self.name, list(name_pool), 3)

        message = "{!r} has no parameter '{}'".format(self.owner, self.name)

        if self.similar_names:
            message += '. Similar names: ' + ', '.join([repr(n) for n in self.similar_names])

        super(UnknownParameter, self).__init__(message)

    def __str__(self):
        # KeyError would otherwise repr() the message
        return self.args[0]


class ConfigValidationError(AdvsynException, ValueError):
    """Raised when a configuration field is out of range

    Attributes:
        field (str): Dotted name of the offending field
        value (object): Rejected value
        reason (str): Why the value was rejected
    """

    def __init__(self, field, value, reason):
        self.field = field
        self.value = value
        self.reason = reason

        super(ConfigValidationError, self).__init__(
            "Invalid value {!r} for '{}'. Reason: {}".format(self.value, self.field, self.reason)
        )


class DataError(AdvsynException, IOError):
    """Raised when image data cannot be read, written or is inconsistent"""


class ImageFormatError(DataError):
    """Raised when an image file is not a valid binary PGM"""

    def __init__(self, path, reason):
        self.path = path
        self.reason = reason

        super(ImageFormatError, self).__init__('{}: {}'.format(self.path, self.reason))


class UnsupportedImageDepth(ImageFormatError):
    """Raised when a PGM declares a maxval other than 255"""

    def __init__(self, path, maxval):
        self.maxval = maxval

        super(UnsupportedImageDepth, self).__init__(
            path,
            'unsupported depth, maxval {} (only 8-bit maxval 255 is supported)'.format(maxval)
        )


class CheckpointError(AdvsynException, ValueError):
    """Raised when a checkpoint file cannot be decoded"""


class ChecksumMismatch(CheckpointError):
    """Raised when a checkpoint trailing checksum does not match its content

    Attributes:
        expected (int): Checksum stored in the file
        actual (int): Checksum computed over the preceding bytes
    """

    def __init__(self, source, expected, actual):
        self.source = source
        self.expected = expected
        self.actual = actual

        super(ChecksumMismatch, self).__init__(
            '{}: checksum mismatch, stored {:016x} computed {:016x}'.format(self.source, self.expected, self.actual)
        )


class UnsupportedCheckpointVersion(CheckpointError):
    """Raised when loading a checkpoint written with an unknown format version

    Attributes:
        version (int): Version found in the file
        min_version (int): Oldest readable version
        max_version (int): Newest readable version
    """

    def __init__(self, source, version, min_version, max_version):
        self.source = source
        self.version = version
        self.min_version = min_version
        self.max_version = max_version

        super(UnsupportedCheckpointVersion, self).__init__(self._get_message())

    def _get_range_string(self):
        if self.min_version == self.max_version:
            return '== {}'.format(self.min_version)
        return '>= {}, <= {}'.format(self.min_version, self.max_version)

    def _get_message(self):
        return '{}: checkpoint format version {}, must be {}'.format(
            self.source,
            self.version,
            self._get_range_string()
        )
