"""Binary 8-bit PGM (P5) codec

Only the canonical 8-bit form is supported: magic ``P5``, width, height and maxval 255
separated by whitespace (``#`` comments allowed between header tokens), one whitespace byte,
then ``width * height`` raster bytes in row-major order. :func:`encode_pgm` always writes the
header as ``P5\\n<w> <h>\\n255\\n`` so files it produces round-trip byte for byte.
"""

import os

import numpy as np

from advsyn.exceptions import DataError, ImageFormatError, UnsupportedImageDepth

MAGIC = b'P5'
MAXVAL = 255
_WHITESPACE = b' \t\n\r\x0b\x0c'


def _read_token(raw, position, source):
    """Return (token, position after token), skipping whitespace and comments"""
    length = len(raw)
    while position < length:
        byte = raw[position:position + 1]
        if byte in _WHITESPACE and byte:
            position += 1
        elif byte == b'#':
            end = raw.find(b'\n', position)
            position = length if end < 0 else end + 1
        else:
            break

    start = position
    while position < length and raw[position:position + 1] not in _WHITESPACE:
        position += 1

    if start == position:
        raise ImageFormatError(source, 'truncated header')
    return raw[start:position], position


def _header_int(token, label, source):
    if not token.isdigit():
        raise ImageFormatError(source, 'malformed header, {} is {!r}'.format(label, token))
    return int(token)


def decode_pgm(raw, source='<bytes>'):
    """Decode P5 bytes into an (H, W) uint8 matrix

    Raises:
        ImageFormatError: Wrong magic, malformed or truncated header, short raster
        UnsupportedImageDepth: maxval other than 255
    """
    if raw[:2] != MAGIC:
        raise ImageFormatError(source, 'not a binary PGM, magic is {!r}'.format(raw[:2]))

    position = 2
    width, position = _read_token(raw, position, source)
    height, position = _read_token(raw, position, source)
    maxval, position = _read_token(raw, position, source)

    width = _header_int(width, 'width', source)
    height = _header_int(height, 'height', source)
    maxval = _header_int(maxval, 'maxval', source)

    if width < 1 or height < 1:
        raise ImageFormatError(source, 'zero-dimension image {}x{}'.format(width, height))
    if maxval != MAXVAL:
        raise UnsupportedImageDepth(source, maxval)
    if raw[position:position + 1] not in _WHITESPACE or position >= len(raw):
        raise ImageFormatError(source, 'missing whitespace after header')

    raster = raw[position + 1:position + 1 + width * height]
    if len(raster) != width * height:
        raise ImageFormatError(source, 'raster has {} bytes, expected {}'.format(len(raster), width * height))

    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def encode_pgm(matrix):
    """Encode an (H, W) matrix of integers in [0, 255] as canonical P5 bytes"""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.size == 0:
        raise ValueError('PGM image must be a non-empty 2-D matrix, got shape {}'.format(matrix.shape))
    if matrix.dtype != np.uint8:
        if not np.all(np.equal(np.mod(matrix, 1), 0)) or matrix.min() < 0 or matrix.max() > MAXVAL:
            raise ValueError('PGM pixels must be integers in [0, 255]')
        matrix = matrix.astype(np.uint8)

    height, width = matrix.shape
    header = 'P5\n{} {}\n{}\n'.format(width, height, MAXVAL)
    return header.encode('ascii') + np.ascontiguousarray(matrix).tobytes()


def load_image(path):
    """Read an 8-bit binary PGM file

    Returns:
        numpy.ndarray: (H, W) uint8 matrix with values in [0, 255]

    Raises:
        DataError: If the file does not exist or cannot be read
        ImageFormatError: If the file is not a valid 8-bit P5 image
    """
    try:
        with open(path, 'rb') as f:
            raw = f.read()
    except FileNotFoundError:
        raise DataError('{}: no such image file'.format(path))
    except OSError as error:
        raise DataError('{}: {}'.format(path, error))

    return decode_pgm(raw, path)


def save_image(path, matrix):
    """Write matrix as a canonical 8-bit binary PGM, creating parent directories"""
    payload = encode_pgm(matrix)
    try:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, 'wb') as f:
            f.write(payload)
    except OSError as error:
        raise DataError('{}: {}'.format(path, error))
