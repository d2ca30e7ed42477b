"""Binary checkpoint format

Layout, all integers little-endian::

    b"ADVSYN1\\n"                 magic
    u32 version
    u32 record count
    per record, in name order:
        u32 name length, UTF-8 name
        u8  dtype tag (1 = float64, 2 = int64, 3 = uint8 bytes)
        u32 rank, rank x u64 dims
        payload, little-endian, row-major
    u64 checksum                  first 8 bytes of BLAKE2b(digest_size=8) over everything before it

Records are kept sorted by name, so saving a loaded checkpoint reproduces the file byte for byte.

Record names used by the trainers:

    ``param/<net>/<name>``, ``buffer/<net>/<name>``      network tensors
    ``meta/kinds/<net>``, ``meta/spec/<net>``            parameter kinds and network spec (JSON)
    ``meta/config``                                       trainer configuration (JSON)
    ``adam/<group>/m/<name>``, ``adam/<group>/v/<name>`` optimizer moments
    ``adam/<group>/t``, ``adam/<group>/hyper``           step count and (lr, beta1, beta2, epsilon)
    ``rng/<key>``                                         generator state (JSON)
    ``counter/<key>``                                     integer counters
"""

import hashlib
import json
import logging
import os
import struct

import numpy as np
from sortedcontainers import SortedDict

from advsyn.core.rng import Rng
from advsyn.exceptions import CheckpointError, ChecksumMismatch, DataError, UnsupportedCheckpointVersion
from advsyn.nn.network import NetworkSpec
from advsyn.nn.optim import AdamState
from advsyn.nn.params import ParamStore

logger = logging.getLogger(__name__)

MAGIC = b'ADVSYN1\n'
VERSION = 1
MIN_VERSION = 1

_DTYPES = {
    1: np.dtype('<f8'),
    2: np.dtype('<i8'),
    3: np.dtype('u1'),
}
_TAGS = {dtype.kind + str(dtype.itemsize): tag for tag, dtype in _DTYPES.items()}


def _checksum(raw):
    return struct.unpack('<Q', hashlib.blake2b(raw, digest_size=8).digest())[0]


def _canonical(array):
    array = np.asarray(array)
    if array.dtype == np.bool_ or array.dtype == np.uint8:
        return array.astype('u1')
    if np.issubdtype(array.dtype, np.integer):
        return array.astype('<i8')
    if np.issubdtype(array.dtype, np.floating):
        return array.astype('<f8')
    raise CheckpointError('cannot store arrays of dtype {}'.format(array.dtype))


class _Reader(object):

    def __init__(self, raw, source):
        self.raw = raw
        self.source = source
        self.position = 0

    def take(self, size):
        end = self.position + size
        if end > len(self.raw):
            raise CheckpointError('{}: truncated at byte {}'.format(self.source, self.position))
        chunk = self.raw[self.position:end]
        self.position = end
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


class Checkpoint(object):
    """Named arrays with typed accessors for trainer state

    Attributes:
        records (SortedDict): Record name to numpy array
    """

    def __init__(self):
        self.records = SortedDict()

    def __repr__(self):
        return '<{}: {} records>'.format(self.__class__.__name__, len(self.records))

    def __contains__(self, name):
        return name in self.records

    def __eq__(self, other):
        return isinstance(other, Checkpoint) and self.to_bytes() == other.to_bytes()

    def names(self, prefix=''):
        return [name for name in self.records.irange(minimum=prefix) if name.startswith(prefix)]

    def get(self, name):
        try:
            return self.records[name]
        except KeyError:
            raise CheckpointError('checkpoint has no record {!r}'.format(name))

    # Typed records

    def put_array(self, name, array):
        self.records[name] = np.ascontiguousarray(_canonical(array))

    def put_bytes(self, name, raw):
        self.records[name] = np.frombuffer(bytes(raw), dtype='u1').copy()

    def get_bytes(self, name):
        return self.get(name).tobytes()

    def put_json(self, name, data):
        self.put_bytes(name, json.dumps(data, sort_keys=True, separators=(',', ':')).encode('utf-8'))

    def get_json(self, name):
        return json.loads(self.get_bytes(name).decode('utf-8'))

    def put_int(self, name, value):
        self.put_array(name, np.array(int(value), dtype='<i8'))

    def get_int(self, name):
        return int(self.get(name))

    # Composite records

    def put_params(self, store):
        prefix = store.name
        for name, tensor in store.items():
            self.put_array('param/{}/{}'.format(prefix, name), tensor.data)
        for name, value in store.buffers.items():
            self.put_array('buffer/{}/{}'.format(prefix, name), value)
        self.put_json('meta/kinds/{}'.format(prefix), dict(store.kinds))

    def get_params(self, name):
        store = ParamStore(name)
        for param, kind in sorted(self.get_json('meta/kinds/{}'.format(name)).items()):
            store.add(param, self.get('param/{}/{}'.format(name, param)), kind)
        prefix = 'buffer/{}/'.format(name)
        for record in self.names(prefix):
            store.buffers[record[len(prefix):]] = self.get(record).copy()
        return store

    def put_spec(self, spec):
        self.put_json('meta/spec/{}'.format(spec.name), spec.to_dict())

    def get_spec(self, name):
        return NetworkSpec.from_dict(self.get_json('meta/spec/{}'.format(name)))

    def put_adam(self, group, state):
        for name, value in state.m.items():
            self.put_array('adam/{}/m/{}'.format(group, name), value)
        for name, value in state.v.items():
            self.put_array('adam/{}/v/{}'.format(group, name), value)
        self.put_int('adam/{}/t'.format(group), state.t)
        self.put_array('adam/{}/hyper'.format(group), [state.lr, state.beta1, state.beta2, state.epsilon])

    def get_adam(self, group):
        lr, beta1, beta2, epsilon = self.get('adam/{}/hyper'.format(group)).tolist()
        state = AdamState(lr, beta1, beta2, epsilon)
        state.t = self.get_int('adam/{}/t'.format(group))
        for moment in ('m', 'v'):
            prefix = 'adam/{}/{}/'.format(group, moment)
            target = getattr(state, moment)
            for record in self.names(prefix):
                target[record[len(prefix):]] = self.get(record).copy()
        return state

    def put_rng(self, key, rng):
        self.put_bytes('rng/{}'.format(key), rng.state_bytes())

    def get_rng(self, key):
        return Rng.from_state_bytes(self.get_bytes('rng/{}'.format(key)))

    # Encoding

    def to_bytes(self):
        chunks = [MAGIC, struct.pack('<II', VERSION, len(self.records))]

        for name, array in self.records.items():
            encoded = name.encode('utf-8')
            dtype = array.dtype
            chunks.append(struct.pack('<I', len(encoded)))
            chunks.append(encoded)
            chunks.append(struct.pack('<BI', _TAGS[dtype.kind + str(dtype.itemsize)], array.ndim))
            chunks.append(struct.pack('<{}Q'.format(array.ndim), *array.shape))
            chunks.append(array.astype(_DTYPES[_TAGS[dtype.kind + str(dtype.itemsize)]]).tobytes())

        body = b''.join(chunks)
        return body + struct.pack('<Q', _checksum(body))

    @classmethod
    def from_bytes(cls, raw, source='<bytes>'):
        """Decode checkpoint bytes

        Raises:
            ChecksumMismatch: If the trailing checksum does not match
            UnsupportedCheckpointVersion: If the format version is unknown
            CheckpointError: Bad magic, truncation or an unknown dtype tag
        """
        if raw[:len(MAGIC)] != MAGIC:
            raise CheckpointError('{}: not a checkpoint, bad magic {!r}'.format(source, raw[:len(MAGIC)]))
        if len(raw) < len(MAGIC) + 16:
            raise CheckpointError('{}: truncated checkpoint'.format(source))

        body, trailer = raw[:-8], raw[-8:]
        expected = struct.unpack('<Q', trailer)[0]
        actual = _checksum(body)
        if expected != actual:
            raise ChecksumMismatch(source, expected, actual)

        reader = _Reader(body, source)
        reader.take(len(MAGIC))
        version, count = reader.unpack('<II')
        if not MIN_VERSION <= version <= VERSION:
            raise UnsupportedCheckpointVersion(source, version, MIN_VERSION, VERSION)

        checkpoint = cls()
        for _ in range(count):
            (name_length,) = reader.unpack('<I')
            name = reader.take(name_length).decode('utf-8')
            tag, rank = reader.unpack('<BI')
            if tag not in _DTYPES:
                raise CheckpointError('{}: record {!r} has unknown dtype tag {}'.format(source, name, tag))
            shape = reader.unpack('<{}Q'.format(rank))
            dtype = _DTYPES[tag]
            size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
            checkpoint.records[name] = np.frombuffer(reader.take(size), dtype=dtype).reshape(shape).copy()

        if reader.position != len(body):
            raise CheckpointError('{}: {} trailing bytes after records'.format(source, len(body) - reader.position))

        return checkpoint

    def save(self, path):
        raw = self.to_bytes()
        try:
            parent = os.path.dirname(path)
            if parent:
                os.makedirs(parent, exist_ok=True)
            with open(path, 'wb') as f:
                f.write(raw)
        except OSError as error:
            raise DataError('{}: {}'.format(path, error))

        logger.debug('Saved {} records ({} bytes) to {}'.format(len(self.records), len(raw), path))
        return path

    @classmethod
    def load(cls, path):
        try:
            with open(path, 'rb') as f:
                raw = f.read()
        except OSError as error:
            raise DataError('{}: {}'.format(path, error))

        checkpoint = cls.from_bytes(raw, path)
        logger.debug('Loaded {} records from {}'.format(len(checkpoint.records), path))
        return checkpoint
