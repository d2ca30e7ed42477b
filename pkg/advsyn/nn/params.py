"""Named parameter storage and initialization"""

import contextlib
import hashlib
import logging

import numpy as np
from sortedcontainers import SortedDict

from advsyn.core.tensor import Tensor
from advsyn.exceptions import UnknownParameter

logger = logging.getLogger(__name__)

INIT_STD = 0.02

#: Parameter kinds and their initial values; kernels draw from Normal(0, INIT_STD)
KINDS = ('kernel', 'bias', 'gamma', 'beta')


class ParamStore(object):
    """Trainable tensors and non-trainable buffers of one network, iterated in name order

    Attributes:
        name (str): Owning network name
        kinds (SortedDict): Parameter name to one of :data:`KINDS`
        buffers (SortedDict): Buffer name to array (batch normalization running statistics)
    """

    def __init__(self, name='params'):
        self.name = name
        self._params = SortedDict()
        self.kinds = SortedDict()
        self.buffers = SortedDict()

    def __repr__(self):
        return '<{}: {} ({} tensors, {} values)>'.format(
            self.__class__.__name__,
            self.name,
            len(self._params),
            self.count()
        )

    def __len__(self):
        return len(self._params)

    def __iter__(self):
        return iter(self._params)

    def __contains__(self, name):
        return name in self._params

    def __getitem__(self, name):
        try:
            return self._params[name]
        except KeyError:
            raise UnknownParameter(self, name, self._params.keys())

    def keys(self):
        return self._params.keys()

    def items(self):
        return self._params.items()

    def values(self):
        return self._params.values()

    def add(self, name, data, kind):
        if kind not in KINDS:
            raise ValueError('Unknown parameter kind {!r}'.format(kind))
        self._params[name] = Tensor(np.array(data, dtype=np.float64), requires_grad=True)
        self.kinds[name] = kind

    def buffer(self, name):
        try:
            return self.buffers[name]
        except KeyError:
            raise UnknownParameter(self, name, self.buffers.keys())

    def count(self):
        """Total number of scalar parameters"""
        return sum(t.size for t in self._params.values())

    def kernels(self):
        """Convolution and dense weight tensors, the targets of L2 regularization"""
        return [t for name, t in self._params.items() if self.kinds[name] == 'kernel']

    def copy(self):
        clone = ParamStore(self.name)
        for name, tensor in self._params.items():
            clone.add(name, tensor.data, self.kinds[name])
        for name, value in self.buffers.items():
            clone.buffers[name] = np.array(value, copy=True)
        return clone

    def load(self, other):
        """Overwrite values in place from another store with the same names"""
        for name, tensor in self._params.items():
            tensor.data[...] = other[name].data
        for name in self.buffers:
            self.buffers[name] = np.array(other.buffer(name), copy=True)

    @contextlib.contextmanager
    def frozen(self):
        """Temporarily stop gradients flowing to every parameter"""
        previous = [(t, t.requires_grad) for t in self._params.values()]
        for tensor, _ in previous:
            tensor.requires_grad = False
        try:
            yield self
        finally:
            for tensor, flag in previous:
                tensor.requires_grad = flag

    def fingerprint(self):
        """SHA-256 over names and little-endian bytes of every parameter and buffer"""
        digest = hashlib.sha256()
        for group in (self._params.items(), self.buffers.items()):
            for name, value in group:
                data = value.data if isinstance(value, Tensor) else value
                digest.update(name.encode('utf-8'))
                digest.update(np.ascontiguousarray(data, dtype='<f8').tobytes())
        return digest.hexdigest()


def init_weights(spec, rng):
    """Create a ParamStore for every layer of spec

    Kernels are drawn from Normal(0, 0.02) in layer order, biases and batch normalization shifts
    start at 0, scales at 1, running means at 0 and running variances at 1.

    Args:
        spec (advsyn.nn.network.NetworkSpec): Network description
        rng (advsyn.core.rng.Rng): Normally the ``weights`` stream

    Returns:
        ParamStore: Freshly initialized parameters
    """
    from advsyn.nn.network import Network

    store = ParamStore(spec.name)

    for layer in Network(spec).layers:
        for suffix, shape, kind in layer.param_shapes():
            name = '{}.{}'.format(layer.name, suffix)
            if kind == 'kernel':
                value = rng.normal(shape, 0.0, INIT_STD)
            elif kind == 'gamma':
                value = np.ones(shape)
            else:
                value = np.zeros(shape)
            store.add(name, value, kind)

        for suffix, value in layer.buffer_init():
            store.buffers['{}.{}'.format(layer.name, suffix)] = value

    logger.debug('Initialized {!r}'.format(store))

    return store
