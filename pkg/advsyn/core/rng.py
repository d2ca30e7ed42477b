"""Seeded random number generation with independent named streams

Every consumer draws from its own stream so that, for example, changing the number of dropout
draws never shifts the noise vectors fed to the generator. The generator is numpy's ``PCG64``
(a 128-bit state permuted congruential generator emitting 64-bit outputs); stream ``k`` of seed
``s`` is seeded with ``SeedSequence(s, spawn_key=(k,))``. Both algorithms are specified by numpy and
produce identical sequences on every platform.
"""

import json

import numpy as np

STREAMS = (
    'weights',
    'noise',
    'dropout',
    'augmentation',
    'split',
    'shuffle',
    'phantom',
    'probe',
)

_SEED_MASK = (1 << 64) - 1


class Rng(object):
    """Deterministic random source for one named stream

    Args:
        seed (int): Unsigned 64-bit run seed
        stream (str): One of :data:`STREAMS`, or None for the root stream

    Attributes:
        seed (int): Run seed
        stream (str): Stream name, or None
    """

    def __init__(self, seed, stream=None):
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
            raise TypeError('seed must be an integer, got {!r}'.format(seed))
        if seed < 0 or seed > _SEED_MASK:
            raise ValueError('seed must fit in 64 unsigned bits, got {}'.format(seed))

        self.seed = int(seed)
        self.stream = stream

        if stream is None:
            sequence = np.random.SeedSequence(self.seed)
        else:
            if stream not in STREAMS:
                raise ValueError('Unknown rng stream {!r}, expected one of {}'.format(stream, ', '.join(STREAMS)))
            sequence = np.random.SeedSequence(self.seed, spawn_key=(STREAMS.index(stream),))

        self._bit_generator = np.random.PCG64(sequence)
        self._generator = np.random.Generator(self._bit_generator)

    def __repr__(self):
        return '<{}: seed={} stream={}>'.format(self.__class__.__name__, self.seed, self.stream)

    def spawn(self, stream):
        """Return a fresh generator for another named stream of the same seed"""
        return Rng(self.seed, stream)

    @property
    def state(self):
        """JSON-serializable generator state"""
        return {
            'seed': self.seed,
            'stream': self.stream,
            'bit_generator': self._bit_generator.state,
        }

    @state.setter
    def state(self, value):
        if value.get('stream') != self.stream:
            raise ValueError('Cannot load state of stream {!r} into stream {!r}'.format(value.get('stream'), self.stream))
        self._bit_generator.state = value['bit_generator']

    def state_bytes(self):
        """Canonical UTF-8 JSON encoding of :attr:`state`"""
        return json.dumps(self.state, sort_keys=True, separators=(',', ':')).encode('utf-8')

    @classmethod
    def from_state_bytes(cls, raw):
        state = json.loads(raw.decode('utf-8'))
        rng = cls(state['seed'], state['stream'])
        rng.state = state
        return rng

    # Draws

    def normal(self, size, mean=0.0, std=1.0):
        return self._generator.normal(mean, std, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._generator.uniform(low, high, size)

    def random(self, size=None):
        return self._generator.random(size)

    def integers(self, low, high=None, size=None):
        return self._generator.integers(low, high, size)

    def permutation(self, n):
        return self._generator.permutation(n)

    def keep_mask(self, shape, rate):
        """Boolean mask where each element survives with probability 1 - rate"""
        return self._generator.random(shape) >= rate
