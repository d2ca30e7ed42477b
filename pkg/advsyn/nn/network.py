"""Network specifications and forward passes"""

import json
import logging

from advsyn.core.ops.base import as_tensor
from advsyn.exceptions import ShapeError
from advsyn.nn.layers import resolve_layer_class

logger = logging.getLogger(__name__)


class NetworkSpec(object):
    """Declarative layer stack

    Args:
        name (str): Network name, used as the ParamStore name
        input_shape (tuple(int)): Per-example input shape, (C, H, W) or (F,)
        layers (list(dict)): Layer definitions, see :mod:`advsyn.nn.layers`
    """

    def __init__(self, name, input_shape, layers):
        self.name = name
        self.input_shape = tuple(int(d) for d in input_shape)
        self.layers = [dict(layer) for layer in layers]

        names = [layer.get('name') for layer in self.layers]
        duplicates = sorted(set(n for n in names if names.count(n) > 1))
        if duplicates:
            raise ValueError('Duplicate layer names in {}: {}'.format(name, ', '.join(duplicates)))

    def __repr__(self):
        return '<{}: {} {} -> {} layers>'.format(self.__class__.__name__, self.name, self.input_shape, len(self.layers))

    def __eq__(self, other):
        return isinstance(other, NetworkSpec) and self.to_dict() == other.to_dict()

    def to_dict(self):
        return {'name': self.name, 'input_shape': list(self.input_shape), 'layers': self.layers}

    @classmethod
    def from_dict(cls, raw):
        return cls(raw['name'], raw['input_shape'], raw['layers'])

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))

    @classmethod
    def from_json(cls, raw):
        return cls.from_dict(json.loads(raw))


class ForwardContext(object):
    """Mode and randomness shared by the layers of one forward pass"""

    def __init__(self, mode='train', rng=None):
        if mode not in ('train', 'infer'):
            raise ValueError('mode must be train or infer, got {!r}'.format(mode))
        self.mode = mode
        self.rng = rng


class Network(object):
    """Executable form of a NetworkSpec

    Attributes:
        spec (NetworkSpec): Source specification
        layers (list(advsyn.nn.layers.Layer)): Instantiated layers
        shapes (list(tuple)): Per-example output shape after each layer

    Raises:
        ShapeError: If the layer stack cannot accept spec.input_shape
    """

    def __init__(self, spec):
        self.spec = spec
        self.layers = [resolve_layer_class(definition)(definition) for definition in spec.layers]

        self.shapes = []
        shape = spec.input_shape
        for layer in self.layers:
            shape = layer.output_shape(shape)
            self.shapes.append(shape)

    def __repr__(self):
        return '<{}: {} {} -> {}>'.format(self.__class__.__name__, self.spec.name, self.input_shape, self.output_shape)

    @property
    def input_shape(self):
        return self.spec.input_shape

    @property
    def output_shape(self):
        return self.shapes[-1] if self.shapes else self.input_shape

    def shape_after(self, layer_name):
        """Per-example shape produced by the named layer"""
        for layer, shape in zip(self.layers, self.shapes):
            if layer.name == layer_name:
                return shape
        raise KeyError(layer_name)

    def forward(self, params, x, mode='train', rng=None):
        """Run the layer stack on a batch

        Args:
            params (advsyn.nn.params.ParamStore): Parameters from :func:`~advsyn.nn.params.init_weights`
            x (Tensor|numpy.ndarray): Batch of shape (N,) + input_shape
            mode (str): ``train`` or ``infer``; controls dropout and batch normalization
            rng (advsyn.core.rng.Rng): Dropout stream, required in train mode when the stack has dropout

        Returns:
            Tensor: Batch of shape (N,) + output_shape
        """
        x = as_tensor(x)
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError(self.spec.name, 'expects examples of shape {}, got batch {}'.format(self.input_shape, x.shape))

        context = ForwardContext(mode, rng)
        for layer in self.layers:
            x = layer.forward(x, params, context)
        return x

    __call__ = forward
