"""Declarative layers

A layer is described by a plain definition dict such as
``{'type': 'conv2d', 'name': 'conv1', 'in_channels': 1, 'out_channels': 64, 'kernel': 4,
'stride': 2, 'padding': 1}``. :func:`resolve_layer_class` maps the ``type`` to the class
registered for it.
"""

from advsyn.core import ops
from advsyn.core.ops.normalization import BatchNormState
from advsyn.exceptions import ShapeError
from advsyn.utils import build_type_map


class Layer(object):
    """Base class for all layers

    Attributes:
        layer_type (str): Definition ``type`` handled by the class
        name (str): Unique layer name, prefix of its parameter names
        definition (dict): Source definition
    """

    layer_type = None

    # Definition keys and their defaults; None means required
    options = {}

    def __init__(self, definition):
        self.definition = dict(definition)
        self.name = self.definition.get('name')
        if not self.name:
            raise ValueError('Layer definition {!r} has no name'.format(definition))

        for key, default in self.options.items():
            value = self.definition.get(key, default)
            if value is None:
                raise ValueError("Layer '{}' ({}) requires '{}'".format(self.name, self.layer_type, key))
            setattr(self, key, value)

    def __repr__(self):
        return '<{}: {}>'.format(self.__class__.__name__, self.name)

    def param_shapes(self):
        """List of (suffix, shape, kind) for trainable parameters"""
        return []

    def buffer_init(self):
        """List of (suffix, initial array) for non-trainable buffers"""
        return []

    def output_shape(self, input_shape):
        """Per-example output shape for a per-example input shape, raising ShapeError when incompatible"""
        return input_shape

    def forward(self, x, params, context):
        raise NotImplementedError

    def _param(self, params, suffix):
        return params['{}.{}'.format(self.name, suffix)]

    def _require_rank(self, input_shape, rank):
        if len(input_shape) != rank:
            raise ShapeError(self.name, 'expects rank-{} examples, got {}'.format(rank, input_shape))


class Dense(Layer):
    layer_type = 'dense'
    options = {'in_features': None, 'out_features': None}

    def param_shapes(self):
        return [('weight', (self.in_features, self.out_features), 'kernel'), ('bias', (self.out_features,), 'bias')]

    def output_shape(self, input_shape):
        self._require_rank(input_shape, 1)
        if input_shape[0] != self.in_features:
            raise ShapeError(self.name, 'expects {} features, got {}'.format(self.in_features, input_shape[0]))
        return (self.out_features,)

    def forward(self, x, params, context):
        return ops.dense(x, self._param(params, 'weight'), self._param(params, 'bias'))


class Conv2D(Layer):
    layer_type = 'conv2d'
    options = {'in_channels': None, 'out_channels': None, 'kernel': 3, 'stride': 1, 'padding': 1}

    def param_shapes(self):
        return [
            ('weight', (self.out_channels, self.in_channels, self.kernel, self.kernel), 'kernel'),
            ('bias', (self.out_channels,), 'bias'),
        ]

    def output_shape(self, input_shape):
        self._require_rank(input_shape, 3)
        channels, height, width = input_shape
        if channels != self.in_channels:
            raise ShapeError(self.name, 'expects {} channels, got {}'.format(self.in_channels, channels))
        if min(height, width) + 2 * self.padding < self.kernel:
            raise ShapeError(self.name, 'input {}x{} is too small for kernel {}'.format(height, width, self.kernel))
        return (
            self.out_channels,
            ops.conv_output_size(height, self.kernel, self.stride, self.padding),
            ops.conv_output_size(width, self.kernel, self.stride, self.padding),
        )

    def forward(self, x, params, context):
        return ops.conv2d(x, self._param(params, 'weight'), self._param(params, 'bias'), self.stride, self.padding)


class Conv2DTranspose(Layer):
    layer_type = 'conv2d_transpose'
    options = {'in_channels': None, 'out_channels': None, 'kernel': 4, 'stride': 2, 'padding': 1}

    def param_shapes(self):
        return [
            ('weight', (self.in_channels, self.out_channels, self.kernel, self.kernel), 'kernel'),
            ('bias', (self.out_channels,), 'bias'),
        ]

    def output_shape(self, input_shape):
        self._require_rank(input_shape, 3)
        channels, height, width = input_shape
        if channels != self.in_channels:
            raise ShapeError(self.name, 'expects {} channels, got {}'.format(self.in_channels, channels))
        return (
            self.out_channels,
            ops.conv_transpose_output_size(height, self.kernel, self.stride, self.padding),
            ops.conv_transpose_output_size(width, self.kernel, self.stride, self.padding),
        )

    def forward(self, x, params, context):
        return ops.conv2d_transpose(
            x,
            self._param(params, 'weight'),
            self._param(params, 'bias'),
            self.stride,
            self.padding
        )


class Activation(Layer):
    layer_type = 'activation'
    options = {'kind': None, 'alpha': 0.2}

    def forward(self, x, params, context):
        return ops.activation(x, self.kind, self.alpha)


class BatchNorm(Layer):
    layer_type = 'batchnorm'
    options = {'channels': None, 'momentum': 0.9, 'epsilon': 1e-5}

    def param_shapes(self):
        return [('gamma', (self.channels,), 'gamma'), ('beta', (self.channels,), 'beta')]

    def buffer_init(self):
        state = BatchNormState(self.channels)
        return [('running_mean', state.mean), ('running_var', state.var)]

    def output_shape(self, input_shape):
        self._require_rank(input_shape, 3)
        if input_shape[0] != self.channels:
            raise ShapeError(self.name, 'expects {} channels, got {}'.format(self.channels, input_shape[0]))
        return input_shape

    def forward(self, x, params, context):
        mean_key = '{}.running_mean'.format(self.name)
        var_key = '{}.running_var'.format(self.name)
        state = BatchNormState(mean=params.buffer(mean_key), var=params.buffer(var_key))

        out = ops.batchnorm(
            x,
            self._param(params, 'gamma'),
            self._param(params, 'beta'),
            state,
            context.mode,
            self.momentum,
            self.epsilon
        )

        if context.mode == 'train':
            params.buffers[mean_key] = state.mean
            params.buffers[var_key] = state.var

        return out


class MaxPool(Layer):
    layer_type = 'maxpool2d'
    options = {'window': 2, 'stride': 2}

    def output_shape(self, input_shape):
        self._require_rank(input_shape, 3)
        channels, height, width = input_shape
        if self.window > height or self.window > width:
            raise ShapeError(self.name, 'window {} is larger than input {}x{}'.format(self.window, height, width))
        return (
            channels,
            ops.conv_output_size(height, self.window, self.stride, 0),
            ops.conv_output_size(width, self.window, self.stride, 0),
        )

    def forward(self, x, params, context):
        return ops.maxpool2d(x, self.window, self.stride)


class GlobalAvgPool(Layer):
    layer_type = 'global_avg_pool'

    def output_shape(self, input_shape):
        self._require_rank(input_shape, 3)
        return (input_shape[0],)

    def forward(self, x, params, context):
        return ops.global_avg_pool(x)


class Dropout(Layer):
    layer_type = 'dropout'
    options = {'rate': None}

    def forward(self, x, params, context):
        if context.mode == 'train' and self.rate > 0 and context.rng is None:
            raise ValueError('{}: train mode needs a dropout rng'.format(self.name))
        return ops.dropout(x, self.rate, context.rng, context.mode)


class Reshape(Layer):
    layer_type = 'reshape'
    options = {'shape': None}

    def output_shape(self, input_shape):
        shape = tuple(self.shape)
        size = 1
        for dim in input_shape:
            size *= dim
        target = 1
        for dim in shape:
            target *= dim
        if size != target:
            raise ShapeError(self.name, 'cannot reshape {} into {}'.format(input_shape, shape))
        return shape

    def forward(self, x, params, context):
        return ops.reshape(x, (x.shape[0],) + tuple(self.shape))


class Flatten(Layer):
    layer_type = 'flatten'

    def output_shape(self, input_shape):
        size = 1
        for dim in input_shape:
            size *= dim
        return (size,)

    def forward(self, x, params, context):
        return ops.flatten(x)


_LAYER_TYPE_MAP = build_type_map(Layer, 'layer_type')


def resolve_layer_class(definition):
    """Return the layer class registered for definition['type']"""
    try:
        return _LAYER_TYPE_MAP[definition['type']]
    except KeyError:
        raise ValueError('No layer available to handle type {!r}, expected one of {}'.format(
            definition.get('type'),
            ', '.join(sorted(_LAYER_TYPE_MAP))
        ))
