"""Differentiable tensor operations

Importing this package registers every operation in :data:`REGISTRY`.
"""

from advsyn.core.ops.base import REGISTRY, register, as_tensor
from advsyn.core.ops.basic import add, scale, sum, mean, reshape, flatten
from advsyn.core.ops.conv import (
    conv2d,
    conv2d_transpose,
    conv2d_reference,
    conv2d_transpose_reference,
    conv_output_size,
    conv_transpose_output_size,
)
from advsyn.core.ops.dense import dense
from advsyn.core.ops.activation import activation, relu, leaky_relu, tanh, sigmoid
from advsyn.core.ops.pooling import maxpool2d, global_avg_pool
from advsyn.core.ops.normalization import batchnorm, BatchNormState
from advsyn.core.ops.dropout import dropout

__all__ = [
    'REGISTRY',
    'register',
    'as_tensor',
    'add',
    'scale',
    'sum',
    'mean',
    'reshape',
    'flatten',
    'conv2d',
    'conv2d_transpose',
    'conv2d_reference',
    'conv2d_transpose_reference',
    'conv_output_size',
    'conv_transpose_output_size',
    'dense',
    'activation',
    'relu',
    'leaky_relu',
    'tanh',
    'sigmoid',
    'maxpool2d',
    'global_avg_pool',
    'batchnorm',
    'BatchNormState',
    'dropout',
]
