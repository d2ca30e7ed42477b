"""Elementwise activations"""

import numpy as np
from scipy.special import expit

from advsyn.core.tensor import make_result
from advsyn.core.ops.base import register, as_tensor

KINDS = ('relu', 'leaky_relu', 'tanh', 'sigmoid')


@register('relu')
def relu(x):
    x = as_tensor(x)
    positive = x.data > 0

    return make_result('relu', np.where(positive, x.data, 0.0), (x,), lambda grad: (grad * positive,))


@register('leaky_relu')
def leaky_relu(x, alpha=0.2):
    """max(x, 0) + alpha * min(x, 0), alpha in (0, 1)"""
    if not 0 < alpha < 1:
        raise ValueError('leaky_relu alpha must be in (0, 1), got {!r}'.format(alpha))

    x = as_tensor(x)
    slope = np.where(x.data > 0, 1.0, alpha)

    return make_result('leaky_relu', x.data * slope, (x,), lambda grad: (grad * slope,))


@register('tanh')
def tanh(x):
    x = as_tensor(x)
    out = np.tanh(x.data)

    return make_result('tanh', out, (x,), lambda grad: (grad * (1.0 - out * out),))


@register('sigmoid')
def sigmoid(x):
    x = as_tensor(x)
    out = expit(x.data)

    return make_result('sigmoid', out, (x,), lambda grad: (grad * out * (1.0 - out),))


def activation(x, kind, alpha=0.2):
    """Apply the activation named by kind

    Args:
        x (Tensor): Any-shape input
        kind (str): One of ``relu``, ``leaky_relu``, ``tanh``, ``sigmoid``
        alpha (float): Negative slope, leaky_relu only

    Raises:
        ValueError: Unknown kind or alpha outside (0, 1)
    """
    if kind == 'relu':
        return relu(x)
    if kind == 'leaky_relu':
        return leaky_relu(x, alpha)
    if kind == 'tanh':
        return tanh(x)
    if kind == 'sigmoid':
        return sigmoid(x)

    raise ValueError('Unknown activation {!r}, expected one of {}'.format(kind, ', '.join(KINDS)))
