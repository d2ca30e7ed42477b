"""Arithmetic, reduction and reshaping helpers used to compose losses and networks"""

import numpy as np

from advsyn.core.tensor import make_result
from advsyn.core.ops.base import register, as_tensor, scalar
from advsyn.exceptions import ShapeError


@register('add')
def add(a, b):
    """Elementwise sum of two same-shape tensors"""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError('add', 'shapes {} and {} differ'.format(a.shape, b.shape))

    return make_result('add', a.data + b.data, (a, b), lambda grad: (grad, grad))


@register('scale')
def scale(x, factor):
    """Multiply by a python scalar"""
    x = as_tensor(x)
    factor = float(factor)

    return make_result('scale', x.data * factor, (x,), lambda grad: (grad * factor,))


@register('sum')
def sum(x):
    """Sum of all elements as a 0-d tensor"""
    x = as_tensor(x)

    return make_result('sum', np.sum(x.data), (x,), lambda grad: (np.full(x.shape, scalar(grad)),))


@register('mean')
def mean(x):
    """Mean of all elements as a 0-d tensor"""
    x = as_tensor(x)
    if x.size == 0:
        raise ShapeError('mean', 'empty input')
    count = x.size

    return make_result('mean', np.mean(x.data), (x,), lambda grad: (np.full(x.shape, scalar(grad) / count),))


@register('reshape')
def reshape(x, shape):
    """Row-major reshape; one dimension may be -1"""
    x = as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError('reshape', 'cannot reshape {} into {}'.format(x.shape, tuple(shape)))

    return make_result('reshape', out, (x,), lambda grad: (grad.reshape(x.shape),))


def flatten(x):
    """Collapse every dimension after the batch axis"""
    x = as_tensor(x)
    return reshape(x, (x.shape[0], -1))
