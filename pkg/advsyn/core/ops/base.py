"""Operation registry and shared argument checks"""

import functools
import numbers

import numpy as np

from advsyn.exceptions import ShapeError
from advsyn.core.tensor import Tensor

#: Every differentiable operation by name
REGISTRY = {}


def register(name):
    """Decorator adding an operation function to :data:`REGISTRY` under name"""

    def decorator(func):
        if name in REGISTRY:
            raise ValueError('Operation "{}" registered twice'.format(name))

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            return func(*args, **kwargs)

        wrapper.op_name = name
        REGISTRY[name] = wrapper
        return wrapper

    return decorator


def as_tensor(value):
    """Return value unchanged if already a Tensor, otherwise wrap as a constant"""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def check_rank(op, tensor, rank, label='input'):
    if tensor.ndim != rank:
        raise ShapeError(op, '{} must have rank {}, got shape {}'.format(label, rank, tensor.shape))


def check_positive_int(op, value, label):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ShapeError(op, '{} must be a positive integer, got {!r}'.format(label, value))


def check_non_negative_int(op, value, label):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 0:
        raise ShapeError(op, '{} must be a non-negative integer, got {!r}'.format(label, value))


def grad_if(tensor, compute):
    """Return compute() when tensor needs a gradient, else None"""
    return compute() if tensor.requires_grad else None


def scalar(grad):
    """Value of a single-element gradient array as a python float"""
    return np.asarray(grad).reshape(()).item()
