"""Adam optimizer"""

import logging

import numpy as np
from sortedcontainers import SortedDict

from advsyn.exceptions import DivergenceError, ShapeError

logger = logging.getLogger(__name__)


class AdamState(object):
    """Bias-corrected Adam moments for one set of parameters

    Args:
        lr (float): Step size, > 0; mutable so schedules can lower it
        beta1 (float): First-moment decay in (0, 1)
        beta2 (float): Second-moment decay in (0, 1)
        epsilon (float): Denominator offset

    Attributes:
        m (SortedDict): First moment per parameter name
        v (SortedDict): Second moment per parameter name, elementwise >= 0
        t (int): Number of completed steps
    """

    def __init__(self, lr=0.0002, beta1=0.5, beta2=0.999, epsilon=1e-8):
        if lr <= 0:
            raise ValueError('Adam lr must be > 0, got {!r}'.format(lr))
        for name, beta in (('beta1', beta1), ('beta2', beta2)):
            if not 0 < beta < 1:
                raise ValueError('Adam {} must be in (0, 1), got {!r}'.format(name, beta))

        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self.m = SortedDict()
        self.v = SortedDict()
        self.t = 0

    def __repr__(self):
        return '<{}: lr={} t={}>'.format(self.__class__.__name__, self.lr, self.t)

    def copy(self):
        clone = AdamState(self.lr, self.beta1, self.beta2, self.epsilon)
        clone.m = SortedDict((k, v.copy()) for k, v in self.m.items())
        clone.v = SortedDict((k, v.copy()) for k, v in self.v.items())
        clone.t = self.t
        return clone


def adam_step(params, grads, state):
    """Apply one Adam update in place

    Args:
        params (Mapping): Parameter name to :class:`~advsyn.core.tensor.Tensor`, e.g. a ParamStore
        grads (Mapping): Parameter name to gradient array of the same shape
        state (AdamState): Moments, updated in place

    Returns:
        tuple: (params, state)

    Raises:
        DivergenceError: If any gradient contains NaN or inf, naming the parameter; nothing is updated
        ShapeError: If a gradient shape differs from its parameter
    """
    names = list(params.keys())

    for name in names:
        grad = grads[name]
        if grad.shape != params[name].shape:
            raise ShapeError('adam_step', 'gradient for {} has shape {}, parameter has {}'.format(
                name,
                grad.shape,
                params[name].shape
            ))
        if not np.all(np.isfinite(grad)):
            raise DivergenceError('gradient of parameter {}'.format(name), step=state.t + 1)

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t

    for name in names:
        grad = grads[name]
        param = params[name]

        if name not in state.m:
            state.m[name] = np.zeros_like(param.data)
            state.v[name] = np.zeros_like(param.data)

        m = state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * grad
        v = state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * (grad * grad)

        param.data -= state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)

    return params, state
