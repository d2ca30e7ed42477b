import numpy as np

from advsyn.core.tensor import make_result
from advsyn.core.ops.base import register, as_tensor, check_rank, grad_if
from advsyn.exceptions import ShapeError

MODES = ('train', 'infer')


class BatchNormState(object):
    """Running per-channel statistics updated by train-mode batch normalization

    Attributes:
        mean (numpy.ndarray): Running mean, shape (C,)
        var (numpy.ndarray): Running biased variance, shape (C,)
    """

    def __init__(self, channels=None, mean=None, var=None):
        self.mean = np.zeros(channels) if mean is None else np.asarray(mean, dtype=np.float64)
        self.var = np.ones(channels) if var is None else np.asarray(var, dtype=np.float64)

    def __repr__(self):
        return '<{}: {} channels>'.format(self.__class__.__name__, self.mean.shape[0])


@register('batchnorm')
def batchnorm(x, gamma, beta, state, mode='train', momentum=0.9, epsilon=1e-5):
    """Per-channel batch normalization with learned scale and shift

    Train mode normalizes by the batch mean and biased variance over (N, H, W) and updates
    ``state`` in place as ``running = momentum * running + (1 - momentum) * batch``. Infer mode
    normalizes by the running statistics and leaves them untouched.

    Args:
        x (Tensor): Input of shape (N, C, H, W)
        gamma (Tensor): Scale, shape (C,)
        beta (Tensor): Shift, shape (C,)
        state (BatchNormState): Running statistics
        mode (str): ``train`` or ``infer``
        momentum (float): Running-average retention in [0, 1)
        epsilon (float): Variance floor, > 0

    Raises:
        ShapeError: Zero-size batch or channel mismatch
        ValueError: Unknown mode or non-positive epsilon
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    check_rank('batchnorm', x, 4)

    if mode not in MODES:
        raise ValueError('batchnorm mode must be one of {}, got {!r}'.format(MODES, mode))
    if epsilon <= 0:
        raise ValueError('batchnorm epsilon must be > 0, got {!r}'.format(epsilon))

    n, c, h, w = x.shape
    if n * h * w < 1:
        raise ShapeError('batchnorm', 'zero-size batch {}'.format(x.shape))
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError('batchnorm', 'gamma/beta must have shape ({},), got {} and {}'.format(c, gamma.shape, beta.shape))

    axes = (0, 2, 3)

    def channel(values):
        return values[None, :, None, None]

    if mode == 'train':
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        state.mean = momentum * state.mean + (1.0 - momentum) * mean
        state.var = momentum * state.var + (1.0 - momentum) * var
    else:
        mean = state.mean
        var = state.var

    inv_std = 1.0 / np.sqrt(var + epsilon)
    x_hat = (x.data - channel(mean)) * channel(inv_std)
    out = channel(gamma.data) * x_hat + channel(beta.data)

    def backward(grad):
        def input_grad():
            g_hat = grad * channel(gamma.data)
            if mode == 'infer':
                return g_hat * channel(inv_std)
            count = n * h * w
            return channel(inv_std / count) * (
                count * g_hat
                - channel(g_hat.sum(axis=axes))
                - x_hat * channel((g_hat * x_hat).sum(axis=axes))
            )

        return (
            grad_if(x, input_grad),
            grad_if(gamma, lambda: (grad * x_hat).sum(axis=axes)),
            grad_if(beta, lambda: grad.sum(axis=axes)),
        )

    return make_result('batchnorm', out, (x, gamma, beta), backward)
